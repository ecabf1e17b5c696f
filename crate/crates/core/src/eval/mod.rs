//! Agreement metrics, multi-window scoring and plot exports.

mod export;
mod metrics;
mod multi;

pub use export::{bland_altman_svg, export_bland_altman, export_scatter, scatter_svg};
pub use metrics::{compute_metrics, render_table, BlandAltman, EvalReport, WindowError};
pub use multi::{multi_window_eval, MultiWindowTable, WindowSeries, BASE_WINDOW_S};
