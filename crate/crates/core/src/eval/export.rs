//! CSV and SVG renderings of an [`EvalReport`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::{BlandAltman, EvalReport};
use crate::error::{Error, Result};

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;

/// Affine map from a data range onto the plot area.
struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let pad = ((hi - lo) * 0.05).max(1e-6);
        Self { lo: lo - pad, hi: hi + pad }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.lo) / (self.hi - self.lo) * (SIZE - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - MARGIN - (v - self.lo) / (self.hi - self.lo) * (SIZE - 2.0 * MARGIN)
    }
}

fn svg_open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        SIZE / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#,
        SIZE / 2.0,
        SIZE - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 12 {})">{ylabel}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{w}" height="{w}" fill="none" stroke="black"/>"#,
        w = SIZE - 2.0 * MARGIN
    );
    s
}

fn non_empty(r: &EvalReport) -> Result<()> {
    if r.per_window.is_empty() {
        return Err(Error::Empty("report has no windows".into()));
    }
    Ok(())
}

/// Scatter of prediction against reference with the identity line.
pub fn scatter_svg(r: &EvalReport) -> Result<String> {
    non_empty(r)?;
    let axis = Axis::new(r.per_window.iter().flat_map(|w| [w.reference, w.prediction]));
    let mut s = svg_open("Prediction vs reference", "reference", "prediction");
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-dasharray="6,4"/>"#,
        axis.x(axis.lo),
        axis.y(axis.lo),
        axis.x(axis.hi),
        axis.y(axis.hi)
    );
    for w in &r.per_window {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            axis.x(w.reference),
            axis.y(w.prediction)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Difference against mean with bias and limits of agreement.
pub fn bland_altman_svg(r: &EvalReport) -> Result<String> {
    non_empty(r)?;
    let ba = BlandAltman::from_report(r);
    let means: Vec<f64> = r.per_window.iter().map(|w| 0.5 * (w.reference + w.prediction)).collect();
    let xa = Axis::new(means.iter().copied());
    let ya = Axis::new(r.per_window.iter().map(|w| w.error).chain([ba.lower, ba.upper]));
    let mut s = svg_open("Bland-Altman", "mean of prediction and reference", "prediction - reference");
    for (v, dash) in [(ba.bias, "none"), (ba.lower, "6,4"), (ba.upper, "6,4")] {
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN}" y1="{y:.2}" x2="{x2}" y2="{y:.2}" stroke="red" stroke-dasharray="{dash}"/>"#,
            y = ya.y(v),
            x2 = SIZE - MARGIN
        );
    }
    for (m, w) in means.iter().zip(&r.per_window) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            xa.x(*m),
            ya.y(w.error)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn write_csv(path: &Path, header: [&str; 2], rows: impl Iterator<Item = [f64; 2]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for [a, b] in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>_scatter.csv` (ref, pred) and `<stem>_scatter.svg`.
pub fn export_scatter(r: &EvalReport, dir: &Path, stem: &str) -> Result<[PathBuf; 2]> {
    let svg = scatter_svg(r)?;
    let csv_path = dir.join(format!("{stem}_scatter.csv"));
    let svg_path = dir.join(format!("{stem}_scatter.svg"));
    write_csv(&csv_path, ["ref", "pred"], r.per_window.iter().map(|w| [w.reference, w.prediction]))?;
    std::fs::write(&svg_path, svg)?;
    Ok([csv_path, svg_path])
}

/// Writes `<stem>_bland_altman.csv` (mean, diff) and the matching SVG.
pub fn export_bland_altman(r: &EvalReport, dir: &Path, stem: &str) -> Result<[PathBuf; 2]> {
    let svg = bland_altman_svg(r)?;
    let csv_path = dir.join(format!("{stem}_bland_altman.csv"));
    let svg_path = dir.join(format!("{stem}_bland_altman.svg"));
    write_csv(
        &csv_path,
        ["mean", "diff"],
        r.per_window
            .iter()
            .map(|w| [0.5 * (w.reference + w.prediction), w.error]),
    )?;
    std::fs::write(&svg_path, svg)?;
    Ok([csv_path, svg_path])
}
