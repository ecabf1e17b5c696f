use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, EvalReport};
use crate::error::{Error, Result};

/// Length of the unit window produced by the network.
pub const BASE_WINDOW_S: f64 = 2.0;

/// Consecutive unit-window predictions of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeries {
    pub id: String,
    /// Predicted waveform of each unit window, in time order.
    pub waves: Vec<Vec<f64>>,
    /// Reference heart rate of each unit window.
    pub ref_hr_bpm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiWindowTable {
    pub reports: Vec<EvalReport>,
    /// Requested window lengths for which no recording was long enough.
    pub skipped_s: Vec<f64>,
}

/// Scores heart rate over longer windows built by concatenating `k`
/// consecutive unit windows (non-overlapping). `hr` maps the concatenated
/// predictions to a heart rate; the reference is the mean of the unit
/// references, which equals the true mean over the longer window.
pub fn multi_window_eval(
    series: &[WindowSeries],
    windows_s: &[f64],
    hr: &dyn Fn(&[&[f64]]) -> Result<f64>,
) -> Result<MultiWindowTable> {
    let mut table = MultiWindowTable {
        reports: Vec::new(),
        skipped_s: Vec::new(),
    };
    for &tw in windows_s {
        let k = (tw / BASE_WINDOW_S).round() as usize;
        if k == 0 || (k as f64 * BASE_WINDOW_S - tw).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "window {tw} s is not a positive multiple of {BASE_WINDOW_S} s"
            )));
        }
        let (mut refs, mut preds) = (Vec::new(), Vec::new());
        for s in series {
            if s.waves.len() != s.ref_hr_bpm.len() {
                return Err(Error::Length {
                    needed: s.ref_hr_bpm.len(),
                    got: s.waves.len(),
                });
            }
            for start in (0..s.waves.len()).step_by(k) {
                if start + k > s.waves.len() {
                    break;
                }
                let parts: Vec<&[f64]> = s.waves[start..start + k].iter().map(Vec::as_slice).collect();
                preds.push(hr(&parts)?);
                refs.push(s.ref_hr_bpm[start..start + k].iter().sum::<f64>() / k as f64);
            }
        }
        if refs.is_empty() {
            log::warn!("no recording spans {tw} s; window skipped");
            table.skipped_s.push(tw);
            continue;
        }
        table.reports.push(compute_metrics(&refs, &preds, tw)?);
    }
    Ok(table)
}
