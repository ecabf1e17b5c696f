use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowError {
    pub reference: f64,
    pub prediction: f64,
    /// `prediction - reference`
    pub error: f64,
}

/// Agreement between predictions and references over a set of windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub rmse: f64,
    /// Mean absolute percentage error over windows with a nonzero reference;
    /// NaN when there are none (`null` in JSON).
    #[serde(with = "nan_as_null")]
    pub mape_pct: f64,
    /// Windows left out of the MAPE because their reference is zero.
    pub mape_excluded: usize,
    /// Population standard deviation of the signed error.
    pub sd: f64,
    pub n_windows: usize,
    pub tw_seconds: f64,
    pub per_window: Vec<WindowError>,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub fn compute_metrics(refs: &[f64], preds: &[f64], tw_seconds: f64) -> Result<EvalReport> {
    if refs.len() != preds.len() {
        return Err(Error::Length {
            needed: refs.len(),
            got: preds.len(),
        });
    }
    if refs.is_empty() {
        return Err(Error::Empty("no windows to evaluate".into()));
    }
    if refs.iter().chain(preds).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite reference or prediction".into()));
    }
    let n = refs.len() as f64;
    let per_window: Vec<WindowError> = refs
        .iter()
        .zip(preds)
        .map(|(&r, &p)| WindowError {
            reference: r,
            prediction: p,
            error: p - r,
        })
        .collect();
    let mae = per_window.iter().map(|w| w.error.abs()).sum::<f64>() / n;
    let rmse = (per_window.iter().map(|w| w.error * w.error).sum::<f64>() / n).sqrt();
    let bias = per_window.iter().map(|w| w.error).sum::<f64>() / n;
    let sd = (per_window.iter().map(|w| (w.error - bias).powi(2)).sum::<f64>() / n).sqrt();
    let usable: Vec<f64> = per_window
        .iter()
        .filter(|w| w.reference != 0.0)
        .map(|w| (w.error / w.reference).abs())
        .collect();
    let mape_excluded = per_window.len() - usable.len();
    if mape_excluded > 0 {
        log::warn!("{mape_excluded} windows with zero reference left out of MAPE");
    }
    let mape_pct = if usable.is_empty() {
        f64::NAN
    } else {
        100.0 * usable.iter().sum::<f64>() / usable.len() as f64
    };
    Ok(EvalReport {
        mae,
        rmse,
        mape_pct,
        mape_excluded,
        sd,
        n_windows: per_window.len(),
        tw_seconds,
        per_window,
    })
}

/// Mean difference and 95% limits of agreement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    pub bias: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BlandAltman {
    pub fn from_report(r: &EvalReport) -> Self {
        let n = r.per_window.len() as f64;
        let bias = r.per_window.iter().map(|w| w.error).sum::<f64>() / n;
        let sd = (r.per_window.iter().map(|w| (w.error - bias).powi(2)).sum::<f64>() / n).sqrt();
        Self {
            bias,
            sd,
            lower: bias - 1.96 * sd,
            upper: bias + 1.96 * sd,
        }
    }
}

/// Aligned plain-text table, one row per report.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut s = format!(
        "{:>6} {:>8} {:>8} {:>8} {:>8} {:>6}\n",
        "TW(s)", "MAE", "RMSE", "MAPE%", "SD", "N"
    );
    for r in reports {
        s.push_str(&format!(
            "{:>6.1} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>6}\n",
            r.tw_seconds, r.mae, r.rmse, r.mape_pct, r.sd, r.n_windows
        ));
    }
    s
}
