//! Label distribution smoothing: inverse-density sample weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdsConfig {
    pub kernel_size: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Inclusive integer bin range. `None` spans the observed labels.
    pub grid: Option<(i64, i64)>,
    /// Cap applied after normalizing to mean 1.
    pub max_weight: f64,
}

impl Default for LdsConfig {
    fn default() -> Self {
        Self {
            kernel_size: 7,
            alpha: 2.0,
            beta: 5.0,
            grid: None,
            max_weight: 10.0,
        }
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation (g = 7), accurate to ~1e-15 for positive arguments.
fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let s = C[1..]
        .iter()
        .enumerate()
        .fold(C[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Beta density sampled at `k` equally spaced interior points
/// `(j + 1) / (k + 1)`, normalized to sum 1.
pub fn beta_kernel(cfg: &LdsConfig) -> Result<Vec<f64>> {
    if cfg.kernel_size == 0 || cfg.kernel_size % 2 == 0 {
        return Err(Error::Config("LDS kernel size must be odd".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.beta > 0.0) {
        return Err(Error::Config("Beta parameters must be positive".into()));
    }
    let k = cfg.kernel_size;
    let lb = ln_beta(cfg.alpha, cfg.beta);
    let pdf: Vec<f64> = (0..k)
        .map(|j| {
            let x = (j + 1) as f64 / (k + 1) as f64;
            ((cfg.alpha - 1.0) * x.ln() + (cfg.beta - 1.0) * (1.0 - x).ln() - lb).exp()
        })
        .collect();
    let s: f64 = pdf.iter().sum();
    Ok(pdf.into_iter().map(|v| v / s).collect())
}

/// Per-sample weights proportional to the inverse smoothed label density,
/// normalized to mean 1 and capped at `max_weight`.
pub fn lds_weights(labels: &[f64], cfg: &LdsConfig) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::Empty("no labels for LDS".into()));
    }
    if labels.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite label".into()));
    }
    let kernel = beta_kernel(cfg)?;
    let bins: Vec<i64> = labels.iter().map(|v| v.round() as i64).collect();
    let (lo, hi) = match cfg.grid {
        Some((lo, hi)) => {
            if let Some(b) = bins.iter().find(|b| **b < lo || **b > hi) {
                return Err(Error::Range(format!("label bin {b} outside grid {lo}..={hi}")));
            }
            (lo, hi)
        }
        None => (
            *bins.iter().min().expect("non-empty"),
            *bins.iter().max().expect("non-empty"),
        ),
    };
    let nb = (hi - lo + 1) as usize;
    let mut hist = vec![0.0; nb];
    for b in &bins {
        hist[(b - lo) as usize] += 1.0;
    }
    let half = (kernel.len() / 2) as i64;
    // Kernel mass falling outside the grid is renormalized away so that a
    // flat histogram stays flat up to the edges.
    let smooth: Vec<f64> = (0..nb as i64)
        .map(|b| {
            let (mut acc, mut mass) = (0.0, 0.0);
            for (j, k) in kernel.iter().enumerate() {
                let src = b - half + j as i64;
                if (0..nb as i64).contains(&src) {
                    acc += k * hist[src as usize];
                    mass += k;
                }
            }
            acc / mass
        })
        .collect();
    let mut w: Vec<f64> = bins.iter().map(|b| 1.0 / smooth[(b - lo) as usize]).collect();
    normalize_capped(&mut w, cfg.max_weight);
    Ok(w)
}

/// Scales to mean 1, then clips at `cap` and redistributes so that the mean
/// stays 1 (water filling).
fn normalize_capped(w: &mut [f64], cap: f64) {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    w.iter_mut().for_each(|v| *v /= mean);
    if cap < 1.0 {
        return;
    }
    loop {
        let (capped, free): (Vec<f64>, Vec<f64>) = w.iter().partition(|v| **v >= cap);
        if capped.is_empty() || free.is_empty() {
            break;
        }
        let budget = n - cap * capped.len() as f64;
        let free_sum: f64 = free.iter().sum();
        let s = budget / free_sum;
        let mut changed = false;
        for v in w.iter_mut() {
            if *v >= cap {
                changed |= *v != cap;
                *v = cap;
            } else {
                *v *= s;
                changed |= s != 1.0;
            }
        }
        if !changed || w.iter().all(|v| *v <= cap) {
            break;
        }
    }
}
