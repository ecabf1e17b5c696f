//! Signal-quality features and the builtin feature screen.

use serde::{Deserialize, Serialize};

use crate::signal::{psd_samples, Waveform};

/// Scores a PPG window; higher is cleaner.
pub trait QualityScreen: Send + Sync {
    fn score(&self, window: &Waveform) -> f64;
    /// Windows scoring at or above this are clean.
    fn threshold(&self) -> f64;
}

/// Score given to windows whose features are undefined (flat lines).
pub const DEGENERATE_SCORE: f64 = -1.0e3;

const BAND: (f64, f64) = (0.4, 4.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub skewness: f64,
    pub kurtosis: f64,
    pub spectral_entropy: f64,
    pub autocorr_prominence: f64,
}

impl Features {
    pub fn to_array(self) -> [f64; 4] {
        [
            self.skewness,
            self.kurtosis,
            self.spectral_entropy,
            self.autocorr_prominence,
        ]
    }
}

fn detrend(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let tc = (n - 1.0) / 2.0;
    let mean = x.iter().sum::<f64>() / n;
    let sxx: f64 = (0..x.len()).map(|i| (i as f64 - tc).powi(2)).sum();
    let sxy: f64 = x.iter().enumerate().map(|(i, v)| (i as f64 - tc) * (v - mean)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    x.iter()
        .enumerate()
        .map(|(i, v)| v - mean - slope * (i as f64 - tc))
        .collect()
}

/// Features of a window, or `None` when it carries no variation.
pub fn window_features(x: &[f64], fs: f64) -> Option<Features> {
    if x.len() < 8 {
        return None;
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let y = detrend(x);
    let n = y.len() as f64;
    let m2 = y.iter().map(|v| v * v).sum::<f64>() / n;
    if !(m2 > 1e-20 * scale * scale) {
        return None;
    }
    let m3 = y.iter().map(|v| v.powi(3)).sum::<f64>() / n;
    let m4 = y.iter().map(|v| v.powi(4)).sum::<f64>() / n;
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);

    let p = psd_samples(&y, fs, y.len().next_power_of_two().max(512)).ok()?;
    let band: Vec<(f64, f64)> = p
        .freqs_hz
        .iter()
        .zip(&p.power)
        .filter(|(f, _)| **f >= BAND.0 && **f <= BAND.1)
        .map(|(f, v)| (*f, *v))
        .collect();
    let total: f64 = band.iter().map(|b| b.1).sum();
    if band.len() < 2 || !(total > 0.0) {
        return None;
    }
    let entropy = -band
        .iter()
        .map(|&(_, v)| v / total)
        .filter(|&q| q > 0.0)
        .map(|q| q * q.ln())
        .sum::<f64>()
        / (band.len() as f64).ln();
    let peak_hz = band
        .iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, &(f, v)| if v > acc.1 { (f, v) } else { acc })
        .0;

    // Unbiased autocorrelation normalised by lag zero.
    let r0 = m2;
    let ac = |k: usize| -> f64 {
        let s: f64 = y[..y.len() - k].iter().zip(&y[k..]).map(|(a, b)| a * b).sum();
        s / (y.len() - k) as f64 / r0
    };
    let lag = fs / peak_hz;
    let max_lag = y.len() / 2;
    let lo = ((0.7 * lag).floor() as usize).max(1);
    let hi = ((1.3 * lag).ceil() as usize).min(max_lag);
    let prominence = if lo >= hi {
        0.0
    } else {
        let (k_peak, r_peak) = (lo..=hi)
            .map(|k| (k, ac(k)))
            .fold((lo, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        let trough = (1..=k_peak).map(ac).fold(f64::INFINITY, f64::min);
        (r_peak - trough).max(0.0)
    };
    Some(Features {
        skewness,
        kurtosis,
        spectral_entropy: entropy,
        autocorr_prominence: prominence,
    })
}

/// Reference mean and spread of each feature on clean windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: [f64; 4],
    pub sd: [f64; 4],
}

impl FeatureStats {
    pub fn from_features(feats: &[Features]) -> Option<Self> {
        if feats.len() < 2 {
            return None;
        }
        let n = feats.len() as f64;
        let mut mean = [0.0; 4];
        let mut sd = [0.0; 4];
        for f in feats {
            for (m, v) in mean.iter_mut().zip(f.to_array()) {
                *m += v / n;
            }
        }
        for f in feats {
            for ((s, m), v) in sd.iter_mut().zip(&mean).zip(f.to_array()) {
                *s += (v - m).powi(2) / n;
            }
        }
        Some(Self {
            mean,
            sd: sd.map(|v| v.sqrt().max(1e-6)),
        })
    }

    pub fn score(&self, f: &Features) -> f64 {
        -f.to_array()
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| ((v - m) / s).abs())
            .sum::<f64>()
    }
}

/// Negative sum of absolute feature z-scores against clean reference
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuiltinScreen {
    pub reference: FeatureStats,
    pub threshold: f64,
}

/// Reference statistics of 4 s windows (2 s hop) of clean synthetic PPG:
/// preset seed 7, subjects 100..130, 300 s each.
pub const CLEAN_REFERENCE: FeatureStats = FeatureStats {
    mean: [
        -5.742533038854164e-1,
        1.9244975976899878e0,
        4.7839662150115686e-1,
        1.7654180640586987e0,
    ],
    sd: [
        4.282711304893391e-2,
        5.99010503651487e-2,
        3.933739258158763e-2,
        1.1778707345223812e-2,
    ],
};

/// Below the 1st percentile of clean-window scores (about -7.8).
pub const DEFAULT_THRESHOLD: f64 = -10.0;

impl Default for BuiltinScreen {
    fn default() -> Self {
        Self::new(CLEAN_REFERENCE, DEFAULT_THRESHOLD)
    }
}

impl BuiltinScreen {
    pub fn new(reference: FeatureStats, threshold: f64) -> Self {
        Self {
            reference,
            threshold,
        }
    }
}

impl QualityScreen for BuiltinScreen {
    fn score(&self, window: &Waveform) -> f64 {
        let s = window_features(window.samples(), window.sample_rate_hz())
            .map(|f| self.reference.score(&f))
            .unwrap_or(DEGENERATE_SCORE);
        if s.is_finite() {
            s.max(DEGENERATE_SCORE)
        } else {
            DEGENERATE_SCORE
        }
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

pub fn builtin_quality_score(screen: &BuiltinScreen, window: &Waveform) -> f64 {
    screen.score(window)
}
