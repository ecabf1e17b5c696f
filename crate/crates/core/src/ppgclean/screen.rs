use serde::{Deserialize, Serialize};

use super::features::{window_features, FeatureStats, QualityScreen};
use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Sliding-window layout for quality screening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreenConfig {
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for ScreenConfig {
    /// 4 s windows: long windows with majority voting smear each verdict
    /// over up to half a window on either side of an artifact.
    fn default() -> Self {
        Self {
            window_s: 4.0,
            hop_s: 2.0,
        }
    }
}

impl ScreenConfig {
    pub fn long() -> Self {
        Self {
            window_s: 30.0,
            hop_s: 2.0,
        }
    }
}

/// Feature statistics over every screening window of clean recordings.
pub fn calibrate_reference(clean: &[Waveform], cfg: &ScreenConfig) -> Option<FeatureStats> {
    let mut feats = Vec::new();
    for w in clean {
        let fs = w.sample_rate_hz();
        let win = (cfg.window_s * fs).round() as usize;
        let hop = (cfg.hop_s * fs).round() as usize;
        for (a, b) in window_starts(w.len(), win, hop.max(1)) {
            if let Some(f) = window_features(&w.samples()[a..b], fs) {
                feats.push(f);
            }
        }
    }
    FeatureStats::from_features(&feats)
}

/// Window start offsets covering `n` samples. A final window aligned to the
/// end is added when the hop grid leaves a tail uncovered; inputs shorter
/// than one window get a single full-length window.
pub fn window_starts(n: usize, win: usize, hop: usize) -> Vec<(usize, usize)> {
    if n <= win {
        return vec![(0, n)];
    }
    let mut out: Vec<(usize, usize)> = (0..)
        .map(|k| k * hop)
        .take_while(|s| s + win <= n)
        .map(|s| (s, s + win))
        .collect();
    if out.last().map_or(true, |&(_, e)| e < n) {
        out.push((n - win, n));
    }
    out
}

/// Per-sample dirty mask: a sample is dirty iff strictly more than half of
/// the windows covering it score below the screen's threshold.
pub fn screen_quality(w: &Waveform, screen: &dyn QualityScreen, cfg: &ScreenConfig) -> Result<Vec<bool>> {
    let fs = w.sample_rate_hz();
    let win = (cfg.window_s * fs).round() as usize;
    let hop = (cfg.hop_s * fs).round() as usize;
    if win == 0 || hop == 0 {
        return Err(Error::InvalidArgument(format!(
            "screen window {} s / hop {} s too short at {fs} Hz",
            cfg.window_s, cfg.hop_s
        )));
    }
    let n = w.len();
    let mut cover = vec![0i64; n + 1];
    let mut bad = vec![0i64; n + 1];
    for (s, e) in window_starts(n, win, hop) {
        let verdict_bad = screen.score(&w.slice(s..e)?) < screen.threshold();
        cover[s] += 1;
        cover[e] -= 1;
        if verdict_bad {
            bad[s] += 1;
            bad[e] -= 1;
        }
    }
    let (mut c, mut b) = (0i64, 0i64);
    Ok((0..n)
        .map(|i| {
            c += cover[i];
            b += bad[i];
            2 * b > c
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_cover_everything() {
        assert_eq!(window_starts(10, 30, 2), vec![(0, 10)]);
        let w = window_starts(100, 30, 20);
        assert_eq!(w, vec![(0, 30), (20, 50), (40, 70), (60, 90), (70, 100)]);
    }

    struct Threshold(f64);
    impl QualityScreen for Threshold {
        // Windows whose mean exceeds 0.5 are bad.
        fn score(&self, w: &Waveform) -> f64 {
            -(w.samples().iter().sum::<f64>() / w.len() as f64)
        }
        fn threshold(&self) -> f64 {
            -self.0
        }
    }

    #[test]
    fn majority_vote() {
        // 1 Hz sampling: ones in [40, 60).
        let x: Vec<f64> = (0..100).map(|i| if (40..60).contains(&i) { 1.0 } else { 0.0 }).collect();
        let w = Waveform::new(x, 1.0).unwrap();
        let cfg = ScreenConfig { window_s: 10.0, hop_s: 1.0 };
        let dirty = screen_quality(&w, &Threshold(0.5), &cfg).unwrap();
        // A window is bad when more than 5 of its 10 samples are ones.
        let first = dirty.iter().position(|&d| d).unwrap();
        let last = dirty.iter().rposition(|&d| d).unwrap();
        assert_eq!((first, last), (41, 58));
    }

    #[test]
    fn short_input_single_verdict() {
        let w = Waveform::new(vec![1.0; 10], 1.0).unwrap();
        let d = screen_quality(&w, &Threshold(0.5), &ScreenConfig::long()).unwrap();
        assert!(d.iter().all(|&v| v));
    }
}
