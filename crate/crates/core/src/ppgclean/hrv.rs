//! Rejection of 2 s windows with implausible beat-to-beat variability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HrvConfig {
    pub window_s: f64,
    pub max_fluctuation_bpm: f64,
    /// Peaks must exceed this fraction of the window maximum.
    pub rel_height: f64,
    pub refractory_s: f64,
}

impl Default for HrvConfig {
    fn default() -> Self {
        Self {
            window_s: 2.0,
            max_fluctuation_bpm: 15.0,
            rel_height: 0.3,
            refractory_s: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowVerdict {
    pub start: usize,
    pub end: usize,
    pub retained: bool,
    /// Max minus min instantaneous HR, when at least two peaks were found.
    pub fluctuation_bpm: Option<f64>,
    pub clip_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrvResult {
    pub windows: Vec<WindowVerdict>,
    /// Paired clip ids of excluded windows.
    pub excluded_clips: Vec<String>,
    pub retained_fraction: f64,
}

/// Peak positions (fractional samples): local maxima above
/// `rel_height × max(x)`, thinned greedily by height so that no two are
/// closer than `refractory` samples, refined by a parabola through the
/// neighbours.
pub fn detect_peaks(x: &[f64], rel_height: f64, refractory: f64) -> Vec<f64> {
    if x.len() < 3 {
        return Vec::new();
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Vec::new();
    }
    let floor = rel_height * max;
    let mut cand: Vec<usize> = (1..x.len() - 1)
        .filter(|&i| x[i] > floor && x[i] > x[i - 1] && x[i] >= x[i + 1])
        .collect();
    cand.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in cand {
        if kept.iter().all(|&k| (k as f64 - i as f64).abs() >= refractory) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept.into_iter()
        .map(|i| {
            let (a, b, c) = (x[i - 1], x[i], x[i + 1]);
            let den = a - 2.0 * b + c;
            let off = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            i as f64 + off.clamp(-0.5, 0.5)
        })
        .collect()
}

/// Max minus min instantaneous HR over successive peak intervals.
pub fn hr_fluctuation(peaks: &[f64], fs: f64) -> Option<f64> {
    if peaks.len() < 2 {
        return None;
    }
    let hr: Vec<f64> = peaks.windows(2).map(|p| 60.0 * fs / (p[1] - p[0])).collect();
    let hi = hr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = hr.iter().copied().fold(f64::INFINITY, f64::min);
    Some(hi - lo)
}

/// Judges consecutive non-overlapping windows of a band-passed PPG. Windows
/// touching masked samples, with fewer than two peaks, or with a
/// fluctuation above the limit are excluded together with their paired
/// clip (`paired[k]` belongs to window `k`; may be empty).
pub fn hrv_screen(w: &Waveform, paired: &[String], cfg: &HrvConfig) -> Result<HrvResult> {
    let fs = w.sample_rate_hz();
    let win = (cfg.window_s * fs).round() as usize;
    if win < 3 {
        return Err(Error::InvalidArgument(format!("hrv window of {win} samples")));
    }
    let n_win = w.len() / win;
    if !paired.is_empty() && paired.len() != n_win {
        return Err(Error::InvalidArgument(format!(
            "{} paired clips for {n_win} windows",
            paired.len()
        )));
    }
    let x = w.samples();
    let mask = w.quality_mask();
    let refractory = cfg.refractory_s * fs;
    let windows: Vec<WindowVerdict> = (0..n_win)
        .map(|k| {
            let (s, e) = (k * win, (k + 1) * win);
            let seg = &x[s..e];
            let mean = seg.iter().sum::<f64>() / seg.len() as f64;
            let centered: Vec<f64> = seg.iter().map(|v| v - mean).collect();
            let fluct = hr_fluctuation(&detect_peaks(&centered, cfg.rel_height, refractory), fs);
            let usable = mask[s..e].iter().all(|&m| m);
            let retained = usable && fluct.is_some_and(|f| f <= cfg.max_fluctuation_bpm);
            WindowVerdict {
                start: s,
                end: e,
                retained,
                fluctuation_bpm: fluct,
                clip_id: paired.get(k).cloned(),
            }
        })
        .collect();
    let excluded_clips = windows
        .iter()
        .filter(|v| !v.retained)
        .filter_map(|v| v.clip_id.clone())
        .collect();
    let kept = windows.iter().filter(|v| v.retained).count();
    let retained_fraction = if n_win == 0 { 0.0 } else { kept as f64 / n_win as f64 };
    Ok(HrvResult {
        windows,
        excluded_clips,
        retained_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn constant_rate_retained() {
        let w = Waveform::from_fn(1200, 60.0, |t| (TAU * 2.0 * t).sin()).unwrap();
        let ids: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let r = hrv_screen(&w, &ids, &HrvConfig::default()).unwrap();
        assert_eq!(r.retained_fraction, 1.0);
        assert!(r.excluded_clips.is_empty());
        for v in &r.windows {
            assert!(v.fluctuation_bpm.unwrap() < 1e-6);
        }
    }

    #[test]
    fn fluctuation_arithmetic() {
        // Beats 0.5 s apart (120 bpm) then 60/140 s apart.
        let fs = 60.0;
        let beats = [0.1, 0.6, 1.1, 1.1 + 60.0 / 140.0, 1.1 + 120.0 / 140.0];
        let x: Vec<f64> = (0..120)
            .map(|i| {
                let t = i as f64 / fs;
                beats.iter().map(|b| (-((t - b) / 0.03).powi(2)).exp()).sum()
            })
            .collect();
        let peaks = detect_peaks(&x, 0.3, 0.25 * fs);
        assert_eq!(peaks.len(), 5);
        let f = hr_fluctuation(&peaks, fs).unwrap();
        assert!((f - 20.0).abs() < 1.0, "{f}");
        let w = Waveform::new(x, fs).unwrap();
        let r = hrv_screen(&w, &["a".to_string()], &HrvConfig::default()).unwrap();
        assert!(!r.windows[0].retained);
        assert_eq!(r.excluded_clips, vec!["a".to_string()]);
    }

    #[test]
    fn too_few_peaks_excluded() {
        let w = Waveform::new(vec![0.0; 120], 60.0).unwrap();
        let r = hrv_screen(&w, &[], &HrvConfig::default()).unwrap();
        assert!(!r.windows[0].retained);
        assert_eq!(r.windows[0].fluctuation_bpm, None);
    }

    #[test]
    fn refractory_suppresses_close_peaks() {
        let x = [0.0, 1.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, 0.8, 0.0];
        let p = detect_peaks(&x, 0.3, 4.0);
        assert_eq!(p.len(), 2);
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 8.0).abs() < 1e-12);
    }
}
