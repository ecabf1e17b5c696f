//! Conversions between pipeline data and network tensors.

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::preprocess::DiffClip;
use crate::signal::{estimate_hr, mean_std, HrConfig, HrEstimate, Waveform};

/// One training or evaluation example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `[C, T, H, W]`; the last `T - n_diffs` frames are zero.
    pub input: Tensor,
    /// Normalized PPG differences, zero-padded to `T`.
    pub wave: Vec<f64>,
    pub spo2: f64,
}

impl Sample {
    /// Number of valid difference frames (`T - 1`).
    pub fn n_diffs(&self) -> usize {
        self.wave.len().saturating_sub(1)
    }

    /// Reverses the clip in time. Differences of a reversed clip are the
    /// negated differences in reverse order; the zero padding stays at the end.
    pub fn time_reversed(&self) -> Sample {
        let n = self.n_diffs();
        let s = self.input.shape();
        let (c, t, plane) = (s[0], s[1], s[2] * s[3]);
        let src = self.input.data();
        let mut data = vec![0.0; src.len()];
        for ch in 0..c {
            for i in 0..n {
                let from = &src[(ch * t + n - 1 - i) * plane..][..plane];
                let to = &mut data[(ch * t + i) * plane..][..plane];
                for (d, v) in to.iter_mut().zip(from) {
                    *d = -v;
                }
            }
        }
        let mut wave = vec![0.0; self.wave.len()];
        for i in 0..n {
            wave[i] = -self.wave[n - 1 - i];
        }
        Sample {
            input: Tensor::new(s.to_vec(), data).expect("same shape"),
            wave,
            spo2: self.spo2,
        }
    }
}

/// Rearranges `t × h × w × 3` differences into `[3, frames, h, w]`,
/// zero-filling frames past `t`.
pub fn clip_input(diff: &DiffClip, frames: usize) -> Result<Tensor> {
    if diff.t > frames {
        return Err(Error::Length {
            needed: diff.t,
            got: frames,
        });
    }
    let plane = diff.h * diff.w;
    let mut data = vec![0.0; 3 * frames * plane];
    for t in 0..diff.t {
        let f = diff.frame(t);
        for (p, px) in f.chunks_exact(3).enumerate() {
            for (c, v) in px.iter().enumerate() {
                data[(c * frames + t) * plane + p] = *v;
            }
        }
    }
    Tensor::new(vec![3, frames, diff.h, diff.w], data)
}

/// First differences of a PPG segment divided by their population std,
/// zero-padded to `frames`.
pub fn wave_target(ppg: &[f64], frames: usize) -> Result<Vec<f64>> {
    if ppg.len() < 3 || ppg.len() > frames + 1 {
        return Err(Error::Length {
            needed: 3,
            got: ppg.len(),
        });
    }
    let d: Vec<f64> = ppg.windows(2).map(|w| w[1] - w[0]).collect();
    let (_, sd) = mean_std(&d);
    if sd <= 0.0 || !sd.is_finite() {
        return Err(Error::NoSignal("flat PPG segment".into()));
    }
    let mut out = vec![0.0; frames];
    for (o, v) in out.iter_mut().zip(&d) {
        *o = v / sd;
    }
    Ok(out)
}

/// Heart rate from consecutive predicted difference waveforms: each clip's
/// valid part is scaled to unit std, the pieces are concatenated and
/// integrated, and the result goes through the spectral estimator.
pub fn hr_from_predictions(clips: &[&[f64]], n_diffs: usize, fps: f64) -> Result<HrEstimate> {
    let mut d = Vec::with_capacity(clips.len() * (n_diffs + 1));
    for c in clips {
        let v = &c[..n_diffs.min(c.len())];
        let (mean, sd) = mean_std(v);
        let s = if sd > 0.0 { 1.0 / sd } else { 0.0 };
        d.extend(v.iter().map(|x| (x - mean) * s));
        // The difference across the clip boundary is unknown; repeat the
        // last one so the integrated signal keeps one sample per frame.
        d.push(*d.last().unwrap_or(&0.0));
    }
    let mut acc = 0.0;
    let x: Vec<f64> = d
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    estimate_hr(&Waveform::new(x, fps)?, &HrConfig::default())
}
