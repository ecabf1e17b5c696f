//! POS and CHROM colour-projection pulse extractors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::FrameTensor;
use crate::signal::Waveform;

/// Spatially averaged RGB per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiTrace {
    pub mean_rgb: Vec<[f64; 3]>,
    pub fps: f64,
}

impl RoiTrace {
    pub fn new(mean_rgb: Vec<[f64; 3]>, fps: f64) -> Result<Self> {
        if mean_rgb.len() < 2 {
            return Err(Error::Length {
                needed: 2,
                got: mean_rgb.len(),
            });
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        if mean_rgb.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite trace value".into()));
        }
        Ok(Self { mean_rgb, fps })
    }

    pub fn from_frames(clip: &FrameTensor) -> Result<Self> {
        Self::new(clip.mean_rgb(), clip.fps())
    }

    pub fn len(&self) -> usize {
        self.mean_rgb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_rgb.is_empty()
    }
}

pub const WINDOW_S: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pos,
    Chrom,
}

fn std(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Runs `project` over every window of `l` frames (hop 1), each window's
/// colours divided by their temporal mean, and overlap-adds the
/// mean-removed, Hann-weighted outputs.
fn overlap_add(trace: &RoiTrace, project: impl Fn(&[[f64; 3]]) -> Vec<f64>) -> Result<Waveform> {
    let t = trace.len();
    let l = (WINDOW_S * trace.fps).ceil() as usize;
    if t < l {
        return Err(Error::Length { needed: l, got: t });
    }
    let spread = (0..3)
        .map(|c| std(&trace.mean_rgb.iter().map(|p| p[c]).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    let level = trace.mean_rgb.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(spread > 1e-12 * level) {
        return Err(Error::NoSignal("trace has zero variance".into()));
    }
    // Hann weights of length l + 2 without the zero endpoints.
    let hann: Vec<f64> = (1..=l)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (l + 1) as f64).cos())
        .collect();
    let mut acc = vec![0.0; t];
    let mut wsum = vec![0.0; t];
    for n in 0..=t - l {
        let win = &trace.mean_rgb[n..n + l];
        let mean = [0, 1, 2].map(|c| win.iter().map(|p| p[c]).sum::<f64>() / l as f64);
        if mean.iter().any(|&m| m <= 0.0) {
            continue;
        }
        let norm: Vec<[f64; 3]> = win
            .iter()
            .map(|p| [p[0] / mean[0], p[1] / mean[1], p[2] / mean[2]])
            .collect();
        let h = project(&norm);
        let hm = h.iter().sum::<f64>() / l as f64;
        for (i, v) in h.iter().enumerate() {
            acc[n + i] += hann[i] * (v - hm);
            wsum[n + i] += hann[i];
        }
    }
    let out = acc
        .iter()
        .zip(&wsum)
        .map(|(a, w)| if *w > 0.0 { a / w } else { 0.0 })
        .collect();
    Waveform::new(out, trace.fps)
}

/// Plane-orthogonal-to-skin projection.
pub fn pos(trace: &RoiTrace) -> Result<Waveform> {
    overlap_add(trace, |c| {
        let s1: Vec<f64> = c.iter().map(|p| p[1] - p[2]).collect();
        let s2: Vec<f64> = c.iter().map(|p| p[1] + p[2] - 2.0 * p[0]).collect();
        let (d1, d2) = (std(&s1), std(&s2));
        let alpha = if d2 > 0.0 { d1 / d2 } else { 0.0 };
        s1.iter().zip(&s2).map(|(a, b)| a + alpha * b).collect()
    })
}

/// Chrominance projection with the alpha-ratio combination.
pub fn chrom(trace: &RoiTrace) -> Result<Waveform> {
    overlap_add(trace, |c| {
        let x: Vec<f64> = c.iter().map(|p| 3.0 * p[0] - 2.0 * p[1]).collect();
        let y: Vec<f64> = c.iter().map(|p| 1.5 * p[0] + p[1] - 1.5 * p[2]).collect();
        let (dx, dy) = (std(&x), std(&y));
        let alpha = if dy > 0.0 { dx / dy } else { 0.0 };
        x.iter().zip(&y).map(|(a, b)| a - alpha * b).collect()
    })
}

pub fn extract(trace: &RoiTrace, method: Method) -> Result<Waveform> {
    match method {
        Method::Pos => pos(trace),
        Method::Chrom => chrom(trace),
    }
}
