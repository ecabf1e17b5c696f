use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled 1-D physiological signal with a per-sample
/// usability mask (`true` = usable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    quality_mask: Vec<bool>,
}

impl Waveform {
    /// Builds a waveform with every sample marked usable.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        let mask = vec![true; samples.len()];
        Self::with_mask(samples, sample_rate_hz, mask)
    }

    pub fn with_mask(samples: Vec<f64>, sample_rate_hz: f64, quality_mask: Vec<bool>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("waveform has no samples".into()));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if quality_mask.len() != samples.len() {
            return Err(Error::InvalidArgument(format!(
                "quality mask length {} does not match {} samples",
                quality_mask.len(),
                samples.len()
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            quality_mask,
        })
    }

    /// Samples `f(t)` on a uniform grid of `n` points.
    pub fn from_fn(n: usize, sample_rate_hz: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..n).map(|i| f(i as f64 / sample_rate_hz)).collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn quality_mask(&self) -> &[bool] {
        &self.quality_mask
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn usable_fraction(&self) -> f64 {
        self.quality_mask.iter().filter(|&&q| q).count() as f64 / self.len() as f64
    }

    /// Sub-waveform over a sample range.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {range:?} outside waveform of length {}",
                self.len()
            )));
        }
        Self::with_mask(
            self.samples[range.clone()].to_vec(),
            self.sample_rate_hz,
            self.quality_mask[range].to_vec(),
        )
    }

    /// Same rate and mask, new sample values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::with_mask(samples, self.sample_rate_hz, self.quality_mask.clone())
    }

    pub fn into_parts(self) -> (Vec<f64>, f64, Vec<bool>) {
        (self.samples, self.sample_rate_hz, self.quality_mask)
    }

    /// Concatenates waveforms that share a sample rate.
    pub fn concat(parts: &[Waveform]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Empty("nothing to concatenate".into()))?;
        let fs = first.sample_rate_hz;
        let mut samples = Vec::new();
        let mut mask = Vec::new();
        for p in parts {
            if (p.sample_rate_hz - fs).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "cannot concatenate {} Hz with {} Hz",
                    fs, p.sample_rate_hz
                )));
            }
            samples.extend_from_slice(&p.samples);
            mask.extend_from_slice(&p.quality_mask);
        }
        Self::with_mask(samples, fs, mask)
    }

    /// Zero-mean, unit-variance copy. Constant inputs map to all zeros.
    pub fn standardized(&self) -> Self {
        let (mean, sd) = mean_std(&self.samples);
        let samples = if sd > 0.0 {
            self.samples.iter().map(|v| (v - mean) / sd).collect()
        } else {
            vec![0.0; self.len()]
        };
        Self {
            samples,
            ..self.clone()
        }
    }
}

/// Mean and population standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
