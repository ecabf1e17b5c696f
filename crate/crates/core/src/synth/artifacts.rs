//! Synthetic corruption of reference PPG.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::signal::{mean_std, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    NoiseBurst,
    BaselineJump,
    FlatLine,
}

/// Corrupted samples `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionInterval {
    pub start: usize,
    pub end: usize,
    pub kind: ArtifactKind,
}

impl CorruptionInterval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }
    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

pub const MIN_ARTIFACT_S: f64 = 0.5;
pub const MAX_ARTIFACT_S: f64 = 20.0;

/// Replaces `round(rate·n)` samples, split into randomly placed intervals of
/// 0.5–20 s, with noise bursts, baseline jumps or flat lines. The quality
/// mask is left untouched; the intervals are the ground truth.
pub fn inject_artifacts(
    w: &Waveform,
    rate: f64,
    seed: u64,
) -> Result<(Waveform, Vec<CorruptionInterval>)> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Range(format!("artifact rate {rate} outside [0, 1]")));
    }
    let n = w.len();
    let fs = w.sample_rate_hz();
    let target = (rate * n as f64).round() as usize;
    if target == 0 {
        return Ok((w.clone(), Vec::new()));
    }
    let mut r = rng::stream(seed, &[]);

    let mut lens = Vec::new();
    let mut total = 0;
    while total < target {
        let l = ((r.random_range(MIN_ARTIFACT_S..=MAX_ARTIFACT_S) * fs).round() as usize).max(1);
        let l = l.min(target - total);
        lens.push(l);
        total += l;
    }
    lens.shuffle(&mut r);

    // Spread the clean samples over k + 1 gaps at uniformly random cut points.
    let clean = n - target;
    let mut cuts: Vec<usize> = (0..lens.len())
        .map(|_| (r.random::<f64>() * clean as f64).floor() as usize)
        .collect();
    cuts.sort_unstable();

    let x = w.samples();
    let (_, sd) = mean_std(x);
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut y = x.to_vec();
    let mut intervals: Vec<CorruptionInterval> = Vec::with_capacity(lens.len());
    let mut placed = 0;
    for (i, &l) in lens.iter().enumerate() {
        let start = cuts[i] + placed;
        let end = start + l;
        placed += l;
        let kind = match r.random_range(0..3) {
            0 => ArtifactKind::NoiseBurst,
            1 => ArtifactKind::BaselineJump,
            _ => ArtifactKind::FlatLine,
        };
        match kind {
            ArtifactKind::NoiseBurst => {
                for v in &mut y[start..end] {
                    *v = 0.2 * *v + 3.0 * sd * normal.sample(&mut r);
                }
            }
            ArtifactKind::BaselineJump => {
                let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
                let off = sign * r.random_range(2.0..4.0) * sd;
                let sway_hz = r.random_range(0.05..0.3);
                for (j, v) in y[start..end].iter_mut().enumerate() {
                    let t = j as f64 / fs;
                    *v += off
                        + 1.5 * sd * (TAU * sway_hz * t).sin()
                        + 0.5 * sd * normal.sample(&mut r);
                }
            }
            ArtifactKind::FlatLine => {
                let hold = x[start];
                y[start..end].iter_mut().for_each(|v| *v = hold);
            }
        }
        match intervals.last_mut() {
            Some(prev) if prev.end == start && prev.kind == kind => prev.end = end,
            _ => intervals.push(CorruptionInterval { start, end, kind }),
        }
    }
    let out = Waveform::with_mask(y, fs, w.quality_mask().to_vec())?;
    Ok((out, intervals))
}

/// Per-sample corruption indicator.
pub fn corruption_mask(n: usize, intervals: &[CorruptionInterval]) -> Vec<bool> {
    let mut m = vec![false; n];
    for iv in intervals {
        m[iv.start.min(n)..iv.end.min(n)].iter_mut().for_each(|v| *v = true);
    }
    m
}
