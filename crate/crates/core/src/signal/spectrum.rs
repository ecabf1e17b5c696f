//! Periodogram estimation and spectral heart-rate extraction.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::butterworth::{design_bandpass, BandpassSpec, FilterCoeffs};
use super::waveform::Waveform;
use crate::error::{Error, Result};

/// One-sided power spectrum on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    pub power: Vec<f64>,
}

impl PsdEstimate {
    /// Index of the largest power with frequency inside `[lo, hi]`.
    pub fn argmax_in(&self, lo: f64, hi: f64) -> Option<usize> {
        self.freqs_hz
            .iter()
            .zip(&self.power)
            .enumerate()
            .filter(|(_, (f, _))| **f >= lo && **f <= hi)
            .max_by(|a, b| a.1 .1.total_cmp(b.1 .1))
            .map(|(i, _)| i)
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Periodogram of the mean-removed signal zero-padded to `zero_pad_to`
/// samples. Scaled so that the bins sum to the signal energy.
pub fn psd(w: &Waveform, zero_pad_to: usize) -> Result<PsdEstimate> {
    psd_samples(w.samples(), w.sample_rate_hz(), zero_pad_to)
}

pub fn psd_samples(x: &[f64], sample_rate_hz: f64, zero_pad_to: usize) -> Result<PsdEstimate> {
    if x.len() < 2 {
        return Err(Error::Length {
            needed: 2,
            got: x.len(),
        });
    }
    if zero_pad_to < x.len() {
        return Err(Error::InvalidArgument(format!(
            "pad length {zero_pad_to} shorter than signal length {}",
            x.len()
        )));
    }
    let n = zero_pad_to;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    let mut freqs = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let edge = k == 0 || (n % 2 == 0 && k == half);
        let scale = if edge { 1.0 } else { 2.0 };
        freqs.push(k as f64 * sample_rate_hz / n as f64);
        power.push(scale * c.norm_sqr() / n as f64);
    }
    Ok(PsdEstimate {
        freqs_hz: freqs,
        power,
    })
}

/// How the band-pass shapes the spectrum before the peak search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandShaping {
    /// Weight the periodogram by `|H(f)|^2` of the forward-backward filter.
    /// Equivalent to steady-state filtering without edge transients.
    Spectral,
    /// Filter the samples forward-backward, then take the periodogram.
    TimeDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrConfig {
    pub band: BandpassSpec,
    pub zero_pad_to: usize,
    pub shaping: BandShaping,
    /// Refine the FFT peak with a local least-squares sinusoid fit.
    pub refine: bool,
    /// In-band peak must exceed this multiple of the in-band median power.
    pub confidence_ratio: f64,
    pub min_seconds: f64,
}

impl Default for HrConfig {
    fn default() -> Self {
        Self {
            band: BandpassSpec::default(),
            zero_pad_to: 4096,
            shaping: BandShaping::Spectral,
            refine: true,
            confidence_ratio: 3.0,
            min_seconds: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrEstimate {
    pub bpm: f64,
    /// Frequency of the coarse periodogram peak.
    pub peak_hz: f64,
    pub low_confidence: bool,
}

/// Heart rate from the dominant in-band spectral component.
pub fn extract_hr_bpm(w: &Waveform) -> Result<f64> {
    estimate_hr(w, &HrConfig::default()).map(|e| e.bpm)
}

pub fn estimate_hr(w: &Waveform, cfg: &HrConfig) -> Result<HrEstimate> {
    if w.quality_mask().iter().all(|q| !q) {
        return Err(Error::NoSignal("every sample is masked".into()));
    }
    let fs = w.sample_rate_hz();
    let needed = (cfg.min_seconds * fs).round() as usize;
    if w.len() < needed {
        return Err(Error::Length {
            needed,
            got: w.len(),
        });
    }
    let coeffs = design_bandpass(&cfg.band, fs)?;
    let x = w.samples();
    let pad = cfg.zero_pad_to.max(x.len());
    let (lo, hi) = (cfg.band.low_cut_hz, cfg.band.high_cut_hz);

    let raw = psd_samples(x, fs, pad)?;
    let shaped = match cfg.shaping {
        BandShaping::Spectral => weight_by_response(&raw, &coeffs, fs),
        BandShaping::TimeDomain => {
            let y = super::filter::filtfilt_symmetric(&coeffs, x)?;
            psd_samples(&y, fs, pad)?
        }
    };
    let peak = shaped
        .argmax_in(lo, hi)
        .ok_or_else(|| Error::NoSignal("empty search band".into()))?;
    let peak_hz = shaped.freqs_hz[peak];

    let band: Vec<f64> = shaped
        .freqs_hz
        .iter()
        .zip(&shaped.power)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(_, p)| *p)
        .collect();
    let median = median(&band);
    let weak = !(shaped.power[peak] >= cfg.confidence_ratio * median) || shaped.power[peak] <= 0.0;
    // Energy that only leaks into the band from outside it.
    let raw_in = raw.argmax_in(lo, hi).map(|i| raw.power[i]).unwrap_or(0.0);
    let raw_out = raw
        .freqs_hz
        .iter()
        .zip(&raw.power)
        .filter(|(f, _)| **f > 0.0 && (**f < lo || **f > hi))
        .map(|(_, p)| *p)
        .fold(0.0, f64::max);
    let low_confidence = weak || raw_out > raw_in;

    let f = if cfg.refine {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
        refine_peak(&centered, fs, peak_hz, fs / x.len() as f64, lo, hi)
    } else {
        peak_hz
    };
    Ok(HrEstimate {
        bpm: 60.0 * f,
        peak_hz,
        low_confidence,
    })
}

fn weight_by_response(p: &PsdEstimate, coeffs: &FilterCoeffs, fs: f64) -> PsdEstimate {
    let power = p
        .freqs_hz
        .iter()
        .zip(&p.power)
        .map(|(&f, &v)| v * coeffs.magnitude(f, fs).powi(2))
        .collect();
    PsdEstimate {
        freqs_hz: p.freqs_hz.clone(),
        power,
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 0 {
        0.5 * (s[m - 1] + s[m])
    } else {
        s[m]
    }
}

/// Power captured by a least-squares fit of `cos, sin` at `f` on top of an
/// affine trend. Maximised at the true frequency for a noiseless tone.
pub fn sinusoid_fit_power(x: &[f64], fs: f64, f: f64) -> f64 {
    let n = x.len();
    let w = 2.0 * std::f64::consts::PI * f / fs;
    let tc = (n as f64 - 1.0) / 2.0;
    // Normal equations for [1, t, cos, sin]; residual energy of the
    // trend-only fit minus residual of the full fit.
    let cols = |i: usize| {
        let t = i as f64;
        [1.0, t - tc, (w * t).cos(), (w * t).sin()]
    };
    let mut g = [[0.0; 4]; 4];
    let mut r = [0.0; 4];
    for (i, &v) in x.iter().enumerate() {
        let c = cols(i);
        for a in 0..4 {
            r[a] += c[a] * v;
            for b in 0..4 {
                g[a][b] += c[a] * c[b];
            }
        }
    }
    let full = projected_energy(&g, &r, 4);
    let trend = projected_energy(&g, &r, 2);
    (full - trend).max(0.0)
}

/// `r^T G^-1 r` restricted to the leading `k` columns (Cholesky).
fn projected_energy(g: &[[f64; 4]; 4], r: &[f64; 4], k: usize) -> f64 {
    let mut l = [[0.0; 4]; 4];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|m| l[i][m] * l[j][m]).sum();
            if i == j {
                let d = g[i][i] - s;
                if d <= 1e-12 * g[i][i].abs().max(1.0) {
                    return 0.0;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (g[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = [0.0; 4];
    for i in 0..k {
        let s: f64 = (0..i).map(|m| l[i][m] * y[m]).sum();
        y[i] = (r[i] - s) / l[i][i];
    }
    y[..k].iter().map(|v| v * v).sum()
}

/// Maximises the sinusoid fit power within `center ± half_width`, clamped to
/// the search band: dense scan then golden-section polish.
fn refine_peak(x: &[f64], fs: f64, center: f64, half_width: f64, lo: f64, hi: f64) -> f64 {
    let a = (center - half_width).max(lo);
    let b = (center + half_width).min(hi);
    if b <= a {
        return center;
    }
    const STEPS: usize = 200;
    let step = (b - a) / STEPS as f64;
    let (best, _) = (0..=STEPS)
        .map(|i| {
            let f = a + i as f64 * step;
            (f, sinusoid_fit_power(x, fs, f))
        })
        .fold((center, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
    let (mut l, mut r) = ((best - step).max(a), (best + step).min(b));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = r - phi * (r - l);
    let mut d = l + phi * (r - l);
    let (mut fc, mut fd) = (sinusoid_fit_power(x, fs, c), sinusoid_fit_power(x, fs, d));
    for _ in 0..60 {
        if fc > fd {
            r = d;
            d = c;
            fd = fc;
            c = r - phi * (r - l);
            fc = sinusoid_fit_power(x, fs, c);
        } else {
            l = c;
            c = d;
            fc = fd;
            d = l + phi * (r - l);
            fd = sinusoid_fit_power(x, fs, d);
        }
    }
    0.5 * (l + r)
}
