//! Gap filling for short artifact runs.

use std::f64::consts::{PI, TAU};

use crate::signal::linalg::least_squares;
use crate::signal::{estimate_hr, HrConfig, Waveform};

/// Synthesises `gap_len` samples between two clean contexts. Either context
/// may be empty. `None` means the contexts are insufficient and the gap
/// should be dropped.
pub trait Reconstructor: Send + Sync {
    fn reconstruct(&self, before: &[f64], gap_len: usize, after: &[f64], fs: f64) -> Option<Vec<f64>>;
}

/// Fundamental-plus-harmonic model fitted to each context and swept
/// across the gap with continuous phase.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicReconstructor {
    /// Context length used for fitting, seconds.
    pub context_s: f64,
}

impl Default for HarmonicReconstructor {
    fn default() -> Self {
        Self { context_s: 4.0 }
    }
}

/// `base + a1·cos(Φ) + a2·cos(2Φ − psi)` with `Φ(t) = ω t − phi` and `t`
/// in seconds relative to the gap edge.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Fit {
    pub omega: f64,
    pub phi: f64,
    pub a1: f64,
    pub a2: f64,
    pub psi: f64,
    pub base: f64,
}

fn harmonic_row(t: f64, tc: f64, omega: f64) -> [f64; 6] {
    let p = omega * t;
    [1.0, t - tc, p.cos(), p.sin(), (2.0 * p).cos(), (2.0 * p).sin()]
}

fn fit_coeffs(x: &[f64], fs: f64, t0: f64, omega: f64) -> Option<([f64; 6], f64)> {
    let tc = t0 + (x.len() as f64 - 1.0) / (2.0 * fs);
    let row = |i: usize| harmonic_row(t0 + i as f64 / fs, tc, omega);
    let c = least_squares(x.len(), row, x)?;
    let rss = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let r = row(i);
            v - r.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()
        })
        .map(|e| e * e)
        .sum();
    Some((c, rss))
}

/// Fits the model to `x` sampled at times `t0 + i/fs`. The spectral
/// estimate seeds a search over ω minimising the residual of the
/// fundamental-plus-harmonic fit.
pub(crate) fn fit_context(x: &[f64], fs: f64, t0: f64) -> Option<Fit> {
    let w = Waveform::new(x.to_vec(), fs).ok()?;
    let est = estimate_hr(&w, &HrConfig::default()).ok()?;
    let rss = |f: f64| fit_coeffs(x, fs, t0, TAU * f).map_or(f64::INFINITY, |(_, r)| r);
    let f0 = est.bpm / 60.0;
    let half = fs / x.len() as f64;
    const STEPS: usize = 80;
    let (mut lo, mut hi) = ((f0 - half).max(0.3), f0 + half);
    let step = (hi - lo) / STEPS as f64;
    let best = (0..=STEPS)
        .map(|i| lo + i as f64 * step)
        .min_by(|a, b| rss(*a).total_cmp(&rss(*b)))?;
    (lo, hi) = ((best - step).max(lo), (best + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..50 {
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if rss(c) < rss(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let omega = TAU * 0.5 * (lo + hi);
    let (c, _) = fit_coeffs(x, fs, t0, omega)?;
    let tc = t0 + (x.len() as f64 - 1.0) / (2.0 * fs);
    // c2 cos + c3 sin = a1 cos(ωt − phi).
    let phi = c[3].atan2(c[2]);
    let phi2 = c[5].atan2(c[4]);
    Some(Fit {
        omega,
        phi,
        a1: c[2].hypot(c[3]),
        a2: c[4].hypot(c[5]),
        psi: phi2 - 2.0 * phi,
        // Affine part evaluated at the gap edge (t = 0) and held there, so
        // long extrapolations stay bounded.
        base: c[0] - c[1] * tc,
    })
}

pub(crate) fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

impl Reconstructor for HarmonicReconstructor {
    fn reconstruct(&self, before: &[f64], gap_len: usize, after: &[f64], fs: f64) -> Option<Vec<f64>> {
        if gap_len == 0 {
            return Some(Vec::new());
        }
        let need = (self.context_s * fs).round() as usize;
        let fb = (before.len() >= need).then(|| {
            let ctx = &before[before.len() - need..];
            fit_context(ctx, fs, -(need as f64) / fs)
        });
        let fa = (after.len() >= need).then(|| fit_context(&after[..need], fs, 0.0));
        let (fb, fa) = (fb.flatten(), fa.flatten());
        let g = gap_len as f64 / fs;
        let out = match (fb, fa) {
            (Some(b), Some(a)) => {
                // Φ(0) = −phi_b; Φ must reach −phi_a (mod 2π) at t = g.
                let naive = -b.phi + 0.5 * (b.omega + a.omega) * g;
                let delta = wrap(-a.phi - naive) / g;
                let dpsi = wrap(a.psi - b.psi);
                (0..gap_len)
                    .map(|j| {
                        let t = j as f64 / fs;
                        let u = t / g;
                        let phase = -b.phi + b.omega * t + 0.5 * (a.omega - b.omega) * t * t / g + delta * t;
                        let a1 = b.a1 + u * (a.a1 - b.a1);
                        let a2 = b.a2 + u * (a.a2 - b.a2);
                        let psi = b.psi + u * dpsi;
                        let base = b.base + u * (a.base - b.base);
                        base + a1 * phase.cos() + a2 * (2.0 * phase - psi).cos()
                    })
                    .collect()
            }
            (Some(b), None) => (0..gap_len)
                .map(|j| {
                    let p = b.omega * (j as f64 / fs) - b.phi;
                    b.base + b.a1 * p.cos() + b.a2 * (2.0 * p - b.psi).cos()
                })
                .collect(),
            (None, Some(a)) => (0..gap_len)
                .map(|j| {
                    let p = a.omega * ((j as f64 - gap_len as f64) / fs) - a.phi;
                    a.base + a.a1 * p.cos() + a.a2 * (2.0 * p - a.psi).cos()
                })
                .collect(),
            (None, None) => return None,
        };
        Some(out)
    }
}
