//! Slowly varying physiology of one subject session.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::config::SynthConfig;
use crate::rng;

pub(crate) const SUBJECT_STREAM: u64 = 1;
pub(crate) const CLIP_STREAM: u64 = 2;
pub(crate) const ARTIFACT_STREAM: u64 = 3;

const SHAPE_NORM: f64 = 0.752_495_847_164_620_6; // sqrt((1 + 0.35² + 0.1²) / 2)

/// Unit-RMS pulse waveform with a dicrotic-like second harmonic.
pub fn pulse_shape(phase: f64) -> f64 {
    (phase.sin() + 0.35 * (2.0 * phase + 0.9).sin() + 0.1 * (3.0 * phase + 1.8).sin()) / SHAPE_NORM
}

/// A sinusoidal wander `base + dev·sin(2πt/period + psi)`.
#[derive(Debug, Clone, Copy)]
struct Wander {
    base: f64,
    dev: f64,
    period: f64,
    psi: f64,
}

impl Wander {
    fn at(&self, t: f64) -> f64 {
        self.base + self.dev * (TAU * t / self.period + self.psi).sin()
    }

    /// Integral from 0 to `t`.
    fn integral(&self, t: f64) -> f64 {
        let w = TAU / self.period;
        self.base * t + self.dev / w * (self.psi.cos() - (w * t + self.psi).cos())
    }

    fn mean(&self, t0: f64, t1: f64) -> f64 {
        (self.integral(t1) - self.integral(t0)) / (t1 - t0)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    hr: Wander,
    spo2: Wander,
    phase0: f64,
    pub resp_hz: f64,
    pub resp_amp: f64,
    resp_phase: f64,
    /// Skin gain in [0.7, 1].
    pub skin_gain: f64,
    pub background: [f64; 3],
}

impl Session {
    pub fn draw(cfg: &SynthConfig, subject: usize) -> Self {
        let mut r = rng::stream(cfg.seed, &[SUBJECT_STREAM, subject as u64]);
        let (hr_lo, hr_hi) = cfg.hr_range_bpm;
        let hr_dev = cfg.hr_wander_bpm.min(0.25 * (hr_hi - hr_lo));
        let hr = Wander {
            base: r.random_range(hr_lo + hr_dev..=hr_hi - hr_dev),
            dev: hr_dev,
            period: r.random_range(60.0..120.0),
            psi: r.random_range(0.0..TAU),
        };
        let (s_lo, s_hi) = cfg.spo2_range_pct;
        let s_dev = cfg.spo2_wander_pct.min(0.25 * (s_hi - s_lo));
        // Max of two uniforms: density rises linearly towards the top of range.
        let u = r.random::<f64>().max(r.random::<f64>());
        let spo2 = Wander {
            base: s_lo + s_dev + u * (s_hi - s_lo - 2.0 * s_dev),
            dev: s_dev,
            period: r.random_range(40.0..90.0),
            psi: r.random_range(0.0..TAU),
        };
        let shade = r.random_range(0.9..1.1);
        Self {
            hr,
            spo2,
            phase0: r.random_range(0.0..TAU),
            resp_hz: r.random_range(0.5..0.9),
            resp_amp: 0.1,
            resp_phase: r.random_range(0.0..TAU),
            skin_gain: r.random_range(0.7..1.0),
            background: [0.35 * shade, 0.42 * shade, 0.52 * shade],
        }
    }

    pub fn hr_at(&self, t: f64) -> f64 {
        self.hr.at(t)
    }

    pub fn spo2_at(&self, t: f64) -> f64 {
        self.spo2.at(t)
    }

    pub fn mean_hr(&self, t0: f64, t1: f64) -> f64 {
        self.hr.mean(t0, t1)
    }

    pub fn mean_spo2(&self, t0: f64, t1: f64) -> f64 {
        self.spo2.mean(t0, t1)
    }

    /// Cardiac phase in radians.
    pub fn phase_at(&self, t: f64) -> f64 {
        self.phase0 + TAU * self.hr.integral(t) / 60.0
    }

    pub fn pulse_at(&self, t: f64) -> f64 {
        pulse_shape(self.phase_at(t))
    }

    /// Contact PPG: pulse plus a small respiratory baseline.
    pub fn ppg_at(&self, t: f64) -> f64 {
        self.pulse_at(t) + self.resp_amp * (2.0 * PI * self.resp_hz * t + self.resp_phase).sin()
    }
}

/// Red-to-blue modulation ratio encoding a saturation value.
pub fn ratio_from_spo2(spo2: f64) -> f64 {
    (110.0 - spo2) / 25.0
}

pub fn spo2_from_ratio(r: f64) -> f64 {
    110.0 - 25.0 * r
}
