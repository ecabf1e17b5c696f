use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a synthetic corpus. Every clip is a function of
/// `(seed, subject, clip)` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_subjects: usize,
    pub clips_per_subject: usize,
    pub clip_seconds: f64,
    pub fps: f64,
    /// `(height, width)` of the rendered frames.
    pub frame_size: (usize, usize),
    pub hr_range_bpm: (f64, f64),
    pub spo2_range_pct: (f64, f64),
    pub artifact_rate: f64,
    pub rotation_bins: Vec<u16>,
    pub illumination_drift_amp: f64,
    /// Green-channel pulsatile amplitude relative to the skin level.
    pub pulse_amplitude: f64,
    /// Per-pixel noise std as a multiple of the absolute green pulse amplitude.
    pub noise_to_pulse: f64,
    /// Peak deviation of the slow heart-rate wander over a session.
    pub hr_wander_bpm: f64,
    pub spo2_wander_pct: f64,
    pub ppg_rate_hz: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::clean(7)
    }
}

impl SynthConfig {
    /// High-SNR preset: pixel pulse amplitude is 12× the pixel noise std.
    pub fn clean(seed: u64) -> Self {
        Self {
            seed,
            n_subjects: 20,
            clips_per_subject: 3,
            clip_seconds: 8.0,
            fps: 30.0,
            frame_size: (64, 64),
            hr_range_bpm: (79.0, 174.0),
            spo2_range_pct: (87.0, 99.0),
            artifact_rate: 0.0,
            rotation_bins: vec![0, 90, 180, 270],
            illumination_drift_amp: 0.03,
            pulse_amplitude: 0.02,
            noise_to_pulse: 1.0 / 12.0,
            hr_wander_bpm: 6.0,
            spo2_wander_pct: 0.5,
            ppg_rate_hz: 60.0,
        }
    }

    /// Low-SNR preset: pixel noise std equal to the pulse amplitude.
    pub fn hard(seed: u64) -> Self {
        Self {
            noise_to_pulse: 1.0,
            illumination_drift_amp: 0.08,
            artifact_rate: 0.2,
            ..Self::clean(seed)
        }
    }

    pub fn n_frames(&self) -> usize {
        (self.clip_seconds * self.fps).round() as usize
    }

    pub fn n_windows(&self) -> usize {
        (self.clip_seconds / 2.0).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !range_ok(self.hr_range_bpm) {
            return Err(Error::Config(format!("degenerate hr range {:?}", self.hr_range_bpm)));
        }
        if !range_ok(self.spo2_range_pct) || self.spo2_range_pct.1 > 100.0 {
            return Err(Error::Config(format!(
                "invalid spo2 range {:?}",
                self.spo2_range_pct
            )));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::Config(format!("fps must be positive, got {}", self.fps)));
        }
        if !(0.0..=1.0).contains(&self.artifact_rate) {
            return Err(Error::Config(format!(
                "artifact_rate must lie in [0, 1], got {}",
                self.artifact_rate
            )));
        }
        if self.rotation_bins.is_empty()
            || self.rotation_bins.iter().any(|r| ![0, 90, 180, 270].contains(r))
        {
            return Err(Error::Config(format!(
                "rotation bins must be a non-empty subset of 0/90/180/270, got {:?}",
                self.rotation_bins
            )));
        }
        if self.n_subjects == 0 || self.clips_per_subject == 0 {
            return Err(Error::Config("corpus must contain at least one clip".into()));
        }
        if self.n_frames() < 2 {
            return Err(Error::Config("clips need at least two frames".into()));
        }
        let (h, w) = self.frame_size;
        if h < 16 || w < 16 {
            return Err(Error::Config(format!("frame size {h}x{w} too small")));
        }
        if !(self.ppg_rate_hz > 0.0) || !(self.pulse_amplitude > 0.0) || self.noise_to_pulse < 0.0 {
            return Err(Error::Config("rates and amplitudes must be positive".into()));
        }
        if self.hr_wander_bpm < 0.0 || self.spo2_wander_pct < 0.0 || self.illumination_drift_amp < 0.0 {
            return Err(Error::Config("wander amplitudes must be non-negative".into()));
        }
        Ok(())
    }
}
