//! Frame rendering for one synthetic clip.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::artifacts::{inject_artifacts, CorruptionInterval};
use super::config::SynthConfig;
use super::physio::{ratio_from_spo2, Session, ARTIFACT_STREAM, CLIP_STREAM};
use crate::error::{Error, Result};
use crate::preprocess::{is_skin, rotate_cw, BBox, FrameTensor, Image};
use crate::rng;
use crate::signal::{design_bandpass, filtfilt_symmetric, BandpassSpec, Waveform};

/// Skin chromaticity before the per-subject gain.
pub const SKIN_RGB: [f64; 3] = [0.80, 0.62, 0.50];
const MARKER_RGB: [f64; 3] = [0.08, 0.07, 0.07];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub clip_id: String,
    pub subject: usize,
    pub clip_index: usize,
    /// Session time of the first frame, seconds.
    pub t0_s: f64,
    pub hr_series_bpm: Vec<f64>,
    pub spo2_series_pct: Vec<f64>,
    /// Face box in upright coordinates, one per frame.
    pub true_bbox: Vec<BBox>,
    pub orientation_deg: u16,
    pub corruption: Vec<CorruptionInterval>,
}

#[derive(Debug, Clone)]
pub struct SynthClip {
    pub meta: ClipMeta,
    pub frames: FrameTensor,
    /// Reference PPG as recorded (corrupted when `artifact_rate > 0`).
    pub ppg_ref: Waveform,
    /// Reference PPG before corruption.
    pub ppg_clean: Waveform,
}

pub fn clip_id(subject: usize, clip: usize) -> String {
    format!("s{subject:03}_c{clip:02}")
}

struct Face {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
}

impl Face {
    /// Normalised squared radius at the centre of pixel `(y, x)`.
    fn rho2(&self, y: usize, x: usize) -> f64 {
        let dx = (x as f64 + 0.5 - self.cx) / self.a;
        let dy = (y as f64 + 0.5 - self.cy) / self.b;
        dx * dx + dy * dy
    }

    fn is_marker(&self, y: usize, x: usize) -> bool {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        py >= self.cy - 0.75 * self.b
            && py <= self.cy - 0.55 * self.b
            && (px - self.cx).abs() <= 0.5 * self.a
    }
}

#[derive(Clone, Copy)]
enum Px {
    Skin([f64; 3]),
    Static([f64; 3]),
}

pub fn session_seconds(cfg: &SynthConfig) -> f64 {
    cfg.clips_per_subject as f64 * cfg.clip_seconds
}

/// Renders clip `clip` of `subject`. Clips of a subject are consecutive
/// pieces of one continuous session.
pub fn generate_clip(cfg: &SynthConfig, subject: usize, clip: usize) -> Result<SynthClip> {
    cfg.validate()?;
    if subject >= cfg.n_subjects || clip >= cfg.clips_per_subject {
        return Err(Error::InvalidArgument(format!(
            "clip ({subject}, {clip}) outside corpus"
        )));
    }
    let session = Session::draw(cfg, subject);
    let mut r = rng::stream(cfg.seed, &[CLIP_STREAM, subject as u64, clip as u64]);
    let (h, w) = cfg.frame_size;
    let t0 = clip as f64 * cfg.clip_seconds;

    let orientation = cfg.rotation_bins[r.random_range(0..cfg.rotation_bins.len())];
    let face = Face {
        a: w as f64 * r.random_range(0.22..0.28),
        b: h as f64 * r.random_range(0.30..0.36),
        cx: w as f64 / 2.0 + r.random_range(-4.0..4.0),
        cy: h as f64 / 2.0 + r.random_range(-4.0..4.0),
    };
    let drift_period = r.random_range(8.0..20.0);
    let drift_psi = r.random_range(0.0..TAU);

    let gain = session.skin_gain;
    let mut template = Vec::with_capacity(h * w);
    let mut bbox: Option<BBox> = None;
    for y in 0..h {
        for x in 0..w {
            let rho2 = face.rho2(y, x);
            let px = if rho2 <= 1.0 {
                bbox = Some(match bbox {
                    None => BBox { x0: x, y0: y, x1: x + 1, y1: y + 1 },
                    Some(b) => BBox {
                        x0: b.x0.min(x),
                        y0: b.y0.min(y),
                        x1: b.x1.max(x + 1),
                        y1: b.y1.max(y + 1),
                    },
                });
                if face.is_marker(y, x) {
                    Px::Static(MARKER_RGB)
                } else {
                    let shade = 1.0 - 0.18 * rho2;
                    Px::Skin(SKIN_RGB.map(|c| gain * c * shade))
                }
            } else {
                let tex = 1.0 + 0.05 * (x as f64 * 0.31 + y as f64 * 0.17).sin();
                Px::Static(session.background.map(|c| c * tex))
            };
            template.push(px);
        }
    }
    let bbox = bbox.ok_or_else(|| Error::Numerical("face ellipse is empty".into()))?;

    let sigma = cfg.noise_to_pulse * cfg.pulse_amplitude * gain * SKIN_RGB[1];
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let n_frames = cfg.n_frames();
    let quarter = (orientation / 90) as usize;
    let mut data = Vec::with_capacity(n_frames * h * w * 3);
    let mut img = Image::filled(h, w, [0.0; 3]);
    for f in 0..n_frames {
        let t = t0 + f as f64 / cfg.fps;
        let drift = 1.0 + cfg.illumination_drift_amp * (TAU * t / drift_period + drift_psi).sin();
        let p = session.pulse_at(t);
        let ratio = ratio_from_spo2(session.spo2_at(t));
        let pa = cfg.pulse_amplitude;
        let m = [0.5 * pa * ratio, pa, 0.5 * pa];
        for (i, px) in template.iter().enumerate() {
            let v = match px {
                Px::Skin(base) => [0, 1, 2].map(|c| base[c] * drift * (1.0 + m[c] * p)),
                Px::Static(base) => base.map(|c| c * drift),
            };
            let o = i * 3;
            for c in 0..3 {
                let z = if sigma > 0.0 { noise.sample(&mut r) } else { 0.0 };
                img.data[o + c] = (v[c] + z).clamp(0.0, 1.0) as f32;
            }
        }
        let shown = if quarter == 0 { img.clone() } else { rotate_cw(&img, quarter) };
        data.extend_from_slice(&shown.data);
    }
    let (fh, fw) = if quarter % 2 == 1 { (w, h) } else { (h, w) };
    let frames = FrameTensor::new(n_frames, fh, fw, cfg.fps, data)?;

    let n_ppg = (cfg.clip_seconds * cfg.ppg_rate_hz).round() as usize;
    let ppg_clean = Waveform::from_fn(n_ppg, cfg.ppg_rate_hz, |t| session.ppg_at(t0 + t))?;
    let (ppg_ref, corruption) = inject_artifacts(
        &ppg_clean,
        cfg.artifact_rate,
        rng::derive_seed(cfg.seed, &[ARTIFACT_STREAM, subject as u64, clip as u64]),
    )?;

    let windows = cfg.n_windows();
    let hr_series_bpm = (0..windows)
        .map(|k| session.mean_hr(t0 + 2.0 * k as f64, t0 + 2.0 * (k + 1) as f64))
        .collect();
    let spo2_series_pct = (0..windows)
        .map(|k| session.mean_spo2(t0 + 2.0 * k as f64, t0 + 2.0 * (k + 1) as f64))
        .collect();

    Ok(SynthClip {
        meta: ClipMeta {
            clip_id: clip_id(subject, clip),
            subject,
            clip_index: clip,
            t0_s: t0,
            hr_series_bpm,
            spo2_series_pct,
            true_bbox: vec![bbox; n_frames],
            orientation_deg: orientation,
            corruption,
        },
        frames,
        ppg_ref,
        ppg_clean,
    })
}

/// Continuous clean reference PPG for a subject, `seconds` long, starting at
/// session time zero.
pub fn session_ppg(cfg: &SynthConfig, subject: usize, seconds: f64) -> Result<(Waveform, Session)> {
    let session = Session::draw(cfg, subject);
    let n = (seconds * cfg.ppg_rate_hz).round() as usize;
    let w = Waveform::from_fn(n, cfg.ppg_rate_hz, |t| session.ppg_at(t))?;
    Ok((w, session))
}

/// Closed-form saturation decoder: the red and green modulations relative
/// to blue are proportional to `ratio - 1` and `1` respectively, so the
/// regression slope of one on the other recovers the ratio regardless of
/// common-mode illumination changes.
pub fn decode_spo2(frames: &FrameTensor) -> Result<f64> {
    let first = frames.frame(0);
    let skin: Vec<usize> = (0..frames.height() * frames.width())
        .filter(|&i| is_skin([first[3 * i], first[3 * i + 1], first[3 * i + 2]]))
        .collect();
    if skin.is_empty() {
        return Err(Error::NoSignal("no skin pixels".into()));
    }
    let means: Vec<[f64; 3]> = (0..frames.n_frames())
        .map(|f| {
            let fr = frames.frame(f);
            let mut acc = [0.0; 3];
            for &i in &skin {
                for c in 0..3 {
                    acc[c] += fr[3 * i + c] as f64;
                }
            }
            acc.map(|v| v / skin.len() as f64)
        })
        .collect();
    let dc: [f64; 3] =
        [0, 1, 2].map(|c| means.iter().map(|m| m[c]).sum::<f64>() / means.len() as f64);
    let rel = |c: usize| -> Vec<f64> { means.iter().map(|m| m[c] / dc[c] - 1.0).collect() };
    let (xr, xg, xb) = (rel(0), rel(1), rel(2));
    let u: Vec<f64> = xr.iter().zip(&xb).map(|(a, b)| a - b).collect();
    let v: Vec<f64> = xg.iter().zip(&xb).map(|(a, b)| a - b).collect();
    // Keep the cardiac band only; residual drift is second order.
    let (u, v) = if frames.n_frames() > 3 * 4 + 1 {
        let coeffs = design_bandpass(&BandpassSpec::default(), frames.fps())?;
        (filtfilt_symmetric(&coeffs, &u)?, filtfilt_symmetric(&coeffs, &v)?)
    } else {
        (u, v)
    };
    let num: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().map(|b| b * b).sum();
    if den <= 0.0 {
        return Err(Error::NoSignal("no pulsatile modulation".into()));
    }
    Ok(super::physio::spo2_from_ratio(1.0 + num / den))
}
