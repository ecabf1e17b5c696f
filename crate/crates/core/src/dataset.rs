//! Turns synthetic clips into aligned, normalized 2 s network samples.

use crate::error::Result;
use crate::nn::{clip_input, wave_target, Sample};
use crate::preprocess::{align_video, diff_normalize, AlignConfig, FaceDetector, CLIP_FRAMES, TARGET_FPS};
use crate::signal::{resample_linear, Waveform};
use crate::synth::{generate_clip, SynthClip, SynthConfig};

/// One 2 s window with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub clip_id: String,
    pub subject: usize,
    /// Window index inside the clip.
    pub window: usize,
    pub hr_bpm: f64,
    pub sample: Sample,
}

/// Aligns every 60-frame window of a clip and pairs it with the matching
/// reference PPG segment. Windows that fail alignment are dropped.
pub fn clip_windows(
    clip: &SynthClip,
    ppg: &Waveform,
    detector: &dyn FaceDetector,
    align: &AlignConfig,
) -> Result<Vec<WindowSample>> {
    let aligned = align_video(&clip.frames, detector, &clip.meta.clip_id, align)?;
    let ppg = resample_linear(ppg, TARGET_FPS)?;
    let mut out = Vec::new();
    for (pos, a) in aligned.clips {
        if pos % CLIP_FRAMES != 0 {
            continue;
        }
        let k = pos / CLIP_FRAMES;
        let (Some(&hr), Some(&spo2)) = (clip.meta.hr_series_bpm.get(k), clip.meta.spo2_series_pct.get(k)) else {
            continue;
        };
        let end = (pos + CLIP_FRAMES).min(ppg.len());
        if end - pos < CLIP_FRAMES {
            continue;
        }
        let diff = diff_normalize(&a.frames)?;
        let sample = Sample {
            input: clip_input(&diff, CLIP_FRAMES)?,
            wave: wave_target(&ppg.samples()[pos..end], CLIP_FRAMES)?,
            spo2,
        };
        out.push(WindowSample {
            clip_id: clip.meta.clip_id.clone(),
            subject: clip.meta.subject,
            window: k,
            hr_bpm: hr,
            sample,
        });
    }
    Ok(out)
}

/// Windows of the listed `(subject, clip)` pairs, supervised by the clean
/// reference PPG.
pub fn synth_windows(
    cfg: &SynthConfig,
    keys: &[(usize, usize)],
    detector: &dyn FaceDetector,
    align: &AlignConfig,
) -> Result<Vec<WindowSample>> {
    let mut out = Vec::new();
    for &(s, c) in keys {
        let clip = generate_clip(cfg, s, c)?;
        out.extend(clip_windows(&clip, &clip.ppg_clean, detector, align)?);
    }
    Ok(out)
}
