use crate::error::Result;

use super::align::CLIP_FRAMES;
use super::frames::FrameTensor;

pub const TARGET_FPS: f64 = 30.0;

/// Nearest-frame temporal resampling to `fps`.
pub fn resample_frames(video: &FrameTensor, fps: f64) -> Result<FrameTensor> {
    if (video.fps() - fps).abs() < 1e-9 {
        return Ok(video.clone());
    }
    let dur = video.n_frames() as f64 / video.fps();
    let n_out = ((dur * fps).round() as usize).max(1);
    let mut data = Vec::with_capacity(n_out * video.frame_len());
    for k in 0..n_out {
        let src = ((k as f64 * video.fps() / fps).round() as usize).min(video.n_frames() - 1);
        data.extend_from_slice(video.frame(src));
    }
    FrameTensor::new(n_out, video.height(), video.width(), fps, data)
}

/// Consecutive non-overlapping 60-frame clips at 30 fps; the remainder is
/// dropped.
pub fn segment_clips(video: &FrameTensor) -> Result<Vec<FrameTensor>> {
    let v = resample_frames(video, TARGET_FPS)?;
    (0..v.n_frames() / CLIP_FRAMES)
        .map(|i| v.sub_clip(i * CLIP_FRAMES..(i + 1) * CLIP_FRAMES))
        .collect()
}
