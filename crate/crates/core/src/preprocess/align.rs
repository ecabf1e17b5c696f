//! Rotation-search face alignment with a 30-frame retry cadence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::detector::FaceDetector;
use super::frames::{FrameTensor, Image};
use super::image::{crop_resize, rotate_ccw, BBox};

pub const CLIP_FRAMES: usize = 60;
pub const ANCHOR_STEP: usize = 30;
pub const ROTATIONS: [u16; 4] = [0, 90, 180, 270];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentState {
    pub current_bbox: Option<BBox>,
    pub current_rotation_deg: u16,
    pub frames_consumed: usize,
}

impl Default for AlignmentState {
    fn default() -> Self {
        Self {
            current_bbox: None,
            current_rotation_deg: 0,
            frames_consumed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub clip_id: String,
    pub reason: String,
    pub frame_offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedClip {
    pub frames: FrameTensor,
    pub bbox: BBox,
    pub rotation_deg: u16,
    /// Rotation bins tried before the successful one.
    pub failed_rotations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlignOutcome {
    Aligned(AlignedClip),
    Skipped(SkipRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignConfig {
    pub out_size: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self { out_size: 128 }
    }
}

/// Rotation order: ascending bins starting at `start`.
pub fn rotation_order(start: u16) -> [u16; 4] {
    let k = ROTATIONS.iter().position(|&r| r == start).unwrap_or(0);
    std::array::from_fn(|i| ROTATIONS[(k + i) % 4])
}

/// Searches the rotation bins on one frame; returns the bbox (in the
/// rotated frame), the rotation and the number of failed attempts.
pub fn search_rotation(
    frame: &Image,
    detector: &dyn FaceDetector,
    start: u16,
) -> Option<(BBox, u16, usize)> {
    for (i, rot) in rotation_order(start).into_iter().enumerate() {
        let img = rotate_ccw(frame, (rot / 90) as usize);
        if let Some(b) = detector.detect(&img) {
            return Some((b.clamp_to(img.h, img.w), rot, i));
        }
    }
    None
}

/// Rotates every frame by `rot` degrees counter-clockwise and crops `bbox`
/// resized to `out × out`.
pub fn apply_alignment(clip: &FrameTensor, rot: u16, bbox: &BBox, out: usize) -> Result<FrameTensor> {
    let images: Vec<Image> = (0..clip.n_frames())
        .map(|i| crop_resize(&rotate_ccw(&clip.image(i), (rot / 90) as usize), bbox, out, out))
        .collect();
    FrameTensor::from_images(&images, clip.fps())
}

/// Aligns one clip. Detection runs on frame 0 and, failing that, on the
/// next 30-frame anchor. A hit only at a later anchor yields a skip record
/// whose `frame_offset` is the recovery frame, so the caller can restart
/// the window there.
pub fn align_clip(
    clip: &FrameTensor,
    detector: &dyn FaceDetector,
    state: &mut AlignmentState,
    clip_id: &str,
    cfg: &AlignConfig,
) -> Result<AlignOutcome> {
    if clip.n_frames() < 2 {
        return Err(Error::Length {
            needed: 2,
            got: clip.n_frames(),
        });
    }
    let mut anchor = 0;
    while anchor < clip.n_frames() {
        if let Some((bbox, rot, failed)) =
            search_rotation(&clip.image(anchor), detector, state.current_rotation_deg)
        {
            state.current_bbox = Some(bbox);
            state.current_rotation_deg = rot;
            if anchor == 0 {
                state.frames_consumed += clip.n_frames();
                let frames = apply_alignment(clip, rot, &bbox, cfg.out_size)?;
                return Ok(AlignOutcome::Aligned(AlignedClip {
                    frames,
                    bbox,
                    rotation_deg: rot,
                    failed_rotations: failed,
                }));
            }
            state.frames_consumed += anchor;
            log::debug!("{clip_id}: face recovered at frame {anchor}");
            return Ok(AlignOutcome::Skipped(SkipRecord {
                clip_id: clip_id.to_string(),
                reason: "recovered-mid-clip".into(),
                frame_offset: anchor,
            }));
        }
        state.current_bbox = None;
        anchor += ANCHOR_STEP;
    }
    state.frames_consumed += clip.n_frames();
    Ok(AlignOutcome::Skipped(SkipRecord {
        clip_id: clip_id.to_string(),
        reason: "no-detection".into(),
        frame_offset: 0,
    }))
}

/// Result of aligning a whole video.
#[derive(Debug, Clone, Default)]
pub struct VideoAlignment {
    /// Start frame and aligned 60-frame clip.
    pub clips: Vec<(usize, AlignedClip)>,
    pub skips: Vec<SkipRecord>,
}

/// Walks a video in 60-frame windows. After a mid-window recovery the next
/// window starts at the recovery frame.
pub fn align_video(
    video: &FrameTensor,
    detector: &dyn FaceDetector,
    video_id: &str,
    cfg: &AlignConfig,
) -> Result<VideoAlignment> {
    let mut state = AlignmentState::default();
    let mut out = VideoAlignment::default();
    let mut pos = 0;
    while pos + CLIP_FRAMES <= video.n_frames() {
        let clip = video.sub_clip(pos..pos + CLIP_FRAMES)?;
        let id = format!("{video_id}@{pos}");
        match align_clip(&clip, detector, &mut state, &id, cfg)? {
            AlignOutcome::Aligned(a) => {
                out.clips.push((pos, a));
                pos += CLIP_FRAMES;
            }
            AlignOutcome::Skipped(s) => {
                let advance = if s.frame_offset > 0 {
                    s.frame_offset
                } else {
                    CLIP_FRAMES
                };
                out.skips.push(SkipRecord {
                    frame_offset: pos + s.frame_offset,
                    ..s
                });
                pos += advance;
            }
        }
    }
    Ok(out)
}

/// Appends skip records as JSON lines.
pub fn write_skip_log(path: &std::path::Path, records: &[SkipRecord]) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_wraps_from_start() {
        assert_eq!(rotation_order(0), [0, 90, 180, 270]);
        assert_eq!(rotation_order(180), [180, 270, 0, 90]);
    }
}
