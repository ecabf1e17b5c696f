//! Clip segmentation, face alignment and difference normalization.

mod align;
mod detector;
mod frames;
mod image;
mod normalize;
mod segment;

pub use align::{
    align_clip, align_video, apply_alignment, rotation_order, search_rotation, write_skip_log, AlignConfig,
    AlignOutcome, AlignedClip, AlignmentState, SkipRecord, VideoAlignment, ANCHOR_STEP,
    CLIP_FRAMES, ROTATIONS,
};
pub use detector::{is_skin, FaceDetector, MarkerDetector};
pub use frames::{FrameTensor, Image};
pub use image::{crop_resize, rotate_ccw, rotate_cw, BBox};
pub use normalize::{diff_normalize, time_reverse, DiffClip, DIFF_EPS};
pub use segment::{resample_frames, segment_clips, TARGET_FPS};
