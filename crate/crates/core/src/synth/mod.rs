//! Deterministic synthetic corpus: pulse-modulated face clips, paired
//! reference PPG with optional artifacts, and HR/SpO2 labels.

mod artifacts;
mod config;
mod physio;
mod render;

pub use artifacts::{
    corruption_mask, inject_artifacts, ArtifactKind, CorruptionInterval, MAX_ARTIFACT_S,
    MIN_ARTIFACT_S,
};
pub use config::SynthConfig;
pub use physio::{pulse_shape, ratio_from_spo2, spo2_from_ratio, Session};
pub use render::{
    clip_id, decode_spo2, generate_clip, session_ppg, session_seconds, ClipMeta, SynthClip,
    SKIN_RGB,
};

/// Every `(subject, clip)` pair of the corpus in canonical order.
pub fn clip_keys(cfg: &SynthConfig) -> Vec<(usize, usize)> {
    (0..cfg.n_subjects)
        .flat_map(|s| (0..cfg.clips_per_subject).map(move |c| (s, c)))
        .collect()
}
