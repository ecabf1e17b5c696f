//! On-disk formats and the staged pipeline.

mod containers;
mod manifest;
mod pipeline;

pub use containers::{
    decode_waveform, encode_waveform, read_waveform, write_waveform, write_waveform_csv, FrameContainer, FORMAT_VERSION,
    FRAME_MAGIC, WAVE_MAGIC,
};
pub use manifest::{
    assign_splits, ClipEntry, Manifest, Split, SplitFractions, SubjectEntry, WindowLabel, MANIFEST_VERSION,
};
pub use pipeline::{
    load_samples, report_path, run_pipeline, run_pipeline_file, ClipPrediction, DenoiseStage, EvalStage,
    LabelledWindow, PipelineConfig, PipelineReport, PreprocessStage, Spo2Stage, Stage, StageRun, WindowAlignment,
    WindowPrediction,
};
