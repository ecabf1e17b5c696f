//! Declarative end-to-end runs with per-stage caching.
//!
//! Each stage writes into `<out_dir>/<stage>/` and finishes by recording a
//! digest of its configuration and of its inputs' digests. A stage whose
//! recorded digest matches is skipped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::containers::{read_waveform, write_waveform, FrameContainer};
use super::manifest::{assign_splits, ClipEntry, Manifest, Split, SplitFractions, SubjectEntry, WindowLabel, MANIFEST_VERSION};
use crate::error::{Error, Result};
use crate::eval::{
    compute_metrics, export_bland_altman, export_scatter, multi_window_eval, render_table, EvalReport,
    MultiWindowTable, WindowSeries,
};
use crate::nn::{
    clip_input, hr_from_predictions, load_checkpoint, save_checkpoint, train_hr, train_spo2, wave_target, History,
    LdsConfig, PhysNet, PhysNetConfig, Sample, Tensor, TrainConfig,
};
use crate::ppgclean::{denoise, BuiltinScreen, DenoiseConfig, HarmonicReconstructor};
use crate::preprocess::{
    align_video, apply_alignment, diff_normalize, write_skip_log, AlignConfig, BBox, MarkerDetector, CLIP_FRAMES,
    TARGET_FPS,
};
use crate::signal::resample_linear;
use crate::synth::{clip_keys, generate_clip, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessStage {
    pub out_size: usize,
}

impl Default for PreprocessStage {
    fn default() -> Self {
        Self { out_size: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseStage {
    pub enabled: bool,
    #[serde(flatten)]
    pub config: DenoiseConfig,
}

impl Default for DenoiseStage {
    fn default() -> Self {
        Self {
            enabled: true,
            config: DenoiseConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Spo2Stage {
    #[serde(flatten)]
    pub train: TrainConfig,
    /// Freezes the first two encoder blocks on top of `frozen_layers`.
    pub fine_tune: bool,
    /// LDS-weighted loss; plain RMSE when false.
    pub lds: bool,
    pub lds_config: LdsConfig,
}

impl Default for Spo2Stage {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            fine_tune: true,
            lds: true,
            lds_config: LdsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalStage {
    pub windows_s: Vec<f64>,
}

impl Default for EvalStage {
    fn default() -> Self {
        Self {
            windows_s: vec![2.0, 4.0, 6.0, 8.0],
        }
    }
}

/// Whole-run configuration, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Overrides the seeds of the corpus, the split and both trainings.
    pub seed: u64,
    /// Relative paths resolve against the config file's directory.
    pub out_dir: PathBuf,
    pub synth: SynthConfig,
    pub split: SplitFractions,
    pub preprocess: PreprocessStage,
    pub denoise: DenoiseStage,
    pub model: PhysNetConfig,
    pub train_hr: TrainConfig,
    pub train_spo2: Spo2Stage,
    pub eval: EvalStage,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            out_dir: PathBuf::from("run"),
            synth: SynthConfig::clean(7),
            split: SplitFractions::default(),
            preprocess: PreprocessStage::default(),
            denoise: DenoiseStage::default(),
            model: PhysNetConfig::default(),
            train_hr: TrainConfig::default(),
            train_spo2: Spo2Stage::default(),
            eval: EvalStage::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves `out_dir` against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if cfg.out_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    /// Copies the global seed into every seeded section.
    fn seeded(&self) -> Self {
        let mut c = self.clone();
        c.synth.seed = self.seed;
        c.train_hr.seed = self.seed;
        c.train_spo2.train.seed = self.seed;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    SynthGen,
    Preprocess,
    Denoise,
    TrainHr,
    TrainSpo2,
    Predict,
    Eval,
    Plot,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::SynthGen,
        Stage::Preprocess,
        Stage::Denoise,
        Stage::TrainHr,
        Stage::TrainSpo2,
        Stage::Predict,
        Stage::Eval,
        Stage::Plot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::SynthGen => "synth-gen",
            Stage::Preprocess => "preprocess",
            Stage::Denoise => "denoise",
            Stage::TrainHr => "train-hr",
            Stage::TrainSpo2 => "train-spo2",
            Stage::Predict => "predict",
            Stage::Eval => "eval",
            Stage::Plot => "plot",
        }
    }

    fn dir(self) -> &'static str {
        match self {
            Stage::SynthGen => "synth",
            Stage::Preprocess => "preprocess",
            Stage::Denoise => "denoise",
            Stage::TrainHr => "train_hr",
            Stage::TrainSpo2 => "train_spo2",
            Stage::Predict => "predict",
            Stage::Eval => "eval",
            Stage::Plot => "plot",
        }
    }

    fn inputs(self) -> &'static [Stage] {
        match self {
            Stage::SynthGen => &[],
            Stage::Preprocess => &[Stage::SynthGen],
            Stage::Denoise => &[Stage::SynthGen],
            Stage::TrainHr => &[Stage::Preprocess, Stage::Denoise],
            Stage::TrainSpo2 => &[Stage::Preprocess, Stage::Denoise, Stage::TrainHr],
            Stage::Predict => &[Stage::Preprocess, Stage::Denoise, Stage::TrainHr, Stage::TrainSpo2],
            Stage::Eval => &[Stage::Predict],
            Stage::Plot => &[Stage::Eval],
        }
    }

    /// JSON of the configuration sections this stage depends on.
    fn config_json(self, c: &PipelineConfig) -> Result<String> {
        let v = match self {
            Stage::SynthGen => serde_json::json!({ "synth": c.synth, "split": c.split }),
            Stage::Preprocess => serde_json::json!({ "preprocess": c.preprocess }),
            Stage::Denoise => serde_json::json!({ "denoise": c.denoise }),
            Stage::TrainHr => serde_json::json!({ "model": c.model, "train": c.train_hr }),
            Stage::TrainSpo2 => serde_json::json!({ "model": c.model, "train": c.train_spo2 }),
            Stage::Predict => serde_json::json!({ "model": c.model }),
            Stage::Eval => serde_json::json!({ "eval": c.eval }),
            Stage::Plot => serde_json::json!({}),
        };
        Ok(serde_json::to_string(&v)?)
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRun {
    pub stage: Stage,
    pub digest: String,
    /// False when the cached output was reused.
    pub executed: bool,
}

const DIGEST_FILE: &str = "stage.digest";

/// Runs every stage up to and including `until`.
pub fn run_pipeline(cfg: &PipelineConfig, until: Stage) -> Result<Vec<StageRun>> {
    let cfg = cfg.seeded();
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut digests: BTreeMap<Stage, String> = BTreeMap::new();
    let mut runs = Vec::new();
    for stage in Stage::ALL.into_iter().filter(|s| *s <= until) {
        let mut h = Sha256::new();
        h.update(stage.name());
        h.update(stage.config_json(&cfg)?);
        for dep in stage.inputs() {
            h.update(&digests[dep]);
        }
        let digest = hex::encode(h.finalize());
        let dir = cfg.out_dir.join(stage.dir());
        let stamp = dir.join(DIGEST_FILE);
        let cached = std::fs::read_to_string(&stamp).is_ok_and(|d| d.trim() == digest);
        if !cached {
            if dir.exists() {
                std::fs::remove_dir_all(&dir)?;
            }
            std::fs::create_dir_all(&dir)?;
            log::info!("running {}", stage.name());
            run_stage(stage, &cfg, &dir)?;
            std::fs::write(&stamp, format!("{digest}\n"))?;
        } else {
            log::info!("{} is up to date", stage.name());
        }
        digests.insert(stage, digest.clone());
        runs.push(StageRun {
            stage,
            digest,
            executed: !cached,
        });
    }
    Ok(runs)
}

/// Loads a TOML config and runs all stages.
pub fn run_pipeline_file(path: &Path) -> Result<Vec<StageRun>> {
    run_pipeline(&PipelineConfig::load(path)?, Stage::Plot)
}

fn stage_dir(cfg: &PipelineConfig, s: Stage) -> PathBuf {
    cfg.out_dir.join(s.dir())
}

fn run_stage(stage: Stage, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    match stage {
        Stage::SynthGen => synth_gen(cfg, dir),
        Stage::Preprocess => preprocess(cfg, dir),
        Stage::Denoise => denoise_stage(cfg, dir),
        Stage::TrainHr => {
            let (train, val) = (load_samples(cfg, Split::Train)?, load_samples(cfg, Split::Val)?);
            let mut model = PhysNet::new(cfg.model.clone(), cfg.seed)?;
            let history = train_hr(&mut model, &strip(&train), &strip(&val), &cfg.train_hr)?;
            save_model(&model, &history, dir)
        }
        Stage::TrainSpo2 => {
            let (train, val) = (load_samples(cfg, Split::Train)?, load_samples(cfg, Split::Val)?);
            let mut model = load_checkpoint(&stage_dir(cfg, Stage::TrainHr).join("model.pfck"), &cfg.model)?;
            let s = &cfg.train_spo2;
            let lds = s.lds.then_some(&s.lds_config);
            let mut tc = s.train.clone();
            if s.fine_tune {
                tc.frozen_layers.extend(TrainConfig::default().fine_tune().frozen_layers);
            }
            let history = train_spo2(&mut model, &strip(&train), &strip(&val), &tc, lds)?;
            save_model(&model, &history, dir)
        }
        Stage::Predict => predict(cfg, dir),
        Stage::Eval => evaluate(cfg, dir),
        Stage::Plot => plot(cfg, dir),
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn synth_gen(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let keys = clip_keys(&cfg.synth);
    let ids: Vec<String> = (0..cfg.synth.n_subjects).map(|s| format!("s{s:03}")).collect();
    let splits = assign_splits(&ids, &cfg.split, cfg.seed)?;
    let clips = keys
        .par_iter()
        .map(|&(s, c)| generate_clip(&cfg.synth, s, c))
        .collect::<Result<Vec<_>>>()?;
    let mut subjects: Vec<SubjectEntry> = ids
        .iter()
        .map(|id| SubjectEntry {
            subject_id: id.clone(),
            clips: Vec::new(),
        })
        .collect();
    for clip in &clips {
        let id = &clip.meta.clip_id;
        FrameContainer::from_frames(&clip.frames).write(&dir.join(format!("{id}.pfvf")))?;
        write_waveform(&clip.ppg_ref, &dir.join(format!("{id}.pfwv")))?;
        let labels = clip
            .meta
            .hr_series_bpm
            .iter()
            .zip(&clip.meta.spo2_series_pct)
            .enumerate()
            .map(|(window, (&hr_bpm, &spo2_pct))| WindowLabel {
                window,
                hr_bpm,
                spo2_pct,
            })
            .collect();
        let subject = &mut subjects[clip.meta.subject];
        subject.clips.push(ClipEntry {
            clip_id: id.clone(),
            frames_path: format!("{id}.pfvf"),
            ppg_path: format!("{id}.pfwv"),
            labels,
            split: splits[&subject.subject_id],
            retained: true,
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        subjects,
    };
    manifest.validate_files(dir)?;
    manifest.write(&dir.join("manifest.json"))
}

/// Alignment chosen for one 60-frame window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowAlignment {
    pub window: usize,
    pub start_frame: usize,
    pub rotation_deg: u16,
    pub bbox: BBox,
}

type AlignmentMap = BTreeMap<String, Vec<WindowAlignment>>;

fn preprocess(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let synth_dir = stage_dir(cfg, Stage::SynthGen);
    let manifest = Manifest::read(&synth_dir.join("manifest.json"))?;
    let det = MarkerDetector::default();
    let align = AlignConfig {
        out_size: cfg.preprocess.out_size,
    };
    let clips: Vec<&ClipEntry> = manifest.clips().collect();
    let results = clips
        .par_iter()
        .map(|c| {
            let frames = FrameContainer::read(&synth_dir.join(&c.frames_path))?.to_frames()?;
            let v = align_video(&frames, &det, &c.clip_id, &align)?;
            let windows = v
                .clips
                .iter()
                .filter(|(pos, _)| pos % CLIP_FRAMES == 0)
                .map(|(pos, a)| WindowAlignment {
                    window: pos / CLIP_FRAMES,
                    start_frame: *pos,
                    rotation_deg: a.rotation_deg,
                    bbox: a.bbox,
                })
                .collect::<Vec<_>>();
            Ok((c.clip_id.clone(), windows, v.skips))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut map = AlignmentMap::new();
    let mut skips = Vec::new();
    for (id, w, s) in results {
        map.insert(id, w);
        skips.extend(s);
    }
    write_skip_log(&dir.join("skips.jsonl"), &skips)?;
    write_json(&dir.join("alignment.json"), &map)
}

fn denoise_stage(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let synth_dir = stage_dir(cfg, Stage::SynthGen);
    let mut manifest = Manifest::read(&synth_dir.join("manifest.json"))?;
    let screen = BuiltinScreen::default();
    let rec = HarmonicReconstructor::default();
    let mut reports = BTreeMap::new();
    for subject in &mut manifest.subjects {
        for clip in &mut subject.clips {
            let w = read_waveform(&synth_dir.join(&clip.ppg_path))?;
            let cleaned = if cfg.denoise.enabled {
                let out = denoise(&w, &screen, &rec, &cfg.denoise.config, &[])?;
                reports.insert(clip.clip_id.clone(), out.report);
                out.waveform
            } else {
                w
            };
            // A window keeps its label only if all of its reference samples
            // survived cleaning.
            let fs = cleaned.sample_rate_hz();
            let per_window = (2.0 * fs).round() as usize;
            let mask = cleaned.quality_mask();
            clip.labels.retain(|l| {
                let r = l.window * per_window..(l.window + 1) * per_window;
                r.end <= mask.len() && mask[r].iter().all(|&m| m)
            });
            clip.retained = !clip.labels.is_empty();
            let name = format!("{}.pfwv", clip.clip_id);
            write_waveform(&cleaned, &dir.join(&name))?;
            clip.ppg_path = name;
            clip.frames_path = format!("../{}/{}", Stage::SynthGen.dir(), clip.frames_path);
        }
    }
    manifest.validate_files(dir)?;
    write_json(&dir.join("clean_reports.json"), &reports)?;
    manifest.write(&dir.join("manifest.json"))
}

/// Network-ready window with its identifiers and labels.
#[derive(Debug, Clone)]
pub struct LabelledWindow {
    pub clip_id: String,
    pub subject_id: String,
    pub window: usize,
    pub hr_bpm: f64,
    pub sample: Sample,
}

fn strip(w: &[LabelledWindow]) -> Vec<Sample> {
    w.iter().map(|w| w.sample.clone()).collect()
}

/// Builds the retained, aligned windows of one split from the cleaned
/// manifest and the recorded alignment.
pub fn load_samples(cfg: &PipelineConfig, split: Split) -> Result<Vec<LabelledWindow>> {
    let den = stage_dir(cfg, Stage::Denoise);
    let manifest = Manifest::read(&den.join("manifest.json"))?;
    let align: AlignmentMap = read_json(&stage_dir(cfg, Stage::Preprocess).join("alignment.json"))?;
    let out_size = cfg.preprocess.out_size;
    if out_size != cfg.model.size {
        return Err(Error::Config(format!(
            "preprocess out_size {out_size} differs from model size {}",
            cfg.model.size
        )));
    }
    let clips = manifest.split_clips(split);
    let per_clip = clips
        .par_iter()
        .map(|(subject, c)| {
            let frames = FrameContainer::read(&den.join(&c.frames_path))?.to_frames()?;
            let ppg = resample_linear(&read_waveform(&den.join(&c.ppg_path))?, TARGET_FPS)?;
            let mut out = Vec::new();
            for wa in align.get(&c.clip_id).into_iter().flatten() {
                let Some(label) = c.labels.iter().find(|l| l.window == wa.window) else {
                    continue;
                };
                let end = wa.start_frame + CLIP_FRAMES;
                if end > frames.n_frames() || end > ppg.len() {
                    continue;
                }
                let sub = frames.sub_clip(wa.start_frame..end)?;
                let aligned = apply_alignment(&sub, wa.rotation_deg, &wa.bbox, out_size)?;
                let sample = Sample {
                    input: clip_input(&diff_normalize(&aligned)?, cfg.model.frames)?,
                    wave: wave_target(&ppg.samples()[wa.start_frame..end], cfg.model.frames)?,
                    spo2: label.spo2_pct,
                };
                out.push(LabelledWindow {
                    clip_id: c.clip_id.clone(),
                    subject_id: subject.to_string(),
                    window: wa.window,
                    hr_bpm: label.hr_bpm,
                    sample,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_clip.into_iter().flatten().collect())
}

fn save_model(model: &PhysNet, history: &History, dir: &Path) -> Result<()> {
    save_checkpoint(model, &dir.join("model.pfck"))?;
    write_json(&dir.join("history.json"), history)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub window: usize,
    pub hr_ref_bpm: f64,
    pub hr_pred_bpm: f64,
    pub spo2_ref_pct: f64,
    pub spo2_pred_pct: f64,
    pub wave: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipPrediction {
    pub clip_id: String,
    pub windows: Vec<WindowPrediction>,
}

fn predict(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let hr_model = load_checkpoint(&stage_dir(cfg, Stage::TrainHr).join("model.pfck"), &cfg.model)?;
    let spo2_model = load_checkpoint(&stage_dir(cfg, Stage::TrainSpo2).join("model.pfck"), &cfg.model)?;
    let test = load_samples(cfg, Split::Test)?;
    let mut clips: Vec<ClipPrediction> = Vec::new();
    for w in &test {
        let mut shape = vec![1];
        shape.extend_from_slice(w.sample.input.shape());
        let x: Tensor = w.sample.input.clone().reshape(&shape)?;
        let wave = hr_model.predict_waves(&x)?.remove(0);
        let spo2 = spo2_model.predict_spo2(&x)?[0];
        let hr = hr_from_predictions(&[&wave], w.sample.n_diffs(), TARGET_FPS)?.bpm;
        let p = WindowPrediction {
            window: w.window,
            hr_ref_bpm: w.hr_bpm,
            hr_pred_bpm: hr,
            spo2_ref_pct: w.sample.spo2,
            spo2_pred_pct: spo2,
            wave,
        };
        match clips.last_mut() {
            Some(c) if c.clip_id == w.clip_id => c.windows.push(p),
            _ => clips.push(ClipPrediction {
                clip_id: w.clip_id.clone(),
                windows: vec![p],
            }),
        }
    }
    write_json(&dir.join("predictions.json"), &clips)
}

/// Heart-rate table over window lengths plus the SpO₂ report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub hr: MultiWindowTable,
    pub spo2: EvalReport,
}

/// Splits a clip's windows into runs of consecutive indices.
fn consecutive_series(c: &ClipPrediction) -> Vec<WindowSeries> {
    let mut out: Vec<WindowSeries> = Vec::new();
    let mut last: Option<usize> = None;
    for w in &c.windows {
        if last.is_none_or(|l| w.window != l + 1) {
            out.push(WindowSeries {
                id: format!("{}@{}", c.clip_id, w.window),
                waves: Vec::new(),
                ref_hr_bpm: Vec::new(),
            });
        }
        let s = out.last_mut().expect("pushed above");
        s.waves.push(w.wave.clone());
        s.ref_hr_bpm.push(w.hr_ref_bpm);
        last = Some(w.window);
    }
    out
}

fn evaluate(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let clips: Vec<ClipPrediction> = read_json(&stage_dir(cfg, Stage::Predict).join("predictions.json"))?;
    let series: Vec<WindowSeries> = clips.iter().flat_map(consecutive_series).collect();
    let n_diffs = cfg.model.frames - 1;
    let hr = multi_window_eval(&series, &cfg.eval.windows_s, &|parts| {
        Ok(hr_from_predictions(parts, n_diffs, TARGET_FPS)?.bpm)
    })?;
    let all = clips.iter().flat_map(|c| c.windows.iter());
    let (refs, preds): (Vec<f64>, Vec<f64>) = all.map(|w| (w.spo2_ref_pct, w.spo2_pred_pct)).unzip();
    let spo2 = compute_metrics(&refs, &preds, 2.0)?;
    std::fs::write(dir.join("hr_table.txt"), render_table(&hr.reports))?;
    let mut w = csv::Writer::from_path(dir.join("hr_table.csv"))?;
    w.write_record(["tw_s", "mae", "rmse", "mape_pct", "sd", "n_windows"])?;
    for r in &hr.reports {
        w.write_record(
            [r.tw_seconds, r.mae, r.rmse, r.mape_pct, r.sd, r.n_windows as f64].map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    write_json(&dir.join("report.json"), &PipelineReport { hr, spo2 })
}

fn plot(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let report: PipelineReport = read_json(&stage_dir(cfg, Stage::Eval).join("report.json"))?;
    if let Some(r) = report.hr.reports.first() {
        export_scatter(r, dir, "hr")?;
        export_bland_altman(r, dir, "hr")?;
    }
    export_scatter(&report.spo2, dir, "spo2")?;
    export_bland_altman(&report.spo2, dir, "spo2")?;
    Ok(())
}

/// Location of the final report of a run.
pub fn report_path(cfg: &PipelineConfig) -> PathBuf {
    stage_dir(cfg, Stage::Eval).join("report.json")
}
