use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neorppg::io::{report_path, run_pipeline, PipelineConfig, PipelineReport, Stage};
use neorppg::synth::SynthConfig;
use neorppg::Error;

#[derive(Debug, Parser)]
#[command(name = "neorppg", version, about = "Heart rate and SpO2 from facial video")]
struct Cli {
    /// Pipeline configuration (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives the reference single-threaded run.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the synthetic corpus and its manifest.
    SynthGen(SynthArgs),
    /// Detect, rotate and crop every clip.
    Preprocess,
    /// Screen and repair the reference PPG.
    Denoise,
    /// Train the waveform network.
    TrainHr,
    /// Fine-tune the SpO2 head.
    TrainSpo2,
    /// Run both models on the test split.
    Predict,
    /// Score predictions over every configured window length.
    Eval,
    /// Write scatter and Bland-Altman plots.
    Plot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Clean,
    Hard,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Start from a named preset instead of the configured corpus.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    clips_per_subject: Option<usize>,
    #[arg(long)]
    clip_seconds: Option<f64>,
    #[arg(long)]
    artifact_rate: Option<f64>,
    #[arg(long)]
    noise_to_pulse: Option<f64>,
}

impl SynthArgs {
    fn apply(&self, cfg: &mut SynthConfig) {
        match self.preset {
            Some(Preset::Clean) => *cfg = SynthConfig::clean(cfg.seed),
            Some(Preset::Hard) => *cfg = SynthConfig::hard(cfg.seed),
            None => {}
        }
        if let Some(v) = self.subjects {
            cfg.n_subjects = v;
        }
        if let Some(v) = self.clips_per_subject {
            cfg.clips_per_subject = v;
        }
        if let Some(v) = self.clip_seconds {
            cfg.clip_seconds = v;
        }
        if let Some(v) = self.artifact_rate {
            cfg.artifact_rate = v;
        }
        if let Some(v) = self.noise_to_pulse {
            cfg.noise_to_pulse = v;
        }
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Numerical(_) | Error::DegenerateBatch(_) => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let until = match &cli.command {
        Command::SynthGen(a) => {
            a.apply(&mut cfg.synth);
            Stage::SynthGen
        }
        Command::Preprocess => Stage::Preprocess,
        Command::Denoise => Stage::Denoise,
        Command::TrainHr => Stage::TrainHr,
        Command::TrainSpo2 => Stage::TrainSpo2,
        Command::Predict => Stage::Predict,
        Command::Eval => Stage::Eval,
        Command::Plot => Stage::Plot,
    };
    for r in run_pipeline(&cfg, until)? {
        let status = if r.executed { "ran" } else { "cached" };
        println!("{:<11} {status:<6} {}", r.stage.name(), &r.digest[..16]);
    }
    if until == Stage::Eval {
        let report: PipelineReport = serde_json::from_slice(&std::fs::read(report_path(&cfg))?)?;
        print!("{}", neorppg::eval::render_table(&report.hr.reports));
        println!("SpO2 MAE {:.3} RMSE {:.3} over {} windows", report.spo2.mae, report.spo2.rmse, report.spo2.n_windows);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
