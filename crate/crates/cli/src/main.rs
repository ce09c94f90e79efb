use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use seasynth::pipeline::{
    cmd_build_library, cmd_evaluate, cmd_restore, cmd_synthesize, cmd_verify, EvalMode, EvaluateOptions, ExitStatus,
    RestoreOptions, SynthesisConfig,
};

#[derive(Parser)]
#[command(name = "seasynth", version, about = "Underwater image synthesis, restoration and scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster background lights extracted from real underwater photos.
    BuildLibrary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render a paired dataset from clean images and depth maps.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Write into a non-empty output directory.
        #[arg(long)]
        force: bool,
        /// Reload every sample afterwards and check I = J*T + B.
        #[arg(long)]
        verify: bool,
    },
    /// Invert the formation model with known or predicted medium maps.
    Restore {
        #[arg(long)]
        input: PathBuf,
        /// Directory with <id>_T.exr/<id>_B.exr or synthesis sidecars.
        #[arg(long)]
        maps: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = seasynth::formation::DEFAULT_RESTORE_FLOOR)]
        t_floor: f64,
        /// Treat PNG/JPEG inputs as linear rather than sRGB.
        #[arg(long)]
        linear_input: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        force: bool,
    },
    /// Score predictions against references, or without them.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        output: PathBuf,
        /// Fail when any file has no counterpart.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        linear_input: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        force: bool,
    },
    /// Recheck a synthesized dataset.
    Verify {
        /// Manifest to check; defaults to <output>/manifest.json from --config.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    FullReference,
    ReferenceFree,
    Medium,
}

impl From<Mode> for EvalMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::FullReference => EvalMode::FullReference,
            Mode::ReferenceFree => EvalMode::ReferenceFree,
            Mode::Medium => EvalMode::Medium,
        }
    }
}

fn load_config(path: &PathBuf) -> Result<SynthesisConfig> {
    SynthesisConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn report<T: Serialize>(summary: &T, status: ExitStatus) -> Result<ExitStatus> {
    println!("{}", serde_json::to_string_pretty(summary)?);
    Ok(status)
}

fn run(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::BuildLibrary { config, workers } => {
            let mut cfg = load_config(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let s = cmd_build_library(&cfg)?;
            log::info!("library: {} entries, K = {}, inertia {:.4}", s.entries, s.k, s.inertia);
            report(&s, s.status())
        }
        Command::Synthesize {
            config,
            seed,
            workers,
            force,
            verify,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let s = cmd_synthesize(&cfg, force, verify)?;
            report(&s, s.status())
        }
        Command::Restore {
            input,
            maps,
            output,
            t_floor,
            linear_input,
            workers,
            force,
        } => {
            let mut opts = RestoreOptions::new(input, maps, output);
            opts.t_floor = t_floor;
            opts.linear_input = linear_input;
            opts.workers = workers;
            opts.force = force;
            let s = cmd_restore(&opts)?;
            report(&s, s.status())
        }
        Command::Evaluate {
            pred,
            gt,
            mode,
            output,
            strict,
            linear_input,
            workers,
            force,
        } => {
            let mut opts = EvaluateOptions::new(pred, gt, mode.into(), output);
            opts.strict = strict;
            opts.linear_input = linear_input;
            opts.workers = workers;
            opts.force = force;
            let s = cmd_evaluate(&opts)?;
            report(&s, s.status())
        }
        Command::Verify {
            manifest,
            config,
            workers,
        } => {
            let path = match (manifest, config) {
                (Some(m), _) => m,
                (None, Some(c)) => load_config(&c)?.output.join(seasynth::pipeline::synthesize::MANIFEST_FILE),
                (None, None) => bail!("pass --manifest or --config"),
            };
            let s = cmd_verify(&path, workers)?;
            report(&s, s.status())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(ExitStatus::HardError.code() as u8)
        }
    }
}
