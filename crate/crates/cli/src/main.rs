//! `stresslrp`: file-based pipeline from synthetic or ingested word tokens
//! to trained classifiers, relevance maps and analysis tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! error.

mod commands;
mod config;
mod layout;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stresslrp::corpus::SplitName;
use stresslrp::lrp::Rule;
use stresslrp::{Error, ErrorKind};

use crate::commands::Ctx;
use crate::config::PipelineConfig;
use crate::layout::Layout;

#[derive(Debug, Parser)]
#[command(name = "stresslrp", version, about = "Lexical stress classifiers explained with LRP")]
struct Cli {
    /// JSON pipeline configuration; every field is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `paths.out_dir`).
    #[arg(long, global = true, env = "STRESSLRP_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic minimal-pair corpus, noise and feature tracks.
    Synth {
        #[arg(long)]
        n_per_class: Option<usize>,
    },
    /// Load a manifest, cut word windows and assign word-type splits.
    Ingest {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Add low-pass and noise-mixed copies of every training row.
    Augment {
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Train a classifier and write the best checkpoint.
    Train {
        #[arg(long)]
        arch: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Accuracy and confusion counts per split.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Relevance maps (CSV + PNG) per sample and rule.
    Explain {
        /// Repeat to explain with several rules.
        #[arg(long = "rule")]
        rules: Vec<Rule>,
        #[arg(long)]
        split: Option<SplitName>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Region ratios, feature-subset correlations and residual bands.
    Analyze {
        #[arg(long = "rule")]
        rules: Vec<Rule>,
        #[arg(long)]
        split: Option<SplitName>,
        #[arg(long)]
        tracks: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        permutations: Option<usize>,
    },
    /// Vowel ratio statistics and a markdown summary of all tables.
    Report,
}

/// Flags override the file, which overrides defaults.
fn apply_flags(cfg: &mut PipelineConfig, cli: &Cli) {
    if let Some(out) = &cli.out {
        cfg.paths.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Synth { n_per_class } => {
            if let Some(n) = n_per_class {
                cfg.synth.n_per_class = *n;
            }
        }
        Command::Ingest { manifest } => {
            if manifest.is_some() {
                cfg.paths.manifest = manifest.clone();
            }
        }
        Command::Augment { noise } => {
            if noise.is_some() {
                cfg.paths.noise = noise.clone();
            }
        }
        Command::Train { arch, epochs, checkpoint } => {
            if let Some(a) = arch {
                cfg.architecture = a.clone();
            }
            if let Some(e) = epochs {
                cfg.train.epochs = *e;
            }
            if checkpoint.is_some() {
                cfg.paths.checkpoint = checkpoint.clone();
            }
        }
        Command::Eval { checkpoint } => {
            if checkpoint.is_some() {
                cfg.paths.checkpoint = checkpoint.clone();
            }
        }
        Command::Explain { rules, split, checkpoint } => {
            if !rules.is_empty() {
                cfg.lrp.rules = rules.clone();
            }
            if let Some(s) = split {
                cfg.analysis.split = *s;
            }
            if checkpoint.is_some() {
                cfg.paths.checkpoint = checkpoint.clone();
            }
        }
        Command::Analyze { rules, split, tracks, tau, permutations } => {
            if !rules.is_empty() {
                cfg.lrp.rules = rules.clone();
            }
            if let Some(s) = split {
                cfg.analysis.split = *s;
            }
            if tracks.is_some() {
                cfg.paths.tracks = tracks.clone();
            }
            if let Some(t) = tau {
                cfg.analysis.tau = *t;
            }
            if let Some(p) = permutations {
                cfg.analysis.permutations = *p;
            }
        }
        Command::Report => {}
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    apply_flags(&mut cfg, cli);
    cfg.validate()?;
    let ctx = Ctx { layout: Layout::new(cfg.paths.out_dir.clone()), cfg };
    log::debug!("output directory {}", ctx.layout.root().display());
    match cli.command {
        Command::Synth { .. } => commands::synth(&ctx),
        Command::Ingest { .. } => commands::ingest(&ctx),
        Command::Augment { .. } => commands::augment(&ctx),
        Command::Train { .. } => commands::train(&ctx),
        Command::Eval { .. } => commands::eval(&ctx),
        Command::Explain { .. } => commands::explain_cmd(&ctx),
        Command::Analyze { .. } => commands::analyze(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            })
        }
    }
}
