use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mec_cli::{
    run_baseline, run_check, run_eval, run_front, run_train, CliError, ExperimentConfig, Scheme, OUTPUT_ROOT_VAR,
};

#[derive(Parser)]
#[command(
    name = "mec-offload",
    version,
    about = "Multi-objective MEC task offloading experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config, or a run manifest (.json) to replay.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Runs are single-threaded and bit-reproducible; values
    /// above 1 are accepted and recorded but do not change execution.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a generalizable policy.
    Train(Common),
    /// Evaluate a checkpoint over the test preference grid.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Build fronts and hypervolumes from checkpoints and baseline CSVs.
    Front {
        #[command(flatten)]
        common: Common,
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Front CSV written by `baseline` (repeatable).
        #[arg(long = "baseline")]
        baselines: Vec<PathBuf>,
    },
    /// Run a comparison scheme: linucb, sa, random or multipolicy.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: String,
    },
    /// Run the oracle self-check suites.
    Check {
        #[command(flatten)]
        common: Common,
        /// Multiplier on the delay-reward overlap correction; anything but 1
        /// must make the reward oracle suite fail.
        #[arg(long)]
        mutate_correction: Option<f64>,
    },
}

fn prepare(common: &Common) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    if cfg.threads > 1 {
        log::warn!("threads = {} requested; execution is single-threaded", cfg.threads);
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from);
    let dir = cfg.resolve_output_dir(root.as_deref());
    Ok((cfg, dir))
}

fn say(dir: &Path, what: &str) {
    println!("{what} written to {}", dir.display());
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(common) => {
            let (cfg, dir) = prepare(&common)?;
            let out = run_train(&cfg, &dir)?;
            let r = out.epoch_rewards();
            println!(
                "epochs {}  updates {}  final epoch reward {:.4}",
                r.len(),
                out.updates,
                r.last().copied().unwrap_or(f64::NAN)
            );
            say(&dir, "checkpoint and training curves");
        }
        Command::Eval { common, checkpoint } => {
            let (cfg, dir) = prepare(&common)?;
            let rows = run_eval(&cfg, &checkpoint, &dir)?;
            println!("{} preferences evaluated", rows.len());
            say(&dir, "evaluation");
        }
        Command::Front {
            common,
            checkpoints,
            baselines,
        } => {
            let (cfg, dir) = prepare(&common)?;
            let report = run_front(&cfg, &checkpoints, &baselines, &dir)?;
            for h in &report.hypervolumes {
                println!(
                    "{:<12} hv {:.6e}  normalized {:.4}  (ref {:.6e}, {:.6e})",
                    h.scheme, h.hv, h.hv_normalized, h.ref_delay, h.ref_energy
                );
            }
            say(&dir, "fronts");
        }
        Command::Baseline { common, scheme } => {
            let scheme: Scheme = scheme.parse()?;
            let (cfg, dir) = prepare(&common)?;
            let rows = run_baseline(&cfg, scheme, &dir)?;
            println!("{scheme}: {} rows", rows.len());
            say(&dir, "baseline front");
        }
        Command::Check {
            common,
            mutate_correction,
        } => {
            let (mut cfg, dir) = prepare(&common)?;
            if let Some(k) = mutate_correction {
                cfg.check.correction_scale = k;
            }
            let result = run_check(&cfg, &dir);
            let report = std::fs::read_to_string(dir.join("check_report.txt")).unwrap_or_default();
            print!("{report}");
            result?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
