//! The five subcommands. Each writes its manifest first, then its
//! artifacts, then the checksum file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mec_core::baselines::{
    multi_policy_train, p_grid, sa_search, train_linucb, AssignmentScheduler, LinUcbScheduler, RandomPolicy,
};
use mec_core::checks::{run_all, SuiteReport};
use mec_core::gmorl::{evaluate, evaluate_agent, reward_scale, train, Agent, TrainOutcome};
use mec_core::momdp::{preference_grid, ContextSpace, MomdpConfig};
use mec_core::nn::Checkpoint;
use mec_core::pareto::{hypervolume, normalized_hypervolume, pareto_front, reference_point, PerfPoint};
use mec_core::rng::{self, derive_seed};

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::output::{read_front, training_curve, write_csv, FrontRow, HypervolumeRow};
use crate::plot::{front_plot, line_plot, Series};

/// Seed labels of the subsystems of one experiment seed.
mod labels {
    pub const EVAL: u64 = 101;
    pub const LINUCB: u64 = 201;
    pub const SA: u64 = 202;
    pub const RANDOM: u64 = 203;
    pub const MULTIPOLICY: u64 = 204;
}

pub const CHECKPOINT: &str = "model.ckpt";
pub const TRAINING_LOG: &str = "training_log.csv";
pub const TRAINING_CURVE: &str = "training_curve.csv";
pub const EVAL_CSV: &str = "eval.csv";
pub const FRONT_POINTS: &str = "front_points.csv";
pub const FRONT_CSV: &str = "front.csv";
pub const HYPERVOLUME_CSV: &str = "hypervolume.csv";

/// Seed shared by every evaluation of an experiment, so that all schemes
/// face the same task sequences.
pub fn eval_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(cfg.seed, labels::EVAL)
}

/// MOMDP settings with the reward scale training used for this seed.
pub fn resolved_momdp(cfg: &ExperimentConfig) -> Result<MomdpConfig, CliError> {
    let problem = cfg.problem()?;
    Ok(MomdpConfig {
        scale: reward_scale(&cfg.trainer, &problem, cfg.seed)?,
        ..cfg.momdp
    })
}

fn begin(
    mode: Mode,
    cfg: &ExperimentConfig,
    dir: &Path,
    arguments: BTreeMap<String, String>,
    artifacts: &[&str],
) -> Result<RunManifest, CliError> {
    cfg.check_mode(mode)?;
    cfg.validate()?;
    let manifest = RunManifest::new(mode, cfg, arguments, artifacts.iter().map(|s| s.to_string()).collect());
    manifest.write(dir)?;
    Ok(manifest)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path.display(), e)
}

/// Trains GMORL and writes the checkpoint, the per-rollout training log,
/// the per-epoch curve and its three plots.
pub fn run_train(cfg: &ExperimentConfig, dir: &Path) -> Result<TrainOutcome, CliError> {
    let manifest = begin(
        Mode::Train,
        cfg,
        dir,
        BTreeMap::new(),
        &[
            CHECKPOINT,
            TRAINING_LOG,
            TRAINING_CURVE,
            "reward.svg",
            "delay.svg",
            "energy.svg",
        ],
    )?;
    let problem = cfg.problem()?;
    let start = std::time::Instant::now();
    let outcome = train(&cfg.trainer, &problem, cfg.seed)?;
    log::info!(
        "trained {} epochs ({} updates) in {:.1}s",
        cfg.trainer.epochs,
        outcome.updates,
        start.elapsed().as_secs_f64()
    );
    outcome.agent.to_checkpoint().save(dir.join(CHECKPOINT))?;
    write_csv(&dir.join(TRAINING_LOG), &outcome.log)?;
    let curve = training_curve(&outcome.log);
    write_csv(&dir.join(TRAINING_CURVE), &curve)?;
    let series = |name: &str, f: &dyn Fn(&crate::output::CurveRow) -> (f64, f64)| -> Series {
        (name.to_string(), curve.iter().map(f).collect())
    };
    for (file, title, y, raw, smoothed) in [
        (
            "reward.svg",
            "Scalarised episode reward",
            "reward",
            series("epoch mean", &|r| (r.epoch as f64, r.mean_reward)),
            series("smoothed", &|r| (r.epoch as f64, r.smoothed_reward)),
        ),
        (
            "delay.svg",
            "Total task delay",
            "delay (s)",
            series("epoch mean", &|r| (r.epoch as f64, r.mean_delay_s)),
            series("smoothed", &|r| (r.epoch as f64, r.smoothed_delay_s)),
        ),
        (
            "energy.svg",
            "Total energy",
            "energy (J)",
            series("epoch mean", &|r| (r.epoch as f64, r.mean_energy_j)),
            series("smoothed", &|r| (r.epoch as f64, r.smoothed_energy_j)),
        ),
    ] {
        line_plot(&dir.join(file), title, "epoch", y, &[raw, smoothed])?;
    }
    manifest.seal(dir)?;
    Ok(outcome)
}

/// Loads a checkpoint, checking it against the configured network.
pub fn load_agent(cfg: &ExperimentConfig, path: &Path) -> Result<Agent, CliError> {
    let expected = Agent::spec_for(&cfg.trainer, &cfg.momdp.encoding);
    let ck = Checkpoint::load(path, Some(&expected)).map_err(|e| match e {
        mec_core::Error::Io(io) => CliError::io(path.display(), io),
        other => CliError::Core(other),
    })?;
    Ok(Agent::from_checkpoint(&ck)?)
}

/// Greedy performance of a trained policy at every preference of the test
/// grid on the fixed evaluation system.
pub fn evaluate_policy(cfg: &ExperimentConfig, agent: &Agent, scheme: &str) -> Result<Vec<FrontRow>, CliError> {
    let seed = eval_seed(cfg);
    cfg.eval
        .grid()?
        .into_iter()
        .map(|w| {
            let ctx = cfg.eval.context(w)?;
            let r = evaluate_agent(agent, &cfg.sim, &cfg.momdp, &ctx, cfg.eval.episodes, seed)?;
            Ok(FrontRow::from_eval(scheme, w.time, &r))
        })
        .collect()
}

pub fn run_eval(cfg: &ExperimentConfig, checkpoint: &Path, dir: &Path) -> Result<Vec<FrontRow>, CliError> {
    let args = BTreeMap::from([("checkpoint".to_string(), checkpoint.display().to_string())]);
    let manifest = begin(Mode::Eval, cfg, dir, args, &[EVAL_CSV])?;
    let agent = load_agent(cfg, checkpoint)?;
    let rows = evaluate_policy(cfg, &agent, "gmorl")?;
    write_csv(&dir.join(EVAL_CSV), &rows)?;
    manifest.seal(dir)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontReport {
    /// Every evaluated point of every scheme.
    pub points: Vec<FrontRow>,
    /// Undominated points of each scheme.
    pub fronts: Vec<FrontRow>,
    pub hypervolumes: Vec<HypervolumeRow>,
}

impl FrontReport {
    pub fn hypervolume_of(&self, scheme: &str) -> Option<f64> {
        self.hypervolumes.iter().find(|h| h.scheme == scheme).map(|h| h.hv)
    }
}

/// Evaluates each checkpoint over the test grid, adds previously written
/// baseline front CSVs, extracts each scheme's front and scores all of them
/// against one shared reference point.
pub fn run_front(
    cfg: &ExperimentConfig,
    checkpoints: &[PathBuf],
    baselines: &[PathBuf],
    dir: &Path,
) -> Result<FrontReport, CliError> {
    if checkpoints.is_empty() && baselines.is_empty() {
        return Err(CliError::Config(
            "front needs at least one checkpoint or baseline CSV".into(),
        ));
    }
    let mut args = BTreeMap::new();
    for (i, c) in checkpoints.iter().enumerate() {
        args.insert(format!("checkpoint.{i}"), c.display().to_string());
    }
    for (i, b) in baselines.iter().enumerate() {
        args.insert(format!("baseline.{i}"), b.display().to_string());
    }
    let manifest = begin(
        Mode::Front,
        cfg,
        dir,
        args,
        &[FRONT_POINTS, FRONT_CSV, HYPERVOLUME_CSV, "front.svg"],
    )?;
    let mut points = Vec::new();
    for (i, c) in checkpoints.iter().enumerate() {
        let agent = load_agent(cfg, c)?;
        let scheme = if checkpoints.len() == 1 {
            "gmorl".to_string()
        } else {
            format!("gmorl-{i}")
        };
        points.extend(evaluate_policy(cfg, &agent, &scheme)?);
    }
    for b in baselines {
        points.extend(read_front(b)?);
    }
    let report = score_fronts(points)?;
    write_csv(&dir.join(FRONT_POINTS), &report.points)?;
    write_csv(&dir.join(FRONT_CSV), &report.fronts)?;
    write_csv(&dir.join(HYPERVOLUME_CSV), &report.hypervolumes)?;
    let group = |rows: &[FrontRow]| -> Vec<Series> {
        let mut out: Vec<Series> = Vec::new();
        for r in rows {
            match out.iter_mut().find(|s| s.0 == r.scheme) {
                Some(s) => s.1.push((r.delay_s, r.energy_j)),
                None => out.push((r.scheme.clone(), vec![(r.delay_s, r.energy_j)])),
            }
        }
        out
    };
    let h = &report.hypervolumes[0];
    front_plot(
        &dir.join("front.svg"),
        "Pareto fronts on the evaluation system",
        &group(&report.points),
        &group(&report.fronts),
        (h.ref_delay, h.ref_energy),
    )?;
    manifest.seal(dir)?;
    Ok(report)
}

/// Fronts and hypervolumes of labelled points, in order of first appearance
/// of each scheme.
pub fn score_fronts(points: Vec<FrontRow>) -> Result<FrontReport, CliError> {
    let mut schemes: Vec<String> = Vec::new();
    for p in &points {
        if !schemes.contains(&p.scheme) {
            schemes.push(p.scheme.clone());
        }
    }
    let mut fronts: Vec<(String, Vec<PerfPoint>)> = Vec::new();
    for s in &schemes {
        let pts: Vec<PerfPoint> = points.iter().filter(|p| &p.scheme == s).map(FrontRow::point).collect();
        fronts.push((s.clone(), pareto_front(&pts)?));
    }
    let refs: Vec<&[PerfPoint]> = fronts.iter().map(|f| f.1.as_slice()).collect();
    let reference = reference_point(&refs)?;
    let hypervolumes = fronts
        .iter()
        .map(|(s, f)| {
            let hv = hypervolume(f, &reference);
            HypervolumeRow {
                scheme: s.clone(),
                hv,
                hv_normalized: normalized_hypervolume(hv, &reference),
                ref_delay: reference.delay,
                ref_energy: reference.energy,
            }
        })
        .collect();
    // Front rows keep their original columns; pick them back out of `points`.
    let mut front_rows = Vec::new();
    for (s, f) in &fronts {
        for fp in f {
            if let Some(row) = points.iter().find(|r| {
                &r.scheme == s && r.delay_s == fp.delay && r.energy_j == fp.energy && r.omega_t == fp.preference
            }) {
                front_rows.push(row.clone());
            }
        }
    }
    Ok(FrontReport {
        points,
        fronts: front_rows,
        hypervolumes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    LinUcb,
    Sa,
    Random,
    MultiPolicy,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::LinUcb, Scheme::Sa, Scheme::Random, Scheme::MultiPolicy];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::LinUcb => "linucb",
            Scheme::Sa => "sa",
            Scheme::Random => "random",
            Scheme::MultiPolicy => "multipolicy",
        }
    }

    pub fn csv_name(self) -> String {
        format!("{}.csv", self.as_str())
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            let valid: Vec<&str> = Self::ALL.iter().map(|k| k.as_str()).collect();
            CliError::Config(format!("unknown scheme {s:?}; valid schemes: {}", valid.join(", ")))
        })
    }
}

/// SA search statistics, one row per preference.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SaSearchRow {
    pub omega_t: f64,
    pub episodes_used: usize,
    pub best_return: f64,
}

/// Runs one baseline over the test grid (the p-grid for random) on the
/// evaluation system and writes `<scheme>.csv` in the front schema.
pub fn run_baseline(cfg: &ExperimentConfig, scheme: Scheme, dir: &Path) -> Result<Vec<FrontRow>, CliError> {
    let csv_name = scheme.csv_name();
    let mut artifacts = vec![csv_name.as_str()];
    let ckpt_names: Vec<String> = (0..cfg.baselines.multipolicy_preferences)
        .map(|i| format!("multipolicy-{i}.ckpt"))
        .collect();
    match scheme {
        Scheme::Sa => artifacts.push("sa_search.csv"),
        Scheme::MultiPolicy => artifacts.extend(ckpt_names.iter().map(String::as_str)),
        _ => {}
    }
    let args = BTreeMap::from([("scheme".to_string(), scheme.to_string())]);
    let manifest = begin(Mode::Baseline, cfg, dir, args, &artifacts)?;
    let momdp = resolved_momdp(cfg)?;
    let seed = eval_seed(cfg);
    let episodes = cfg.eval.episodes;
    let e = &cfg.eval;
    let rows: Vec<FrontRow> = match scheme {
        Scheme::Random => p_grid(cfg.baselines.random_points)?
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let ctx = e.context(mec_core::momdp::Preference::from_time_weight(0.5)?)?;
                let mut pol = RandomPolicy::new(p, rng::stream(derive_seed(cfg.seed, labels::RANDOM), i as u64))?;
                let r = evaluate(&mut pol, &cfg.sim, &momdp, &ctx, episodes, seed)?;
                Ok(FrontRow::from_eval("random", p, &r))
            })
            .collect::<Result<_, CliError>>()?,
        Scheme::Sa => {
            let mut search = Vec::new();
            let rows = e
                .grid()?
                .into_iter()
                .enumerate()
                .map(|(i, w)| {
                    let ctx = e.context(w)?;
                    let res = sa_search(
                        &cfg.sim,
                        &momdp,
                        &ctx,
                        &cfg.baselines.sa,
                        derive_seed(cfg.seed, labels::SA + 1000 * i as u64),
                    )?;
                    search.push(SaSearchRow {
                        omega_t: w.time,
                        episodes_used: res.episodes_used,
                        best_return: res.best_return,
                    });
                    let mut sched = AssignmentScheduler {
                        assignment: res.assignment,
                    };
                    let r = evaluate(&mut sched, &cfg.sim, &momdp, &ctx, episodes, seed)?;
                    Ok(FrontRow::from_eval("sa", w.time, &r))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            write_csv(&dir.join("sa_search.csv"), &search)?;
            rows
        }
        Scheme::LinUcb => {
            let grid = e.grid()?;
            let space = ContextSpace::singleton(grid.clone(), e.num_edges, e.cloud_freq_hz, e.edge_freq_hz);
            let model = train_linucb(
                &cfg.sim,
                &momdp,
                &space,
                &cfg.baselines.linucb,
                derive_seed(cfg.seed, labels::LINUCB),
            )?;
            grid.into_iter()
                .map(|w| {
                    let ctx = e.context(w)?;
                    let r = evaluate(
                        &mut LinUcbScheduler { model: &model },
                        &cfg.sim,
                        &momdp,
                        &ctx,
                        episodes,
                        seed,
                    )?;
                    Ok(FrontRow::from_eval("linucb", w.time, &r))
                })
                .collect::<Result<_, CliError>>()?
        }
        Scheme::MultiPolicy => {
            let prefs = preference_grid(cfg.baselines.multipolicy_preferences)?;
            let models = multi_policy_train(
                &prefs,
                e.num_edges,
                e.cloud_freq_hz,
                e.edge_freq_hz,
                &cfg.trainer,
                &cfg.sim,
                &cfg.momdp,
                derive_seed(cfg.seed, labels::MULTIPOLICY),
            )?;
            prefs
                .iter()
                .zip(&models)
                .zip(&ckpt_names)
                .map(|((w, m), name)| {
                    m.agent.to_checkpoint().save(dir.join(name))?;
                    let r = evaluate_agent(&m.agent, &cfg.sim, &cfg.momdp, &e.context(*w)?, episodes, seed)?;
                    Ok(FrontRow::from_eval("multipolicy", w.time, &r))
                })
                .collect::<Result<_, CliError>>()?
        }
    };
    let path = dir.join(&csv_name);
    write_csv(&path, &rows)?;
    manifest.seal(dir)?;
    Ok(rows)
}

/// Runs every oracle suite and writes `check_report.txt` and
/// `check_report.json`. Any failed suite yields [`CliError::Check`] after the
/// report is written.
pub fn run_check(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<SuiteReport>, CliError> {
    let args = BTreeMap::from([("correction_scale".to_string(), cfg.check.correction_scale.to_string())]);
    let manifest = begin(Mode::Check, cfg, dir, args, &["check_report.txt", "check_report.json"])?;
    let reports = run_all(&cfg.check, cfg.seed);
    let text: String = reports.iter().map(|r| format!("{r}\n")).collect();
    let txt = dir.join("check_report.txt");
    std::fs::write(&txt, &text).map_err(io_err(&txt))?;
    let json = dir.join("check_report.json");
    let body = serde_json::to_string_pretty(&reports).map_err(|e| CliError::io("check report", e))?;
    std::fs::write(&json, body + "\n").map_err(io_err(&json))?;
    manifest.seal(dir)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(reports)
    } else {
        Err(CliError::Check(format!(
            "{} suite(s) failed: {}",
            failed.len(),
            failed.join(", ")
        )))
    }
}
