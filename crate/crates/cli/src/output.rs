//! CSV schemas shared by every subcommand.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use mec_core::gmorl::{epoch_means, smooth, EpisodeLog, EvalResult};
use mec_core::pareto::PerfPoint;

use crate::error::CliError;

/// One evaluated (scheme, preference) pair. For random-p the weight
/// columns hold `(p, 1 - p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub scheme: String,
    pub omega_t: f64,
    pub omega_e: f64,
    pub delay_s: f64,
    pub energy_j: f64,
    pub delay_per_mbit: f64,
    pub energy_per_mbit: f64,
}

pub const FRONT_HEADER: [&str; 7] = [
    "scheme",
    "omega_t",
    "omega_e",
    "delay_s",
    "energy_j",
    "delay_per_mbit",
    "energy_per_mbit",
];

impl FrontRow {
    pub fn from_eval(scheme: &str, omega_t: f64, r: &EvalResult) -> Self {
        Self {
            scheme: scheme.to_string(),
            omega_t,
            omega_e: 1.0 - omega_t,
            delay_s: r.delay_s,
            energy_j: r.energy_j,
            delay_per_mbit: r.delay_per_mbit(),
            energy_per_mbit: r.energy_per_mbit(),
        }
    }

    pub fn point(&self) -> PerfPoint {
        PerfPoint::labelled(self.delay_s, self.energy_j, self.omega_t, self.scheme.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeRow {
    pub scheme: String,
    pub hv: f64,
    pub hv_normalized: f64,
    pub ref_delay: f64,
    pub ref_energy: f64,
}

/// Per-epoch means of the training log with their trailing averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epoch: usize,
    pub mean_reward: f64,
    pub smoothed_reward: f64,
    pub mean_delay_s: f64,
    pub smoothed_delay_s: f64,
    pub mean_energy_j: f64,
    pub smoothed_energy_j: f64,
}

/// Trailing window used for training curves: a tenth of the run, at least 1.
pub fn curve_window(epochs: usize) -> usize {
    (epochs / 10).clamp(1, 100)
}

pub fn training_curve(log: &[EpisodeLog]) -> Vec<CurveRow> {
    let reward = epoch_means(log, |r| r.scalar_reward);
    let delay = epoch_means(log, |r| r.delay_s);
    let energy = epoch_means(log, |r| r.energy_j);
    let w = curve_window(reward.len());
    let (sr, sd, se) = (smooth(&reward, w), smooth(&delay, w), smooth(&energy, w));
    (0..reward.len())
        .map(|i| CurveRow {
            epoch: i,
            mean_reward: reward[i],
            smoothed_reward: sr[i],
            mean_delay_s: delay[i],
            smoothed_delay_s: sd[i],
            mean_energy_j: energy[i],
            smoothed_energy_j: se[i],
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path.display(), e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(path.display(), e))?;
    }
    w.flush().map_err(|e| CliError::io(path.display(), e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path.display(), e))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::io(path.display(), e))
}

/// Reads a front CSV, insisting on the exact column layout.
pub fn read_front(path: &Path) -> Result<Vec<FrontRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path.display(), e))?;
    let header = r.headers().map_err(|e| CliError::io(path.display(), e))?;
    if header.iter().ne(FRONT_HEADER) {
        return Err(CliError::Config(format!(
            "{}: expected columns {}, found {}",
            path.display(),
            FRONT_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    read_csv(path)
}
