//! Per-step vector rewards and their scalarisation.
//!
//! The energy reward is exact. The delay reward charges the new task's own
//! delay plus the slowdown it inflicts on the tasks already resident on the
//! chosen server, assuming that server receives no further work; summed over
//! an episode these corrections telescope to the total task delay.

use serde::{Deserialize, Serialize};

use super::context::Preference;
use crate::sim::{model, EnergyModel, ExecutorState};

/// Unscalarised reward of one decision: negative delay (s) and negative energy (J).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VectorReward {
    pub time: f64,
    pub energy: f64,
}

/// Coefficients that bring delay and energy rewards to comparable magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardScale {
    pub time: f64,
    pub energy: f64,
}

impl Default for RewardScale {
    fn default() -> Self {
        Self { time: 0.1, energy: 1.0 }
    }
}

/// `w_T * a_T * r_T + w_E * a_E * r_E`.
pub fn scalarize(reward: VectorReward, preference: Preference, scale: RewardScale) -> f64 {
    preference.time * scale.time * reward.time + preference.energy * scale.energy * reward.energy
}

/// Negative offloading plus execution energy of sending `size_bits` over
/// `rate_bps` to a server at `freq_hz`.
pub fn reward_energy(size_bits: f64, rate_bps: f64, freq_hz: f64, energy: &EnergyModel) -> f64 {
    let t_off = if size_bits == 0.0 { 0.0 } else { size_bits / rate_bps };
    -model::task_energy(size_bits, t_off, energy, freq_hz).total()
}

/// Closed-form delay reward for admitting a task of `size_bits` after an
/// upload of `offload_delay_s` to a server whose resident residuals are
/// `sorted_residuals` (ascending, bits).
///
/// ```text
/// r_T = -T_off + sum_i (n-i+1) D_i
///              - sum_i (n-i+1) min(D_i, max(T_off - sum_{j<i} D_j, 0))
///              - sum_i (eta/f) (n'-i+1)^2 (L'_i - L'_{i-1})
/// ```
///
/// where `D_i = (eta/f)(n-i+1)(L_i - L_{i-1})` is the time between the
/// (i-1)-th and i-th completion without the new task, and `L'` is the sorted
/// residual set at upload completion including the new task.
pub fn delay_reward_estimate(
    sorted_residuals: &[f64],
    size_bits: f64,
    offload_delay_s: f64,
    freq_hz: f64,
    eta: f64,
) -> f64 {
    delay_reward_estimate_scaled(sorted_residuals, size_bits, offload_delay_s, freq_hz, eta, 1.0)
}

/// [`delay_reward_estimate`] with the upload-overlap correction (the `min`
/// term) multiplied by `correction_scale`. Only `1.0` is correct; other
/// values exist so the oracle suite can prove it detects a broken term.
pub fn delay_reward_estimate_scaled(
    sorted_residuals: &[f64],
    size_bits: f64,
    offload_delay_s: f64,
    freq_hz: f64,
    eta: f64,
    correction_scale: f64,
) -> f64 {
    debug_assert!(sorted_residuals.windows(2).all(|w| w[0] <= w[1]));
    let per_bit = eta / freq_hz;
    let n = sorted_residuals.len();

    let mut no_action = 0.0;
    let mut during = 0.0;
    let mut elapsed = 0.0; // sum of D_j for j < i
    let mut prev = 0.0;
    for (i, &l) in sorted_residuals.iter().enumerate() {
        let alive = (n - i) as f64; // n - i + 1 with 1-based i
        let dur = per_bit * alive * (l - prev);
        no_action += alive * dur;
        during += alive * dur.min((offload_delay_s - elapsed).max(0.0));
        elapsed += dur;
        prev = l;
    }

    let mut after = residuals_after(sorted_residuals, offload_delay_s, per_bit);
    let pos = after.partition_point(|&x| x < size_bits);
    after.insert(pos, size_bits);
    -offload_delay_s + no_action - correction_scale * during - sum_of_completion_times(&after, per_bit)
}

/// Residuals left `elapsed_s` seconds later with no admissions, ascending.
fn residuals_after(sorted: &[f64], elapsed_s: f64, per_bit: f64) -> Vec<f64> {
    let n = sorted.len();
    let mut t = 0.0;
    let mut prev = 0.0;
    for (i, &l) in sorted.iter().enumerate() {
        let alive = (n - i) as f64;
        let dur = per_bit * alive * (l - prev);
        if t + dur > elapsed_s {
            let depleted = prev + (elapsed_s - t) / (per_bit * alive);
            return sorted[i..].iter().map(|&x| x - depleted).collect();
        }
        t += dur;
        prev = l;
    }
    Vec::new()
}

/// `sum_i (eta/f) (n-i+1)^2 (L_i - L_{i-1})`: total time-to-completion of
/// all tasks in a processor-sharing server with no further arrivals.
fn sum_of_completion_times(sorted: &[f64], per_bit: f64) -> f64 {
    let n = sorted.len();
    let mut prev = 0.0;
    let mut total = 0.0;
    for (i, &l) in sorted.iter().enumerate() {
        let alive = (n - i) as f64;
        total += per_bit * alive * alive * (l - prev);
        prev = l;
    }
    total
}

/// Event-driven reference for [`delay_reward_estimate`]: replays the server
/// with and without the new task and differences the summed delays.
pub fn delay_reward_oracle(
    executor: &ExecutorState,
    size_bits: f64,
    offload_delay_s: f64,
    freq_hz: f64,
    eta: f64,
) -> f64 {
    let now = executor.clock();
    const NEW: usize = usize::MAX;

    let mut without = executor.clone();
    let base: f64 = without
        .advance(freq_hz, eta, f64::INFINITY)
        .iter()
        .map(|c| c.at - now)
        .sum();

    let mut with = executor.clone();
    let mut done = with
        .admit(NEW, size_bits, now + offload_delay_s, freq_hz, eta)
        .expect("fresh task id");
    done.extend(with.advance(freq_hz, eta, f64::INFINITY));
    let loaded: f64 = done.iter().map(|c| c.at - now).sum();
    -(loaded - base)
}
