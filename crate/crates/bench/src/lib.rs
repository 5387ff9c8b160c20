//! Seeded fixtures shared by the benchmarks in `benches/`.

use rand::Rng;

use mec_core::checks::synthetic_state;
use mec_core::momdp::{EncodedState, EncodingConfig};
use mec_core::pareto::PerfPoint;
use mec_core::rng;
use mec_core::sim::{Entry, ExecutorState};

/// Executor holding `n` tasks of up to 20 Mbit.
pub fn loaded_executor(n: usize, seed: u64) -> ExecutorState {
    let mut r = rng::stream(seed, 0);
    let entries = (0..n)
        .map(|task| Entry {
            task,
            residual_bits: r.random_range(1e5..2e7),
        })
        .collect();
    ExecutorState::from_entries(entries, 0.0)
}

/// `n` sorted residual sizes.
pub fn sorted_residuals(n: usize, seed: u64) -> Vec<f64> {
    let mut v = loaded_executor(n, seed).sorted_residuals();
    v.sort_by(f64::total_cmp);
    v
}

pub fn states(enc: EncodingConfig, count: usize, seed: u64) -> Vec<EncodedState> {
    let mut r = rng::stream(seed, 1);
    (0..count)
        .map(|_| {
            let e = r.random_range(1..=enc.max_edges);
            synthetic_state(&mut r, enc, e)
        })
        .collect()
}

/// Random cloud of `n` performance points.
pub fn cloud(n: usize, seed: u64) -> Vec<PerfPoint> {
    let mut r = rng::stream(seed, 2);
    (0..n)
        .map(|_| PerfPoint::new(r.random_range(0.0..1000.0), r.random_range(0.0..5.0)))
        .collect()
}
