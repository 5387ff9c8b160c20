//! Disjoint-arm LinUCB over server slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmorl::Scheduler;
use crate::momdp::{feature, ContextSpace, EncodedState, Histogram, MecEnv, MomdpConfig};
use crate::rng::{self, derive_seed};
use crate::sim::SimConfig;

/// Length of an arm feature vector built by [`arm_features`].
pub const FEATURE_DIM: usize = 11;

/// Ridge statistics of one arm: `A = I + sum x x^T`, `b = sum r x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub dim: usize,
    pub a: Vec<f64>,
    /// Kept in sync with `a` by Sherman-Morrison updates.
    pub a_inv: Vec<f64>,
    pub b: Vec<f64>,
    pub pulls: u64,
}

impl ArmState {
    pub fn new(dim: usize) -> Self {
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        Self {
            dim,
            a: eye.clone(),
            a_inv: eye,
            b: vec![0.0; dim],
            pulls: 0,
        }
    }

    fn mat_vec(&self, m: &[f64], x: &[f64]) -> Vec<f64> {
        m.chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn theta(&self) -> Vec<f64> {
        self.mat_vec(&self.a_inv, &self.b)
    }

    /// `theta^T x + alpha sqrt(x^T A^-1 x)`.
    pub fn ucb(&self, x: &[f64], alpha: f64) -> f64 {
        let ax = self.mat_vec(&self.a_inv, x);
        let mean: f64 = self.theta().iter().zip(x).map(|(t, v)| t * v).sum();
        let var: f64 = ax.iter().zip(x).map(|(a, b)| a * b).sum();
        mean + alpha * var.max(0.0).sqrt()
    }

    pub fn update(&mut self, x: &[f64], reward: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "feature has {} entries, arm expects {}",
                x.len(),
                self.dim
            )));
        }
        if !reward.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("LinUCB update needs finite reward and features".into()));
        }
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.a[i * d + j] += x[i] * x[j];
            }
            self.b[i] += reward * x[i];
        }
        let ax = self.mat_vec(&self.a_inv, x);
        let denom = 1.0 + ax.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..d {
            for j in 0..d {
                self.a_inv[i * d + j] -= ax[i] * ax[j] / denom;
            }
        }
        self.pulls += 1;
        Ok(())
    }
}

/// One ridge model per server slot, shared across preferences (the
/// preference is part of every feature vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinUcb {
    pub arms: Vec<ArmState>,
    pub alpha: f64,
}

impl LinUcb {
    pub fn new(num_arms: usize, dim: usize, alpha: f64) -> Self {
        Self {
            arms: (0..num_arms).map(|_| ArmState::new(dim)).collect(),
            alpha,
        }
    }

    /// Highest-scoring arm among the first `num_valid`; ties go to the lowest
    /// index. `alpha = 0` gives the greedy (exploitation-only) choice.
    pub fn select(&self, features: &[Vec<f64>], num_valid: usize, alpha: f64) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (a, x) in features.iter().enumerate().take(num_valid.min(self.arms.len())) {
            let s = self.arms[a].ucb(x, alpha);
            if s > best_score {
                best = a;
                best_score = s;
            }
        }
        best
    }

    pub fn update(&mut self, arm: usize, x: &[f64], reward: f64) -> Result<()> {
        let n = self.arms.len();
        self.arms
            .get_mut(arm)
            .ok_or(Error::MaskViolation {
                action: arm,
                max_valid: n.saturating_sub(1),
            })?
            .update(x, reward)
    }
}

/// `[omega_T, omega_E, size, rate, freq, resident, E, hist count,
/// mean residual, max residual, 1]`, each on an O(1) scale.
pub fn arm_features(state: &EncodedState, slot: usize) -> Vec<f64> {
    let s = state.server(slot);
    let hist = &s[feature::HISTOGRAM..];
    let count: f64 = hist.iter().sum();
    let width = Histogram::BIN_WIDTH_BITS / 1e6;
    let (mean, max) = if count > 0.0 {
        let mean = hist
            .iter()
            .enumerate()
            .map(|(i, c)| (i as f64 + 0.5) * width * c)
            .sum::<f64>()
            / count;
        let top = hist.iter().rposition(|&c| c > 0.0).unwrap_or(0);
        (mean, (top as f64 + 1.0) * width)
    } else {
        (0.0, 0.0)
    };
    vec![
        state.preference[0],
        state.preference[1],
        s[feature::TASK_SIZE] * 1e-7,
        s[feature::RATE] * 1e-8,
        s[feature::FREQ] * 1e-9,
        s[feature::RESIDENT] * 0.1,
        s[feature::NUM_EDGES] * 0.1,
        count * 0.1,
        mean * 0.1,
        max * 0.1,
        1.0,
    ]
}

fn all_features(state: &EncodedState) -> Vec<Vec<f64>> {
    (0..state.num_valid()).map(|a| arm_features(state, a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinUcbConfig {
    pub alpha: f64,
    /// Training episodes per preference of the space.
    pub episodes_per_preference: usize,
}

impl Default for LinUcbConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            episodes_per_preference: 20,
        }
    }
}

/// Online training with UCB exploration and the per-step scalarised reward,
/// sweeping every preference of `space` in turn.
pub fn train_linucb(
    sim: &SimConfig,
    momdp: &MomdpConfig,
    space: &ContextSpace,
    cfg: &LinUcbConfig,
    seed: u64,
) -> Result<LinUcb> {
    space.validate()?;
    let mut model = LinUcb::new(momdp.encoding.slots(), FEATURE_DIM, cfg.alpha);
    let mut id = 0u64;
    for p in 0..space.preferences.len() {
        for _ in 0..cfg.episodes_per_preference {
            let ctx = space.sample(&mut rng::stream(derive_seed(seed, 1), id), p)?;
            let mut env = MecEnv::new(sim.clone(), *momdp, ctx, rng::stream(derive_seed(seed, 2), id))?;
            id += 1;
            while !env.is_done() {
                let state = env.observe();
                let feats = all_features(&state);
                let a = model.select(&feats, state.num_valid(), cfg.alpha);
                let step = env.step(a)?;
                model.update(a, &feats[a], step.scalar_reward)?;
            }
        }
    }
    Ok(model)
}

/// Frozen, exploitation-only use of a trained model.
#[derive(Debug, Clone)]
pub struct LinUcbScheduler<'a> {
    pub model: &'a LinUcb,
}

impl Scheduler for LinUcbScheduler<'_> {
    fn name(&self) -> &str {
        "linucb"
    }

    fn select(&mut self, env: &MecEnv) -> Result<usize> {
        let state = env.observe();
        Ok(self.model.select(&all_features(&state), state.num_valid(), 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn untrained_ties_and_norms() {
        let m = LinUcb::new(3, 2, 1.0);
        let same = vec![vec![1.0, 0.0]; 3];
        assert_eq!(m.select(&same, 3, 1.0), 0);
        let norms = vec![vec![1.0, 0.0], vec![0.0, 3.0], vec![2.0, 0.0]];
        assert_eq!(m.select(&norms, 3, 1.0), 1);
        assert_eq!(m.select(&norms, 1, 1.0), 0, "mask limits the choice");
        // Rescaling the exploration weight keeps the argmax
        assert_eq!(m.select(&norms, 3, 7.5), 1);
    }

    #[test]
    fn single_update_gives_half() {
        let mut arm = ArmState::new(3);
        arm.update(&[1.0, 0.0, 0.0], 1.0).unwrap();
        let t = arm.theta();
        assert!((t[0] - 0.5).abs() < 1e-15 && t[1] == 0.0 && t[2] == 0.0);
        let before = arm.clone();
        arm.update(&[0.0; 3], 4.0).unwrap();
        assert_eq!(arm.a, before.a);
        assert_eq!(arm.b, before.b);
    }

    #[test]
    fn converges_to_the_best_arm() {
        let mut m = LinUcb::new(3, 2, 1.0);
        let x = vec![vec![1.0, 0.5]; 3];
        let means = [0.2, 0.8, 0.5];
        let mut r = rng::stream(3, 0);
        let mut late = [0; 3];
        for t in 0..3000 {
            let a = m.select(&x, 3, 1.0);
            let reward = means[a] + r.random_range(-0.1..0.1);
            m.update(a, &x[a], reward).unwrap();
            if t >= 2000 {
                late[a] += 1;
            }
        }
        assert!(late[1] > 900, "{late:?}");
        assert_eq!(m.select(&x, 3, 0.0), 1);
    }

    proptest! {
        #[test]
        fn design_matrix_stays_spd(xs in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..30)) {
            let mut arm = ArmState::new(3);
            for x in &xs {
                arm.update(x, 0.3).unwrap();
            }
            let d = 3;
            for i in 0..d {
                for j in 0..d {
                    prop_assert!((arm.a[i * d + j] - arm.a[j * d + i]).abs() < 1e-12);
                }
            }
            // Leading principal minors positive (Sylvester)
            let a = &arm.a;
            let m1 = a[0];
            let m2 = a[0] * a[4] - a[1] * a[3];
            let m3 = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6]);
            prop_assert!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0);
            // A * A^-1 = I
            for i in 0..d {
                for j in 0..d {
                    let v: f64 = (0..d).map(|k| a[i * d + k] * arm.a_inv[k * d + j]).sum();
                    let eye = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((v - eye).abs() < 1e-8);
                }
            }
        }
    }
}
