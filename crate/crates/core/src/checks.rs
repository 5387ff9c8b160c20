//! Self-check suites run by `mec-offload check` and the acceptance tests.
//!
//! Each suite draws every case from its own stream of the given seed, so a
//! failure message naming `(seed, case)` is enough to replay it.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::gmorl::losses;
use crate::gmorl::Transition;
use crate::momdp::{
    delay_reward_estimate_scaled, delay_reward_oracle, ContextSpace, EncodedState, EncodingConfig, MecEnv, MomdpConfig,
    VectorReward, PAD,
};
use crate::nn::{Activation, Network, NetworkSpec, ParamSet};
use crate::pareto::{hypervolume, pareto_front, PerfPoint};
use crate::rng::{self, derive_seed};
use crate::sim::{Entry, ExecutorState, SimConfig};

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    /// Largest error statistic observed (suite-specific meaning).
    pub worst: f64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            cases: 0,
            worst: 0.0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.cases > 0
    }

    fn fail(&mut self, msg: String) {
        // keep reports readable when everything breaks
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {}: {} cases, {} failures, worst {:.3e}",
            self.name,
            self.cases,
            self.failures.len(),
            self.worst
        )?;
        for msg in &self.failures {
            write!(f, "\n    {msg}")?;
        }
        Ok(())
    }
}

/// Closed-form delay reward against the event-driven replay on random
/// servers: frequencies in [1.5, 5] GHz, up to 50 resident tasks.
pub fn reward_oracle_suite(cases: usize, seed: u64, correction_scale: f64) -> SuiteReport {
    let mut rep = SuiteReport::new("reward-oracle");
    let eta = 1e3;
    let sizes: Exp<f64> = Exp::new(1.0 / 16e6).expect("positive rate");
    for k in 0..cases {
        let mut r = rng::stream(seed, k as u64);
        let freq = r.random_range(1.5e9..5e9);
        let n = r.random_range(0..=50);
        let clock = r.random_range(0.0..100.0);
        let entries = (0..n)
            .map(|task| Entry {
                task,
                residual_bits: sizes.sample(&mut r).max(1.0),
            })
            .collect();
        let exec = ExecutorState::from_entries(entries, clock);
        let size = sizes.sample(&mut r).max(1.0);
        let t_off = if r.random_bool(0.1) {
            0.0
        } else {
            r.random_range(0.0..3.0)
        };
        let est = delay_reward_estimate_scaled(&exec.sorted_residuals(), size, t_off, freq, eta, correction_scale);
        let oracle = delay_reward_oracle(&exec, size, t_off, freq, eta);
        let rel = (est - oracle).abs() / oracle.abs();
        rep.cases += 1;
        rep.worst = rep.worst.max(rel);
        if rel.is_nan() || rel >= 1e-9 {
            rep.fail(format!(
                "seed {seed} case {k}: n={n} f={freq:.4e} L={size:.4e} t_off={t_off:.4}: closed form {est} vs oracle {oracle} (rel {rel:.2e})"
            ));
        }
    }
    rep
}

/// Sum of per-step energy rewards against the simulator's total energy,
/// required to agree bit for bit.
pub fn energy_identity_suite(episodes: usize, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("energy-identity");
    let space = ContextSpace::testing();
    let momdp = MomdpConfig {
        encoding: EncodingConfig::new(space.max_edges(), 30).expect("valid"),
        ..MomdpConfig::default()
    };
    for k in 0..episodes {
        let mut r = rng::stream(seed, k as u64);
        let sim = SimConfig {
            steps: r.random_range(5..=60),
            ..SimConfig::default()
        };
        let pref = r.random_range(0..space.preferences.len());
        let result = (|| {
            let ctx = space.sample(&mut r, pref)?;
            let mut env = MecEnv::new(sim, momdp, ctx, rng::stream(derive_seed(seed, 1), k as u64))?;
            let mut sum = 0.0;
            while !env.is_done() {
                let a = r.random_range(0..=env.context().num_edges);
                sum += env.step(a)?.reward.energy;
            }
            Ok::<_, crate::Error>((sum, env.totals().energy_j))
        })();
        rep.cases += 1;
        match result {
            Ok((sum, total)) => {
                let gap = (sum + total).abs();
                rep.worst = rep.worst.max(gap);
                if sum != -total {
                    rep.fail(format!(
                        "seed {seed} episode {k}: sum of rewards {sum} vs total energy {total}"
                    ));
                }
            }
            Err(e) => rep.fail(format!("seed {seed} episode {k}: {e}")),
        }
    }
    rep
}

/// Random state with plausible magnitudes (live slots only; dummies padded).
pub fn synthetic_state<R: Rng + ?Sized>(r: &mut R, enc: EncodingConfig, num_edges: usize) -> EncodedState {
    let w = enc.server_width();
    let mut servers = vec![PAD; enc.slots() * w];
    for slot in 0..=num_edges {
        for v in &mut servers[slot * w..(slot + 1) * w] {
            *v = r.random_range(0.0..3.0);
        }
        servers[slot * w] = r.random_range(1e5..3e7);
        servers[slot * w + 1] = r.random_range(1e7..4e8);
        servers[slot * w + 2] = r.random_range(1.5e9..5e9);
    }
    let wt = r.random_range(0.0..1.0);
    EncodedState {
        config: enc,
        num_edges,
        servers,
        preference: [wt, 1.0 - wt],
    }
}

/// `||fd - analytic|| / max(||fd||, ||analytic||)` with central differences.
fn fd_relative_error(params: &ParamSet, analytic: &[f64], f: impl Fn(&ParamSet) -> f64) -> f64 {
    let h = 1e-6;
    let mut p = params.clone();
    let mut diff = 0.0;
    let mut norm_fd = 0.0;
    let mut norm_an = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = p.values[i];
        p.values[i] = orig + h;
        let up = f(&p);
        p.values[i] = orig - h;
        let down = f(&p);
        p.values[i] = orig;
        let fd = (up - down) / (2.0 * h);
        diff += (fd - a) * (fd - a);
        norm_fd += fd * fd;
        norm_an += a * a;
    }
    let scale = norm_fd.max(norm_an).sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}

/// Central finite differences for the critic, policy and temperature
/// losses on small random tanh networks, one network per seed.
pub fn gradient_suite(seeds: usize, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("gradients");
    for s in 0..seeds {
        let mut r = rng::stream(seed, s as u64);
        let max_edges = r.random_range(1..=4);
        let enc = EncodingConfig::new(max_edges, r.random_range(2..=5)).expect("valid");
        let mut spec = NetworkSpec::with_widths(
            &enc,
            vec![r.random_range(3..=6)],
            vec![r.random_range(3..=6)],
            vec![r.random_range(2..=4)],
        );
        spec.activation = Activation::Tanh;
        let net = Network::new(spec).expect("valid spec");
        let batch: Vec<Transition> = (0..4)
            .map(|i| {
                let (e1, e2) = (r.random_range(1..=max_edges), r.random_range(1..=max_edges));
                let state = synthetic_state(&mut r, enc, e1);
                let action = r.random_range(0..state.num_valid());
                Transition {
                    next_state: synthetic_state(&mut r, enc, e2),
                    state,
                    action,
                    scalar_reward: r.random_range(-2.0..0.0),
                    reward: VectorReward {
                        time: r.random_range(-2.0..0.0),
                        energy: r.random_range(-1.0..0.0),
                    },
                    done: i == 3,
                    context_id: i,
                }
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let rewards: Vec<f64> = batch.iter().map(|t| t.scalar_reward).collect();
        let states: Vec<&EncodedState> = batch.iter().map(|t| &t.state).collect();
        let [pol, q1, q2, t1, t2] = [0; 5].map(|_| net.init(&mut r, false));
        let alpha = r.random_range(0.01..0.5);
        let gamma = 0.95;

        let mut checks: Vec<(&str, f64)> = Vec::new();
        let result = (|| {
            let q = losses::q_loss(&net, &q1, &refs, &rewards, &pol, &t1, &t2, gamma, alpha)?;
            checks.push((
                "q",
                fd_relative_error(&q1, &q.grads.values, |p| {
                    losses::q_loss(&net, p, &refs, &rewards, &pol, &t1, &t2, gamma, alpha)
                        .map(|l| l.loss)
                        .unwrap_or(f64::NAN)
                }),
            ));
            let (pl, entropies) = losses::policy_loss(&net, &pol, &q1, &q2, &states, alpha)?;
            checks.push((
                "policy",
                fd_relative_error(&pol, &pl.grads.values, |p| {
                    losses::policy_loss(&net, p, &q1, &q2, &states, alpha)
                        .map(|(l, _)| l.loss)
                        .unwrap_or(f64::NAN)
                }),
            ));
            let targets: Vec<f64> = states
                .iter()
                .map(|s| losses::target_entropy(0.6, s.num_edges))
                .collect();
            let (_, d_alpha) = losses::temperature_loss(&entropies, &targets, alpha)?;
            let h = 1e-6;
            let up = losses::temperature_loss(&entropies, &targets, alpha + h)?.0;
            let down = losses::temperature_loss(&entropies, &targets, alpha - h)?.0;
            let fd = (up - down) / (2.0 * h);
            let scale = fd.abs().max(d_alpha.abs());
            checks.push((
                "temperature",
                if scale == 0.0 {
                    0.0
                } else {
                    (fd - d_alpha).abs() / scale
                },
            ));
            Ok::<_, crate::Error>(())
        })();
        if let Err(e) = result {
            rep.fail(format!("seed {seed} net {s}: {e}"));
            continue;
        }
        for (name, err) in checks {
            rep.cases += 1;
            rep.worst = rep.worst.max(err);
            if err.is_nan() || err >= 1e-4 {
                rep.fail(format!(
                    "seed {seed} net {s}: {name} loss gradient relative error {err:.2e}"
                ));
            }
        }
    }
    rep
}

/// Fraction of the reference box dominated by `front`, estimated by
/// uniform sampling, with its standard error (both in area units).
pub fn monte_carlo_hypervolume<R: Rng + ?Sized>(
    front: &[PerfPoint],
    reference: &PerfPoint,
    origin: (f64, f64),
    samples: usize,
    r: &mut R,
) -> (f64, f64) {
    // staircase: for ascending delay, the lowest energy reached so far
    let mut stairs: Vec<(f64, f64)> = front.iter().map(|p| (p.delay, p.energy)).collect();
    stairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut low = f64::INFINITY;
    for s in &mut stairs {
        low = low.min(s.1);
        s.1 = low;
    }
    let (w, h) = (reference.delay - origin.0, reference.energy - origin.1);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = origin.0 + r.random::<f64>() * w;
        let y = origin.1 + r.random::<f64>() * h;
        let k = stairs.partition_point(|s| s.0 <= x);
        if k > 0 && stairs[k - 1].1 <= y {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let area = w * h;
    (frac * area, area * (frac * (1.0 - frac) / samples as f64).sqrt())
}

/// Canonical front plus random fronts checked against Monte Carlo within
/// three standard errors.
pub fn hypervolume_suite(fronts: usize, samples: usize, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("hypervolume");
    let canonical = [
        PerfPoint::new(1.0, 3.0),
        PerfPoint::new(2.0, 2.0),
        PerfPoint::new(3.0, 1.0),
    ];
    let hv = hypervolume(&canonical, &PerfPoint::new(4.0, 4.0));
    rep.cases += 1;
    rep.worst = (hv - 6.0).abs();
    if hv != 6.0 {
        rep.fail(format!("canonical front: {hv} instead of 6"));
    }
    for k in 0..fronts {
        let mut r = rng::stream(seed, k as u64);
        let n = r.random_range(1..=15);
        let pts: Vec<PerfPoint> = (0..n)
            .map(|_| PerfPoint::new(r.random_range(0.0..100.0), r.random_range(0.0..5.0)))
            .collect();
        let front = pareto_front(&pts).expect("nonempty, finite");
        let reference = PerfPoint::new(100.0, 5.0);
        let exact = hypervolume(&front, &reference);
        let (mc, se) = monte_carlo_hypervolume(&front, &reference, (0.0, 0.0), samples, &mut r);
        let z = if se > 0.0 {
            (exact - mc).abs() / se
        } else {
            (exact - mc).abs()
        };
        rep.cases += 1;
        rep.worst = rep.worst.max(z);
        if z > 3.0 {
            rep.fail(format!(
                "seed {seed} front {k}: sweep {exact} vs Monte Carlo {mc} ({z:.2} standard errors)"
            ));
        }
    }
    rep
}

/// Encodes states of real simulated episodes for every `E` up to
/// `max_edges` and checks padding plus masked policy output.
pub fn mask_suite(states: usize, max_edges: usize, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("mask-padding");
    let enc = EncodingConfig::new(max_edges, 30).expect("valid");
    let momdp = MomdpConfig {
        encoding: enc,
        ..MomdpConfig::default()
    };
    let sim = SimConfig {
        steps: 50,
        ..SimConfig::default()
    };
    let net = Network::new(NetworkSpec::with_widths(&enc, vec![16], vec![16], vec![8])).expect("valid spec");
    let mut episode = 0u64;
    while rep.cases < states {
        let mut r = rng::stream(seed, episode);
        let params = net.init(&mut r, false);
        let e = (episode as usize % max_edges) + 1;
        let space = ContextSpace {
            edge_counts: vec![e],
            ..ContextSpace::testing()
        };
        let pref = r.random_range(0..space.preferences.len());
        let ctx = match space.sample(&mut r, pref) {
            Ok(c) => c,
            Err(err) => {
                rep.fail(format!("seed {seed} episode {episode}: {err}"));
                return rep;
            }
        };
        let mut env = match MecEnv::new(sim.clone(), momdp, ctx, rng::stream(derive_seed(seed, 1), episode)) {
            Ok(env) => env,
            Err(err) => {
                rep.fail(format!("seed {seed} episode {episode}: {err}"));
                return rep;
            }
        };
        let mut t = 0;
        while !env.is_done() && rep.cases < states {
            let s = env.observe();
            rep.cases += 1;
            let w = enc.server_width();
            if s.servers[(e + 1) * w..].iter().any(|&v| v != PAD) {
                rep.fail(format!(
                    "seed {seed} episode {episode} step {t}: dummy server not padded (E={e})"
                ));
            }
            match net.forward_policy(&params, &s) {
                Ok(p) => {
                    let sum: f64 = p.iter().sum();
                    rep.worst = rep.worst.max((sum - 1.0).abs());
                    if p[e + 1..].iter().any(|&x| x != 0.0) || (sum - 1.0).abs() > 1e-12 {
                        rep.fail(format!(
                            "seed {seed} episode {episode} step {t}: probabilities {p:?} (E={e})"
                        ));
                    }
                }
                Err(err) => rep.fail(format!("seed {seed} episode {episode} step {t}: {err}")),
            }
            let a = r.random_range(0..=e);
            if let Err(err) = env.step(a) {
                rep.fail(format!("seed {seed} episode {episode} step {t}: {err}"));
                break;
            }
            t += 1;
        }
        episode += 1;
    }
    rep
}

/// Sizes of the full self-check run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckPlan {
    pub reward_cases: usize,
    pub energy_episodes: usize,
    pub gradient_seeds: usize,
    pub hv_fronts: usize,
    pub hv_samples: usize,
    pub mask_states: usize,
    pub mask_max_edges: usize,
    /// Multiplier on the delay-reward overlap correction (1 is correct).
    pub correction_scale: f64,
}

impl Default for CheckPlan {
    fn default() -> Self {
        Self {
            reward_cases: 1000,
            energy_episodes: 100,
            gradient_seeds: 20,
            hv_fronts: 50,
            hv_samples: 1_000_000,
            mask_states: 10_000,
            mask_max_edges: 10,
            correction_scale: 1.0,
        }
    }
}

pub fn run_all(plan: &CheckPlan, seed: u64) -> Vec<SuiteReport> {
    vec![
        reward_oracle_suite(plan.reward_cases, derive_seed(seed, 11), plan.correction_scale),
        energy_identity_suite(plan.energy_episodes, derive_seed(seed, 12)),
        gradient_suite(plan.gradient_seeds, derive_seed(seed, 13)),
        hypervolume_suite(plan.hv_fronts, plan.hv_samples, derive_seed(seed, 14)),
        mask_suite(plan.mask_states, plan.mask_max_edges, derive_seed(seed, 15)),
    ]
}
