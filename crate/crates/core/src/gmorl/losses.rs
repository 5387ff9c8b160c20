//! Discrete soft actor-critic objectives over masked action sets.
//!
//! Every sum, expectation and entropy below runs over the `E + 1` live
//! actions of each state only.

use super::replay::Transition;
use crate::error::{Error, Result};
use crate::momdp::EncodedState;
use crate::nn::{masked_softmax, Network, ParamSet};

/// Scalar loss plus its parameter gradient.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grads: ParamSet,
}

fn check_batch(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Logic("loss needs a nonempty batch".into()));
    }
    Ok(())
}

/// Live-action minimum of two critics.
pub fn min_q(net: &Network, q1: &ParamSet, q2: &ParamSet, state: &EncodedState) -> Result<Vec<f64>> {
    let (a, _) = net.forward(q1, state)?;
    let (b, _) = net.forward(q2, state)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect())
}

/// `pi(.|s)^T (min Q(s, .) - alpha log pi(.|s))` under the target critics.
pub fn soft_state_value(
    net: &Network,
    policy: &ParamSet,
    q1: &ParamSet,
    q2: &ParamSet,
    state: &EncodedState,
    alpha: f64,
) -> Result<f64> {
    let (logits, _) = net.forward(policy, state)?;
    let pi = masked_softmax(&logits, logits.len())?;
    let q = min_q(net, q1, q2, state)?;
    Ok(q.iter()
        .zip(pi.probs.iter().zip(&pi.log_probs))
        .map(|(q, (p, lp))| if *p > 0.0 { p * (q - alpha * lp) } else { 0.0 })
        .sum())
}

/// Bellman targets `r + gamma (1 - done) V(s')`, one per transition.
#[allow(clippy::too_many_arguments)]
pub fn q_targets(
    net: &Network,
    batch: &[&Transition],
    rewards: &[f64],
    policy: &ParamSet,
    q1_target: &ParamSet,
    q2_target: &ParamSet,
    gamma: f64,
    alpha: f64,
) -> Result<Vec<f64>> {
    check_batch(batch.len())?;
    if rewards.len() != batch.len() {
        return Err(Error::Shape(format!(
            "{} rewards for {} transitions",
            rewards.len(),
            batch.len()
        )));
    }
    batch
        .iter()
        .zip(rewards)
        .map(|(t, &r)| {
            if t.done || gamma == 0.0 {
                Ok(r)
            } else {
                Ok(r + gamma * soft_state_value(net, policy, q1_target, q2_target, &t.next_state, alpha)?)
            }
        })
        .collect()
}

/// `1/2 mean (Q(s, a) - y)^2` for fixed targets `y`.
pub fn q_loss_with_targets(net: &Network, q: &ParamSet, batch: &[&Transition], targets: &[f64]) -> Result<LossGrad> {
    check_batch(batch.len())?;
    let n = batch.len() as f64;
    let mut grads = net.zero_grad();
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        let (out, trace) = net.forward(q, &t.state)?;
        let err = out[t.action] - y;
        loss += 0.5 * err * err / n;
        let mut g = vec![0.0; out.len()];
        g[t.action] = err / n;
        net.backward_into(q, trace, &g, &mut grads);
    }
    Ok(LossGrad { loss, grads })
}

/// Soft Bellman residual of critic `q` against targets built from the
/// target critics and the current policy.
#[allow(clippy::too_many_arguments)]
pub fn q_loss(
    net: &Network,
    q: &ParamSet,
    batch: &[&Transition],
    rewards: &[f64],
    policy: &ParamSet,
    q1_target: &ParamSet,
    q2_target: &ParamSet,
    gamma: f64,
    alpha: f64,
) -> Result<LossGrad> {
    let y = q_targets(net, batch, rewards, policy, q1_target, q2_target, gamma, alpha)?;
    q_loss_with_targets(net, q, batch, &y)
}

/// Policy objective with fixed per-state Q tables (live entries only).
/// Also returns each state's policy entropy.
pub fn policy_loss_given_q(
    net: &Network,
    policy: &ParamSet,
    states: &[&EncodedState],
    q_tables: &[Vec<f64>],
    alpha: f64,
) -> Result<(LossGrad, Vec<f64>)> {
    check_batch(states.len())?;
    let n = states.len() as f64;
    let mut grads = net.zero_grad();
    let mut loss = 0.0;
    let mut entropies = Vec::with_capacity(states.len());
    for (s, q) in states.iter().zip(q_tables) {
        let (logits, trace) = net.forward(policy, s)?;
        if q.len() != logits.len() {
            return Err(Error::Shape(format!(
                "Q table has {} entries, state has {}",
                q.len(),
                logits.len()
            )));
        }
        let pi = masked_softmax(&logits, logits.len())?;
        // d/d pi_a of pi^T (alpha log pi - Q)
        let g: Vec<f64> = pi
            .log_probs
            .iter()
            .zip(q)
            .map(|(lp, q)| alpha * (lp + 1.0) - q)
            .collect();
        let mean_g: f64 = pi.probs.iter().zip(&g).map(|(p, g)| p * g).sum();
        let mut entropy = 0.0;
        for ((p, lp), q) in pi.probs.iter().zip(&pi.log_probs).zip(q) {
            loss += p * (alpha * lp - q) / n;
            entropy -= p * lp;
        }
        entropies.push(entropy);
        let d_logits: Vec<f64> = pi.probs.iter().zip(&g).map(|(p, g)| p * (g - mean_g) / n).collect();
        net.backward_into(policy, trace, &d_logits, &mut grads);
    }
    Ok((LossGrad { loss, grads }, entropies))
}

/// `mean pi^T (alpha log pi - min(Q1, Q2))` with critics held fixed.
pub fn policy_loss(
    net: &Network,
    policy: &ParamSet,
    q1: &ParamSet,
    q2: &ParamSet,
    states: &[&EncodedState],
    alpha: f64,
) -> Result<(LossGrad, Vec<f64>)> {
    let tables = states
        .iter()
        .map(|s| min_q(net, q1, q2, s))
        .collect::<Result<Vec<_>>>()?;
    policy_loss_given_q(net, policy, states, &tables, alpha)
}

/// Default mask-aware target entropy: `coef * ln(E + 1)`.
pub fn target_entropy(coef: f64, num_edges: usize) -> f64 {
    coef * ((num_edges + 1) as f64).ln()
}

/// `mean alpha (H(pi(.|s)) - H_bar(s))` and its derivative in alpha.
///
/// The derivative is negative when the policy is less random than the
/// target, so descent raises alpha.
pub fn temperature_loss(entropies: &[f64], targets: &[f64], alpha: f64) -> Result<(f64, f64)> {
    check_batch(entropies.len())?;
    if targets.len() != entropies.len() {
        return Err(Error::Shape("one target entropy per state required".into()));
    }
    let n = entropies.len() as f64;
    let grad = entropies.iter().zip(targets).map(|(h, t)| h - t).sum::<f64>() / n;
    Ok((alpha * grad, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momdp::{EncodingConfig, VectorReward};
    use crate::nn::{Activation, NetworkSpec};
    use crate::rng;
    use rand::Rng;

    fn net(max_edges: usize) -> Network {
        let enc = EncodingConfig::new(max_edges, 3).unwrap();
        let mut spec = NetworkSpec::with_widths(&enc, vec![5], vec![6], vec![4]);
        spec.activation = Activation::Tanh;
        Network::new(spec).unwrap()
    }

    fn state<R: Rng>(r: &mut R, enc: EncodingConfig) -> EncodedState {
        let e = r.random_range(1..=enc.max_edges);
        crate::nn::network::tests::random_state(r, enc, e)
    }

    fn batch<R: Rng>(r: &mut R, enc: EncodingConfig, n: usize) -> Vec<Transition> {
        (0..n)
            .map(|i| {
                let s = state(r, enc);
                let a = r.random_range(0..s.num_valid());
                Transition {
                    next_state: state(r, enc),
                    state: s,
                    action: a,
                    scalar_reward: r.random_range(-1.0..0.0),
                    reward: VectorReward {
                        time: r.random_range(-2.0..0.0),
                        energy: r.random_range(-1.0..0.0),
                    },
                    done: i % 4 == 3,
                    context_id: i as u64,
                }
            })
            .collect()
    }

    fn fd_check(params: &ParamSet, analytic: &ParamSet, f: impl Fn(&ParamSet) -> f64) {
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..params.len() {
            let mut p = params.clone();
            p.values[i] += h;
            let up = f(&p);
            p.values[i] -= 2.0 * h;
            let down = f(&p);
            let fd = (up - down) / (2.0 * h);
            let a = analytic.values[i];
            let rel = (fd - a).abs() / (fd.abs() + a.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn gamma_zero_targets_are_rewards() {
        let n = net(3);
        let mut r = rng::stream(1, 0);
        let b = batch(&mut r, n.spec().encoding(), 6);
        let refs: Vec<&Transition> = b.iter().collect();
        let rewards: Vec<f64> = b.iter().map(|t| t.scalar_reward).collect();
        let p = n.init(&mut r, false);
        let y = q_targets(&n, &refs, &rewards, &p, &p, &p, 0.0, 0.05).unwrap();
        assert_eq!(y, rewards);
    }

    #[test]
    fn q_loss_gradient_matches_finite_differences() {
        let n = net(3);
        let mut r = rng::stream(2, 0);
        let b = batch(&mut r, n.spec().encoding(), 5);
        let refs: Vec<&Transition> = b.iter().collect();
        let rewards: Vec<f64> = b.iter().map(|t| t.scalar_reward).collect();
        let (pol, q, t1, t2) = (
            n.init(&mut r, false),
            n.init(&mut r, false),
            n.init(&mut r, false),
            n.init(&mut r, false),
        );
        let out = q_loss(&n, &q, &refs, &rewards, &pol, &t1, &t2, 0.9, 0.05).unwrap();
        fd_check(&q, &out.grads, |p| {
            q_loss(&n, p, &refs, &rewards, &pol, &t1, &t2, 0.9, 0.05).unwrap().loss
        });
    }

    #[test]
    fn policy_loss_gradient_matches_finite_differences() {
        let n = net(3);
        let mut r = rng::stream(3, 0);
        let b = batch(&mut r, n.spec().encoding(), 5);
        let states: Vec<&EncodedState> = b.iter().map(|t| &t.state).collect();
        let (pol, q1, q2) = (n.init(&mut r, false), n.init(&mut r, false), n.init(&mut r, false));
        let (out, _) = policy_loss(&n, &pol, &q1, &q2, &states, 0.3).unwrap();
        fd_check(&pol, &out.grads, |p| {
            policy_loss(&n, p, &q1, &q2, &states, 0.3).unwrap().0.loss
        });
    }

    #[test]
    fn temperature_gradient_signs() {
        let (_, g) = temperature_loss(&[0.5, 0.5], &[0.5, 0.5], 0.05).unwrap();
        assert_eq!(g, 0.0);
        let (_, g) = temperature_loss(&[0.1], &[0.6], 0.05).unwrap();
        assert!(g < 0.0, "descent must raise alpha");
        let (loss, g) = temperature_loss(&[0.9, 0.3], &[0.4, 0.4], 2.0).unwrap();
        assert!((g - 0.2).abs() < 1e-15 && (loss - 0.4).abs() < 1e-15);
    }

    #[test]
    fn uniform_q_is_minimised_by_uniform_policy() {
        // With equal Q values the objective is alpha * (-entropy) + const,
        // so its gradient vanishes at the uniform (zero-head) policy.
        let n = net(3);
        let mut r = rng::stream(5, 0);
        let b = batch(&mut r, n.spec().encoding(), 4);
        let states: Vec<&EncodedState> = b.iter().map(|t| &t.state).collect();
        let tables: Vec<Vec<f64>> = states.iter().map(|s| vec![1.7; s.num_valid()]).collect();
        let pol = n.init(&mut r, true);
        let (out, h) = policy_loss_given_q(&n, &pol, &states, &tables, 0.2).unwrap();
        assert!(out.grads.values.iter().all(|g| g.abs() < 1e-12));
        for (s, h) in states.iter().zip(h) {
            assert!((h - (s.num_valid() as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn scalarised_gradients_are_convex_combinations() {
        let n = net(2);
        let mut r = rng::stream(6, 0);
        let b = batch(&mut r, n.spec().encoding(), 6);
        let refs: Vec<&Transition> = b.iter().collect();
        let (pol, q, t1, t2) = (
            n.init(&mut r, false),
            n.init(&mut r, false),
            n.init(&mut r, false),
            n.init(&mut r, false),
        );
        let w = [0.3, 0.7];
        let rt: Vec<f64> = b.iter().map(|t| t.reward.time).collect();
        let re: Vec<f64> = b.iter().map(|t| t.reward.energy).collect();
        let rs: Vec<f64> = rt.iter().zip(&re).map(|(a, b)| w[0] * a + w[1] * b).collect();
        let grad = |rw: &[f64]| {
            q_loss(&n, &q, &refs, rw, &pol, &t1, &t2, 0.95, 0.05)
                .unwrap()
                .grads
                .values
        };
        let (gs, gt, ge) = (grad(&rs), grad(&rt), grad(&re));
        for i in 0..gs.len() {
            assert!((gs[i] - (w[0] * gt[i] + w[1] * ge[i])).abs() < 1e-8);
        }

        let states: Vec<&EncodedState> = b.iter().map(|t| &t.state).collect();
        let qt: Vec<Vec<f64>> = states.iter().map(|s| n.forward(&t1, s).unwrap().0).collect();
        let qe: Vec<Vec<f64>> = states.iter().map(|s| n.forward(&t2, s).unwrap().0).collect();
        let qs: Vec<Vec<f64>> = qt
            .iter()
            .zip(&qe)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| w[0] * x + w[1] * y).collect())
            .collect();
        let pg = |tables: &[Vec<f64>]| {
            policy_loss_given_q(&n, &pol, &states, tables, 0.05)
                .unwrap()
                .0
                .grads
                .values
        };
        let (gs, gt, ge) = (pg(&qs), pg(&qt), pg(&qe));
        for i in 0..gs.len() {
            assert!((gs[i] - (w[0] * gt[i] + w[1] * ge[i])).abs() < 1e-8);
        }
    }
}
