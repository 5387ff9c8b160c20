//! Public-API runs across modules: train, checkpoint, evaluate, compare.

use approx::assert_relative_eq;

use mec_core::baselines::{p_grid, RandomPolicy};
use mec_core::gmorl::{evaluate, evaluate_agent, train, Agent, Problem, TrainerConfig};
use mec_core::momdp::{preference_grid, Context, ContextSpace, EncodingConfig, MomdpConfig, Preference};
use mec_core::nn::Checkpoint;
use mec_core::pareto::{hypervolume, pareto_front, reference_point, PerfPoint};
use mec_core::rng;
use mec_core::sim::{balanced_mean_size, SimConfig};

fn problem() -> Problem {
    Problem {
        sim: SimConfig {
            steps: 12,
            ..SimConfig::default()
        },
        momdp: MomdpConfig {
            encoding: EncodingConfig::new(2, 8).unwrap(),
            ..MomdpConfig::default()
        },
        space: ContextSpace {
            preferences: preference_grid(4).unwrap(),
            edge_counts: vec![1, 2],
            ..ContextSpace::training()
        },
    }
}

fn small_trainer() -> TrainerConfig {
    TrainerConfig {
        epochs: 3,
        envs_per_epoch: 4,
        updates_per_env: 2,
        batch_size: 16,
        replay_capacity: 500,
        calibration_episodes: 2,
        encoder_widths: vec![8],
        trunk_widths: vec![16],
        head_widths: vec![8],
        ..TrainerConfig::desk()
    }
}

#[test]
fn trained_agent_survives_a_checkpoint_file() {
    let p = problem();
    let cfg = small_trainer();
    let out = train(&cfg, &p, 9).unwrap();
    assert_eq!(out.log.len(), 12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.ckpt");
    out.agent.to_checkpoint().save(&path).unwrap();
    let spec = Agent::spec_for(&cfg, &p.momdp.encoding);
    let back = Agent::from_checkpoint(&Checkpoint::load(&path, Some(&spec)).unwrap()).unwrap();

    let ctx = Context::uniform(Preference::new(0.3, 0.7).unwrap(), 2, 4e9, 2e9).unwrap();
    let a = evaluate_agent(&out.agent, &p.sim, &p.momdp, &ctx, 3, 5).unwrap();
    let b = evaluate_agent(&back, &p.sim, &p.momdp, &ctx, 3, 5).unwrap();
    assert_eq!(a, b);

    let too_big = Context::uniform(Preference::new(0.3, 0.7).unwrap(), 3, 4e9, 2e9).unwrap();
    assert!(evaluate_agent(&out.agent, &p.sim, &p.momdp, &too_big, 1, 5).is_err());
}

#[test]
fn evaluation_uses_common_random_numbers() {
    let p = problem();
    let ctx = Context::uniform(Preference::new(0.5, 0.5).unwrap(), 2, 4e9, 2e9).unwrap();
    let run = |seed| {
        let mut pol = RandomPolicy::new(0.3, rng::stream(1, 0)).unwrap();
        evaluate(&mut pol, &p.sim, &p.momdp, &ctx, 4, seed).unwrap()
    };
    assert_eq!(run(11), run(11));
    assert_ne!(run(11), run(12));
    // the mean task size is the balanced one for this system
    let l = balanced_mean_size(1.0, &ctx.freqs_hz, 1e3, 0.1, 10).unwrap();
    assert_relative_eq!(run(11).mean_task_bits, l, max_relative = 1e-12);
    assert_relative_eq!(
        run(11).delay_per_mbit() * l / 1e6,
        run(11).delay_s,
        max_relative = 1e-12
    );
}

#[test]
fn random_sweep_forms_a_scored_front() {
    let p = problem();
    let ctx = Context::uniform(Preference::new(0.5, 0.5).unwrap(), 2, 4e9, 2e9).unwrap();
    let pts: Vec<PerfPoint> = p_grid(5)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, q)| {
            let mut pol = RandomPolicy::new(q, rng::stream(3, i as u64)).unwrap();
            let r = evaluate(&mut pol, &p.sim, &p.momdp, &ctx, 5, 21).unwrap();
            PerfPoint::labelled(r.delay_s, r.energy_j, q, "random")
        })
        .collect();
    let front = pareto_front(&pts).unwrap();
    let reference = reference_point(&[&front]).unwrap();
    let hv = hypervolume(&front, &reference);
    assert!(hv >= 0.0 && hv <= reference.delay * reference.energy);
    // all-cloud costs the most energy: cloud CPUs run faster
    let cloud = pts.iter().find(|q| q.preference == 1.0).unwrap();
    assert!(pts.iter().all(|q| q.energy <= cloud.energy));
}
