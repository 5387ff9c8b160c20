use rand::Rng;

use super::config::TrainerConfig;
use crate::error::{Error, Result};
use crate::momdp::{EncodedState, EncodingConfig};
use crate::nn::{masked_argmax, masked_softmax, soft_update, Adam, Checkpoint, Network, NetworkSpec, ParamSet};

/// Policy, twin critics, their targets and the entropy temperature.
#[derive(Debug, Clone)]
pub struct Agent {
    pub net: Network,
    pub policy: ParamSet,
    pub q1: ParamSet,
    pub q2: ParamSet,
    pub q1_target: ParamSet,
    pub q2_target: ParamSet,
    pub alpha: f64,
}

/// Names of the parameter sets inside an agent checkpoint.
pub const SET_NAMES: [&str; 5] = ["policy", "q1", "q2", "q1_target", "q2_target"];

impl Agent {
    pub fn spec_for(cfg: &TrainerConfig, encoding: &EncodingConfig) -> NetworkSpec {
        let mut spec = NetworkSpec::with_widths(
            encoding,
            cfg.encoder_widths.clone(),
            cfg.trunk_widths.clone(),
            cfg.head_widths.clone(),
        );
        spec.activation = cfg.activation;
        spec
    }

    /// Fresh agent: uniform initial policy, targets equal to the critics.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, alpha: f64, rng: &mut R) -> Result<Self> {
        let net = Network::new(spec)?;
        let policy = net.init(rng, true);
        let q1 = net.init(rng, false);
        let q2 = net.init(rng, false);
        Ok(Self {
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            net,
            policy,
            q1,
            q2,
            alpha,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        self.net.spec()
    }

    pub fn probs(&self, state: &EncodedState) -> Result<Vec<f64>> {
        self.net.forward_policy(&self.policy, state)
    }

    pub fn greedy(&self, state: &EncodedState) -> Result<usize> {
        let (logits, _) = self.net.forward(&self.policy, state)?;
        Ok(masked_argmax(&logits, logits.len()))
    }

    /// Samples an action from the masked policy.
    pub fn sample<R: Rng + ?Sized>(&self, state: &EncodedState, rng: &mut R) -> Result<usize> {
        let (logits, _) = self.net.forward(&self.policy, state)?;
        let pi = masked_softmax(&logits, logits.len())?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, p) in pi.probs.iter().take(logits.len()).enumerate() {
            acc += p;
            if u < acc {
                return Ok(a);
            }
        }
        Ok(logits.len() - 1)
    }

    pub fn soft_update_targets(&mut self, beta: f64) -> Result<()> {
        soft_update(&self.q1, &mut self.q1_target, beta)?;
        soft_update(&self.q2, &mut self.q2_target, beta)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let sets = [&self.policy, &self.q1, &self.q2, &self.q1_target, &self.q2_target];
        Checkpoint {
            spec: self.spec().clone(),
            alpha: self.alpha,
            sets: SET_NAMES
                .iter()
                .zip(sets)
                .map(|(n, p)| (n.to_string(), p.clone()))
                .collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let net = Network::new(ck.spec.clone())?;
        let get = |name: &str| {
            ck.get(name)
                .cloned()
                .ok_or_else(|| Error::Format(format!("checkpoint lacks parameter set {name}")))
        };
        Ok(Self {
            policy: get("policy")?,
            q1: get("q1")?,
            q2: get("q2")?,
            q1_target: get("q1_target")?,
            q2_target: get("q2_target")?,
            alpha: ck.alpha,
            net,
        })
    }
}

/// Adam state for the three trained parameter sets.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub policy: Adam,
    pub q1: Adam,
    pub q2: Adam,
}

impl Optimizers {
    pub fn for_agent(agent: &Agent) -> Self {
        let n = agent.net.num_params();
        Self {
            policy: Adam::new(n),
            q1: Adam::new(n),
            q2: Adam::new(n),
        }
    }
}
