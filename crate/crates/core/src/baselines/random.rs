use rand::Rng;

use crate::error::{Error, Result};
use crate::gmorl::Scheduler;
use crate::momdp::MecEnv;
use crate::rng::SimRng;

/// Sends a task to the cloud with probability `p`, otherwise to a uniformly
/// chosen edge server.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    p_cloud: f64,
    rng: SimRng,
}

impl RandomPolicy {
    pub fn new(p_cloud: f64, rng: SimRng) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_cloud) {
            return Err(Error::Domain(format!(
                "cloud probability must be in [0, 1], got {p_cloud}"
            )));
        }
        Ok(Self { p_cloud, rng })
    }

    pub fn p_cloud(&self) -> f64 {
        self.p_cloud
    }

    pub fn draw(&mut self, num_edges: usize) -> usize {
        if num_edges == 0 || self.rng.random::<f64>() < self.p_cloud {
            0
        } else {
            self.rng.random_range(1..=num_edges)
        }
    }
}

impl Scheduler for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn select(&mut self, env: &MecEnv) -> Result<usize> {
        Ok(self.draw(env.context().num_edges))
    }
}

/// `n` evenly spaced cloud probabilities from 0 to 1.
pub fn p_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain("p grid needs at least two points".into()));
    }
    Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn extremes() {
        let mut p = RandomPolicy::new(1.0, rng::stream(0, 0)).unwrap();
        assert!((0..100).all(|_| p.draw(3) == 0));
        let mut p = RandomPolicy::new(0.0, rng::stream(0, 0)).unwrap();
        assert!((0..100).all(|_| p.draw(1) == 1));
        assert!(RandomPolicy::new(1.5, rng::stream(0, 0)).is_err());
    }

    #[test]
    fn empirical_frequencies_match_within_three_sigma() {
        let n = 100_000;
        let mut p = RandomPolicy::new(0.5, rng::stream(1, 0)).unwrap();
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[p.draw(2)] += 1;
        }
        for (c, q) in counts.iter().zip([0.5, 0.25, 0.25]) {
            let sigma = (n as f64 * q * (1.0 - q)).sqrt();
            assert!((*c as f64 - n as f64 * q).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn grid_spacing() {
        assert_eq!(p_grid(11).unwrap().len(), 11);
        assert_eq!(p_grid(3).unwrap(), vec![0.0, 0.5, 1.0]);
    }
}
