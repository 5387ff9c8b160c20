//! Closed-form pieces of the system model: load balancing, task sizes,
//! link rates, delays and energies.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Mean task size that makes aggregate demand equal aggregate compute:
/// `dt * sum(f_e / eta) = lambda_p * mean * users`.
pub fn balanced_mean_size(dt: f64, freqs_hz: &[f64], eta: f64, lambda_p: f64, num_users: usize) -> Result<f64> {
    ensure_positive("dt", dt)?;
    ensure_positive("eta", eta)?;
    ensure_positive("lambda_p", lambda_p)?;
    if num_users == 0 {
        return Err(Error::Domain("num_users must be positive".into()));
    }
    if freqs_hz.is_empty() {
        return Err(Error::Domain("at least one server frequency is required".into()));
    }
    for &f in freqs_hz {
        ensure_positive("cpu frequency", f)?;
    }
    let throughput: f64 = freqs_hz.iter().map(|f| f / eta).sum();
    Ok(dt * throughput / (lambda_p * num_users as f64))
}

/// I.i.d. exponential task sizes with the given mean.
pub fn draw_task_sizes<R: Rng + ?Sized>(rng: &mut R, mean_bits: f64, count: usize) -> Result<Vec<f64>> {
    ensure_positive("mean task size", mean_bits)?;
    let exp = Exp::new(1.0 / mean_bits).map_err(|e| Error::Domain(e.to_string()))?;
    Ok((0..count).map(|_| exp.sample(rng)).collect())
}

/// Radio parameters of the uplink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub bandwidth_hz: f64,
    pub offload_power_w: f64,
    pub noise_power_w: f64,
    pub pathloss_exponent: f64,
    /// Mean power gain at 1 m (G0).
    pub reference_gain: f64,
    /// Mean of the exponential (Rayleigh power) fading factor.
    pub fading_mean_gain: f64,
    pub cloud_distance_m: [f64; 2],
    pub edge_distance_m: [f64; 2],
    pub interference_enabled: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 16.6e6,
            offload_power_w: 10e-3,
            noise_power_w: 1e-13,
            pathloss_exponent: 3.0,
            reference_gain: 100.0,
            fading_mean_gain: 1.0,
            cloud_distance_m: [1000.0, 2000.0],
            edge_distance_m: [50.0, 500.0],
            interference_enabled: false,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("bandwidth_hz", self.bandwidth_hz)?;
        ensure_positive("offload_power_w", self.offload_power_w)?;
        ensure_positive("noise_power_w", self.noise_power_w)?;
        ensure_positive("pathloss_exponent", self.pathloss_exponent)?;
        ensure_positive("reference_gain", self.reference_gain)?;
        ensure_positive("fading_mean_gain", self.fading_mean_gain)?;
        for (name, [lo, hi]) in [
            ("cloud_distance_m", self.cloud_distance_m),
            ("edge_distance_m", self.edge_distance_m),
        ] {
            ensure_positive(name, lo)?;
            if hi < lo {
                return Err(Error::Domain(format!("{name}: min {lo} exceeds max {hi}")));
            }
        }
        Ok(())
    }

    /// Mean power gain at distance `d` metres (fading excluded).
    pub fn mean_gain(&self, distance_m: f64) -> f64 {
        self.reference_gain * distance_m.powf(-self.pathloss_exponent)
    }

    /// Draws one block-fading realisation of `|h|^2` at distance `d`.
    pub fn draw_gain<R: Rng + ?Sized>(&self, rng: &mut R, distance_m: f64) -> f64 {
        let fading = Exp::new(1.0 / self.fading_mean_gain).expect("validated fading mean");
        self.mean_gain(distance_m) * fading.sample(rng)
    }

    /// Achievable rate `W log2(1 + p |h|^2 / (sigma^2 + I))` in bits/s.
    ///
    /// `interference_w` is ignored unless interference is enabled.
    pub fn data_rate(&self, gain: f64, interference_w: f64) -> f64 {
        debug_assert!(gain >= 0.0);
        let i = if self.interference_enabled { interference_w } else { 0.0 };
        let sinr = self.offload_power_w * gain / (self.noise_power_w + i);
        self.bandwidth_hz * (1.0 + sinr).log2()
    }
}

/// Uplink transfer time of `size_bits` at `rate` bits/s.
pub fn offload_delay(size_bits: f64, rate_bps: f64) -> Result<f64> {
    if rate_bps.is_nan() || rate_bps <= 0.0 {
        return Err(Error::Domain(format!("server unreachable: rate {rate_bps} bits/s")));
    }
    Ok(size_bits / rate_bps)
}

/// Constants of the energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    /// CPU cycles per bit (eta).
    pub cycles_per_bit: f64,
    /// Effective switched capacitance per cycle (kappa).
    pub capacitance_coeff: f64,
    pub offload_power_w: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            cycles_per_bit: 1e3,
            capacitance_coeff: 5e-31,
            offload_power_w: 10e-3,
        }
    }
}

/// Offloading and execution energy of one task, in joules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskEnergy {
    pub offload_j: f64,
    pub exec_j: f64,
}

impl TaskEnergy {
    pub fn total(&self) -> f64 {
        self.offload_j + self.exec_j
    }
}

/// `E_off = p_off * T_off`, `E_exe = kappa * eta * f^2 * L`.
pub fn task_energy(size_bits: f64, offload_delay_s: f64, model: &EnergyModel, freq_hz: f64) -> TaskEnergy {
    debug_assert!(offload_delay_s >= 0.0);
    TaskEnergy {
        offload_j: model.offload_power_w * offload_delay_s,
        exec_j: model.capacitance_coeff * model.cycles_per_bit * freq_hz * freq_hz * size_bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn balanced_size_operating_points() {
        let mut freqs = vec![4e9];
        freqs.extend([2e9; 6]);
        let l = balanced_mean_size(1.0, &freqs, 1e3, 0.1, 10).unwrap();
        assert!((l - 16e6).abs() < 1e-6);
        assert_eq!(balanced_mean_size(1.0, &[1e3], 1e3, 1.0, 1).unwrap(), 1.0);
        freqs.pop();
        let l = balanced_mean_size(1.0, &freqs, 1e3, 0.1, 10).unwrap();
        assert!((l - 14e6).abs() < 1e-6);
        assert!(balanced_mean_size(0.0, &freqs, 1e3, 0.1, 10).is_err());
        assert!(balanced_mean_size(1.0, &[-1.0], 1e3, 0.1, 10).is_err());
        assert!(balanced_mean_size(1.0, &freqs, 1e3, 0.1, 0).is_err());
    }

    #[test]
    fn task_sizes_are_exponential_and_seeded() {
        let mut r = rng::stream(11, 0);
        let xs = draw_task_sizes(&mut r, 16e6, 10_000).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean / 16e6 - 1.0).abs() < 0.03, "mean {mean}");
        assert!(draw_task_sizes(&mut r, 16e6, 0).unwrap().is_empty());
        let a = draw_task_sizes(&mut rng::stream(5, 3), 1e6, 50).unwrap();
        let b = draw_task_sizes(&mut rng::stream(5, 3), 1e6, 50).unwrap();
        assert_eq!(a, b);
        assert!(draw_task_sizes(&mut r, 0.0, 1).is_err());
    }

    #[test]
    fn data_rate_examples() {
        let ch = ChannelParams {
            bandwidth_hz: 16.6e6,
            offload_power_w: 1.0,
            noise_power_w: 1.0,
            ..ChannelParams::default()
        };
        assert!((ch.data_rate(1.0, 0.0) - 16.6e6).abs() < 1e-6);
        assert_eq!(ch.data_rate(0.0, 0.0), 0.0);
        assert!((ch.data_rate(3.0, 0.0) - 33.2e6).abs() < 1e-6);
        // interference is ignored unless enabled
        assert!((ch.data_rate(3.0, 2.0) - 33.2e6).abs() < 1e-6);
        let ich = ChannelParams {
            interference_enabled: true,
            ..ch
        };
        assert!((ich.data_rate(3.0, 2.0) - 16.6e6).abs() < 1e-6);
    }

    #[test]
    fn energy_examples() {
        let m = EnergyModel::default();
        let e = task_energy(16e6, 0.0, &m, 2e9);
        assert!((e.exec_j - 0.032).abs() < 1e-15);
        assert_eq!(e.offload_j, 0.0);
        let e = task_energy(16e6, 0.1, &m, 2e9);
        assert!((e.offload_j - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn offload_delay_examples() {
        assert_eq!(offload_delay(16.6e6, 16.6e6).unwrap(), 1.0);
        assert_eq!(offload_delay(0.0, 5.0).unwrap(), 0.0);
        assert_eq!(offload_delay(8e6, 16e6).unwrap(), 0.5);
        assert!(offload_delay(1.0, 0.0).is_err());
    }
}
