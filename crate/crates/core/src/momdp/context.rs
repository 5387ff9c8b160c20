use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convex weights over (delay, energy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    pub time: f64,
    pub energy: f64,
}

impl Preference {
    pub fn new(time: f64, energy: f64) -> Result<Self> {
        if !(time >= 0.0 && energy >= 0.0) || ((time + energy) - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "preference ({time}, {energy}) must be nonnegative and sum to 1"
            )));
        }
        Ok(Self { time, energy })
    }

    /// `(w, 1 - w)`.
    pub fn from_time_weight(w: f64) -> Result<Self> {
        Self::new(w, 1.0 - w)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.time, self.energy]
    }
}

/// `n` evenly spaced preferences: the i-th (1-based) is
/// `((i-1)/(n-1), 1 - (i-1)/(n-1))`.
pub fn preference_grid(n: usize) -> Result<Vec<Preference>> {
    if n < 2 {
        return Err(Error::Domain(format!("preference grid needs n >= 2, got {n}")));
    }
    Ok((0..n)
        .map(|i| {
            let w = i as f64 / (n - 1) as f64;
            Preference {
                time: w,
                energy: 1.0 - w,
            }
        })
        .collect())
}

/// Identity of one sampled MEC system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub preference: Preference,
    pub num_edges: usize,
    /// `f_0..f_E` in Hz; the cloud comes first.
    pub freqs_hz: Vec<f64>,
}

impl Context {
    pub fn new(preference: Preference, freqs_hz: Vec<f64>) -> Result<Self> {
        if freqs_hz.len() < 2 {
            return Err(Error::Domain(
                "a context needs a cloud and at least one edge server".into(),
            ));
        }
        Ok(Self {
            preference,
            num_edges: freqs_hz.len() - 1,
            freqs_hz,
        })
    }

    /// Cloud at `f0`, `num_edges` identical edges at `fe`.
    pub fn uniform(preference: Preference, num_edges: usize, f0: f64, fe: f64) -> Result<Self> {
        let mut freqs = vec![f0];
        freqs.extend(std::iter::repeat_n(fe, num_edges));
        Self::new(preference, freqs)
    }
}

/// Ranges that contexts are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSpace {
    pub preferences: Vec<Preference>,
    pub edge_counts: Vec<usize>,
    pub cloud_freq_hz: [f64; 2],
    pub edge_freq_hz: [f64; 2],
}

impl ContextSpace {
    /// The training space: 64 preferences, 1..=8 edges, f0 in [3.5, 4.5] GHz,
    /// edges in [1.75, 2.25] GHz.
    pub fn training() -> Self {
        Self {
            preferences: preference_grid(64).expect("n >= 2"),
            edge_counts: (1..=8).collect(),
            cloud_freq_hz: [3.5e9, 4.5e9],
            edge_freq_hz: [1.75e9, 2.25e9],
        }
    }

    /// The wider testing space: 101 preferences, 1..=10 edges, f0 in [3, 5] GHz,
    /// edges in [1.5, 2.5] GHz.
    pub fn testing() -> Self {
        Self {
            preferences: preference_grid(101).expect("n >= 2"),
            edge_counts: (1..=10).collect(),
            cloud_freq_hz: [3.0e9, 5.0e9],
            edge_freq_hz: [1.5e9, 2.5e9],
        }
    }

    /// A space containing exactly one system (and any preference set).
    pub fn singleton(preferences: Vec<Preference>, num_edges: usize, f0: f64, fe: f64) -> Self {
        Self {
            preferences,
            edge_counts: vec![num_edges],
            cloud_freq_hz: [f0, f0],
            edge_freq_hz: [fe, fe],
        }
    }

    pub fn max_edges(&self) -> usize {
        self.edge_counts.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.preferences.is_empty() || self.edge_counts.is_empty() {
            return Err(Error::Domain("context space must be nonempty".into()));
        }
        if self.edge_counts.contains(&0) {
            return Err(Error::Domain("edge counts must be at least 1".into()));
        }
        for (name, [lo, hi]) in [
            ("cloud_freq_hz", self.cloud_freq_hz),
            ("edge_freq_hz", self.edge_freq_hz),
        ] {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::Domain(format!("{name}: invalid range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Draws `E`, then `f_0`, then each `f_e'`; the preference is taken by index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, preference_index: usize) -> Result<Context> {
        let preference = *self.preferences.get(preference_index).ok_or_else(|| {
            Error::Domain(format!(
                "preference index {preference_index} out of range ({} preferences)",
                self.preferences.len()
            ))
        })?;
        let num_edges = self.edge_counts[rng.random_range(0..self.edge_counts.len())];
        let uniform = |rng: &mut R, [lo, hi]: [f64; 2]| if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let mut freqs_hz = Vec::with_capacity(num_edges + 1);
        freqs_hz.push(uniform(rng, self.cloud_freq_hz));
        for _ in 0..num_edges {
            freqs_hz.push(uniform(rng, self.edge_freq_hz));
        }
        Ok(Context {
            preference,
            num_edges,
            freqs_hz,
        })
    }
}
