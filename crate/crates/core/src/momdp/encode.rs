//! Fixed-length observation: one information vector per server slot
//! (live or dummy) plus the preference.

use serde::{Deserialize, Serialize};

use super::context::Context;
use crate::error::{Error, Result};
use crate::sim::SimWorld;

/// Feature positions inside a server information vector.
pub mod feature {
    pub const TASK_SIZE: usize = 0;
    pub const RATE: usize = 1;
    pub const FREQ: usize = 2;
    pub const RESIDENT: usize = 3;
    pub const NUM_EDGES: usize = 4;
    /// First histogram bin.
    pub const HISTOGRAM: usize = 5;
}

/// Value written into every element of a dummy server vector.
pub const PAD: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    /// Largest supported edge count; observations have `max_edges + 1` slots.
    pub max_edges: usize,
    /// Number of residual-size histogram bins (N).
    pub hist_bins: usize,
}

impl EncodingConfig {
    pub fn new(max_edges: usize, hist_bins: usize) -> Result<Self> {
        if max_edges == 0 || hist_bins == 0 {
            return Err(Error::Domain("max_edges and hist_bins must be positive".into()));
        }
        Ok(Self { max_edges, hist_bins })
    }

    pub fn slots(&self) -> usize {
        self.max_edges + 1
    }

    /// Length of one server information vector.
    pub fn server_width(&self) -> usize {
        feature::HISTOGRAM + self.hist_bins
    }
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            max_edges: 8,
            hist_bins: 30,
        }
    }
}

/// Residual-size histogram with 1 Mbit bins; the last bin is open-ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bins: Vec<u32>,
}

impl Histogram {
    pub const BIN_WIDTH_BITS: f64 = 1e6;

    pub fn from_residuals(residuals_bits: impl IntoIterator<Item = f64>, n_bins: usize) -> Self {
        let mut bins = vec![0u32; n_bins];
        for r in residuals_bits {
            let idx = ((r / Self::BIN_WIDTH_BITS).floor().max(0.0) as usize).min(n_bins - 1);
            bins[idx] += 1;
        }
        Self { bins }
    }

    pub fn mass(&self) -> u32 {
        self.bins.iter().sum()
    }
}

/// Agent observation at one decision step.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedState {
    pub config: EncodingConfig,
    /// Live edge count `E`; slots `0..=E` are real.
    pub num_edges: usize,
    /// Row-major `(max_edges + 1) x server_width`.
    pub servers: Vec<f64>,
    pub preference: [f64; 2],
}

impl EncodedState {
    pub fn server(&self, slot: usize) -> &[f64] {
        let w = self.config.server_width();
        &self.servers[slot * w..(slot + 1) * w]
    }

    pub fn num_slots(&self) -> usize {
        self.config.slots()
    }

    /// Number of selectable actions (`E + 1`).
    pub fn num_valid(&self) -> usize {
        self.num_edges + 1
    }

    pub fn is_valid_action(&self, a: usize) -> bool {
        a <= self.num_edges
    }

    /// Length of the flat little-endian record produced by [`Self::write_le`].
    pub fn record_len(config: &EncodingConfig) -> usize {
        // num_edges + servers + preference
        1 + config.slots() * config.server_width() + 2
    }

    pub fn write_le(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.num_edges as f64).to_le_bytes());
        for v in self.servers.iter().chain(&self.preference) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn read_le(config: EncodingConfig, bytes: &[u8]) -> Result<Self> {
        let n = Self::record_len(&config);
        if bytes.len() != n * 8 {
            return Err(Error::Format(format!(
                "state record needs {} bytes, got {}",
                n * 8,
                bytes.len()
            )));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let num_edges = vals[0] as usize;
        if num_edges == 0 || num_edges > config.max_edges {
            return Err(Error::Format(format!(
                "edge count {num_edges} outside 1..={}",
                config.max_edges
            )));
        }
        Ok(Self {
            config,
            num_edges,
            servers: vals[1..n - 2].to_vec(),
            preference: [vals[n - 2], vals[n - 1]],
        })
    }
}

/// Encodes the current decision point.
///
/// Executors in `world` are already exact at the start of the step. When no
/// task is waiting (idle step or terminal state) the task size and rates are 0.
pub fn encode_state(world: &SimWorld, context: &Context, config: &EncodingConfig) -> Result<EncodedState> {
    let e = world.num_edges();
    if e != context.num_edges {
        return Err(Error::Logic(format!(
            "world has {e} edges but context declares {}",
            context.num_edges
        )));
    }
    if e > config.max_edges {
        return Err(Error::Domain(format!(
            "{e} edges exceed the encoder maximum {}",
            config.max_edges
        )));
    }
    let w = config.server_width();
    let mut servers = vec![PAD; config.slots() * w];
    let task = world.current_task();
    for slot in 0..=e {
        let row = &mut servers[slot * w..(slot + 1) * w];
        let exec = world.executor(slot);
        row[feature::TASK_SIZE] = task.map_or(0.0, |t| t.spec.size_bits);
        row[feature::RATE] = task.map_or(0.0, |t| t.rates[slot]);
        row[feature::FREQ] = world.freq(slot);
        row[feature::RESIDENT] = exec.len() as f64;
        row[feature::NUM_EDGES] = e as f64;
        let hist = Histogram::from_residuals(exec.entries().iter().map(|x| x.residual_bits), config.hist_bins);
        for (dst, &c) in row[feature::HISTOGRAM..].iter_mut().zip(&hist.bins) {
            *dst = f64::from(c);
        }
    }
    Ok(EncodedState {
        config: *config,
        num_edges: e,
        servers,
        preference: context.preference.as_array(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_binning() {
        let h = Histogram::from_residuals([0.5e6, 1.2e6, 7.3e6], 8);
        assert_eq!(h.bins, vec![1, 1, 0, 0, 0, 0, 0, 1]);
        let h = Histogram::from_residuals([42e6, 7.0e6, 6.999e6], 8);
        assert_eq!(h.bins, vec![0, 0, 0, 0, 0, 0, 1, 2]);
        assert_eq!(Histogram::from_residuals(std::iter::empty(), 4).bins, vec![0; 4]);
        assert_eq!(h.mass(), 3);
    }
}
