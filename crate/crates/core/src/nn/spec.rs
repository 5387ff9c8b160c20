use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momdp::{feature, EncodingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Shape of a masked per-server network.
///
/// Every live server vector goes through a shared encoder; encodings are
/// pooled (mean and max over live servers) and joined with the preference in
/// the trunk; a shared head maps each server's encoding and the trunk output
/// to a delay score and an energy score, and the server's output is their
/// preference-weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub per_server_input_dim: usize,
    pub max_edges: usize,
    pub encoder_widths: Vec<usize>,
    pub trunk_widths: Vec<usize>,
    /// Hidden widths of the per-server head; a final two-unit layer is implied.
    pub head_widths: Vec<usize>,
    pub activation: Activation,
    /// Multiplied into each live server feature before the encoder.
    pub input_scale: Vec<f64>,
}

impl NetworkSpec {
    /// Default architecture for an encoding: encoder [64, 64], trunk [128, 128], head [64].
    pub fn for_encoding(enc: &EncodingConfig) -> Self {
        Self::with_widths(enc, vec![64, 64], vec![128, 128], vec![64])
    }

    pub fn with_widths(
        enc: &EncodingConfig,
        encoder_widths: Vec<usize>,
        trunk_widths: Vec<usize>,
        head_widths: Vec<usize>,
    ) -> Self {
        Self {
            per_server_input_dim: enc.server_width(),
            max_edges: enc.max_edges,
            encoder_widths,
            trunk_widths,
            head_widths,
            activation: Activation::Relu,
            input_scale: default_input_scale(enc.hist_bins),
        }
    }

    /// The state encoding this network consumes.
    pub fn encoding(&self) -> EncodingConfig {
        EncodingConfig {
            max_edges: self.max_edges,
            hist_bins: self.per_server_input_dim.saturating_sub(feature::HISTOGRAM),
        }
    }

    /// Length of the action head (`E_max + 1`).
    pub fn head_dim(&self) -> usize {
        self.max_edges + 1
    }

    pub fn validate(&self) -> Result<()> {
        let widths = self
            .encoder_widths
            .iter()
            .chain(&self.trunk_widths)
            .chain(&self.head_widths);
        if self.encoder_widths.is_empty() || self.trunk_widths.is_empty() {
            return Err(Error::Shape("encoder and trunk need at least one layer".into()));
        }
        if widths.clone().any(|&w| w == 0) || self.per_server_input_dim == 0 {
            return Err(Error::Shape("all widths must be positive".into()));
        }
        if self.input_scale.len() != self.per_server_input_dim {
            return Err(Error::Shape(format!(
                "input_scale has {} entries, expected {}",
                self.input_scale.len(),
                self.per_server_input_dim
            )));
        }
        Ok(())
    }
}

/// Puts task size, rate and frequency on O(1) scales (10 Mbit, 100 Mbit/s,
/// GHz) and counts on tenths.
pub fn default_input_scale(hist_bins: usize) -> Vec<f64> {
    let mut s = vec![0.0; feature::HISTOGRAM + hist_bins];
    s[feature::TASK_SIZE] = 1e-7;
    s[feature::RATE] = 1e-8;
    s[feature::FREQ] = 1e-9;
    s[feature::RESIDENT] = 0.1;
    s[feature::NUM_EDGES] = 0.1;
    for v in &mut s[feature::HISTOGRAM..] {
        *v = 0.5;
    }
    s
}
