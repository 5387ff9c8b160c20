use rand::Rng;

use super::params::{NamedSlice, ParamSet};
use super::spec::{Activation, NetworkSpec};
use crate::error::{Error, Result};
use crate::momdp::EncodedState;

/// Q-value written into masked (dummy) action slots.
pub const MASKED_Q: f64 = -1e9;

#[derive(Debug, Clone)]
struct Dense {
    weight: usize,
    bias: usize,
    n_in: usize,
    n_out: usize,
}

#[derive(Debug, Clone)]
struct Mlp {
    layers: Vec<Dense>,
    act: Activation,
    linear_last: bool,
}

impl Mlp {
    fn build(
        prefix: &str,
        n_in: usize,
        widths: &[usize],
        act: Activation,
        linear_last: bool,
        slices: &mut Vec<NamedSlice>,
        offset: &mut usize,
    ) -> Self {
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = n_in;
        for (i, &w) in widths.iter().enumerate() {
            let weight = *offset;
            slices.push(NamedSlice {
                name: format!("{prefix}.{i}.weight"),
                offset: weight,
                len: w * fan_in,
            });
            *offset += w * fan_in;
            let bias = *offset;
            slices.push(NamedSlice {
                name: format!("{prefix}.{i}.bias"),
                offset: bias,
                len: w,
            });
            *offset += w;
            layers.push(Dense {
                weight,
                bias,
                n_in: fan_in,
                n_out: w,
            });
            fan_in = w;
        }
        Self {
            layers,
            act,
            linear_last,
        }
    }

    fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    fn activated(&self, layer: usize) -> bool {
        !(self.linear_last && layer + 1 == self.layers.len())
    }

    /// Returns every layer's output, input first.
    fn forward(&self, p: &[f64], x: Vec<f64>) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x);
        for (k, l) in self.layers.iter().enumerate() {
            let input = acts.last().expect("input pushed");
            let w = &p[l.weight..l.weight + l.n_in * l.n_out];
            let b = &p[l.bias..l.bias + l.n_out];
            let act = self.activated(k).then_some(self.act);
            let out: Vec<f64> = w
                .chunks_exact(l.n_in)
                .zip(b)
                .map(|(row, &bias)| {
                    let s = row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + bias;
                    act.map_or(s, |a| a.apply(s))
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Accumulates parameter gradients into `g` and returns the gradient
    /// with respect to the input.
    fn backward(&self, p: &[f64], acts: &[Vec<f64>], mut delta: Vec<f64>, g: &mut [f64]) -> Vec<f64> {
        for (k, l) in self.layers.iter().enumerate().rev() {
            if self.activated(k) {
                for (d, &y) in delta.iter_mut().zip(&acts[k + 1]) {
                    *d *= self.act.grad_from_output(y);
                }
            }
            let input = &acts[k];
            let mut d_in = vec![0.0; l.n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = l.weight + o * l.n_in;
                for (i, (&x, di)) in input.iter().zip(d_in.iter_mut()).enumerate() {
                    g[row + i] += d * x;
                    *di += d * p[row + i];
                }
                g[l.bias + o] += d;
            }
            delta = d_in;
        }
        delta
    }

    fn init<R: Rng + ?Sized>(&self, rng: &mut R, values: &mut [f64], zero_last: bool) {
        for (k, l) in self.layers.iter().enumerate() {
            let last = k + 1 == self.layers.len();
            let bound = 1.0 / (l.n_in as f64).sqrt();
            for v in &mut values[l.weight..l.weight + l.n_in * l.n_out] {
                *v = if zero_last && last {
                    0.0
                } else {
                    rng.random_range(-bound..bound)
                };
            }
            for v in &mut values[l.bias..l.bias + l.n_out] {
                *v = if zero_last && last {
                    0.0
                } else {
                    rng.random_range(-bound..bound)
                };
            }
        }
    }
}

/// Cached activations of one forward pass; consumed by [`Network::backward`].
#[derive(Debug)]
pub struct ForwardTrace {
    live: usize,
    encoder: Vec<Vec<Vec<f64>>>,
    /// Which live server supplied each max-pooled coordinate.
    argmax: Vec<usize>,
    trunk: Vec<Vec<f64>>,
    head: Vec<Vec<Vec<f64>>>,
    preference: [f64; 2],
}

/// Weight-shared masked network over server slots.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    encoder: Mlp,
    trunk: Mlp,
    head: Mlp,
    slices: Vec<NamedSlice>,
    n_params: usize,
}

impl Network {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut slices = Vec::new();
        let mut offset = 0;
        let act = spec.activation;
        let encoder = Mlp::build(
            "encoder",
            spec.per_server_input_dim,
            &spec.encoder_widths,
            act,
            false,
            &mut slices,
            &mut offset,
        );
        let enc_out = encoder.out_dim();
        let trunk = Mlp::build(
            "trunk",
            2 * enc_out + 2,
            &spec.trunk_widths,
            act,
            false,
            &mut slices,
            &mut offset,
        );
        let mut head_widths = spec.head_widths.clone();
        head_widths.push(2);
        let head = Mlp::build(
            "head",
            enc_out + trunk.out_dim(),
            &head_widths,
            act,
            true,
            &mut slices,
            &mut offset,
        );
        Ok(Self {
            spec,
            encoder,
            trunk,
            head,
            slices,
            n_params: offset,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn num_params(&self) -> usize {
        self.n_params
    }

    /// Fan-in uniform initialisation; `zero_head` zeroes the final scoring
    /// layer so the initial policy is uniform over live servers.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R, zero_head: bool) -> ParamSet {
        let mut values = vec![0.0; self.n_params];
        self.encoder.init(rng, &mut values, false);
        self.trunk.init(rng, &mut values, false);
        self.head.init(rng, &mut values, zero_head);
        ParamSet {
            values,
            slices: self.slices.clone(),
        }
    }

    pub fn zero_grad(&self) -> ParamSet {
        ParamSet {
            values: vec![0.0; self.n_params],
            slices: self.slices.clone(),
        }
    }

    fn check_state(&self, params: &ParamSet, state: &EncodedState) -> Result<()> {
        if params.values.len() != self.n_params {
            return Err(Error::Shape(format!(
                "network expects {} parameters, got {}",
                self.n_params,
                params.values.len()
            )));
        }
        if state.config.max_edges != self.spec.max_edges
            || state.config.server_width() != self.spec.per_server_input_dim
        {
            return Err(Error::Incompatible(format!(
                "state encoded for E_max={} width={}, network built for E_max={} width={}",
                state.config.max_edges,
                state.config.server_width(),
                self.spec.max_edges,
                self.spec.per_server_input_dim
            )));
        }
        Ok(())
    }

    /// Raw head outputs for live slots (`E + 1` values) plus the trace.
    pub fn forward(&self, params: &ParamSet, state: &EncodedState) -> Result<(Vec<f64>, ForwardTrace)> {
        self.check_state(params, state)?;
        let p = &params.values;
        let live = state.num_valid();
        let encoder: Vec<Vec<Vec<f64>>> = (0..live)
            .map(|e| {
                let x = state
                    .server(e)
                    .iter()
                    .zip(&self.spec.input_scale)
                    .map(|(v, s)| v * s)
                    .collect();
                self.encoder.forward(p, x)
            })
            .collect();
        let enc_out = self.encoder.out_dim();
        let mut mean = vec![0.0; enc_out];
        let mut max = vec![f64::NEG_INFINITY; enc_out];
        let mut argmax = vec![0; enc_out];
        for (e, acts) in encoder.iter().enumerate() {
            let h = acts.last().expect("encoder output");
            for k in 0..enc_out {
                mean[k] += h[k] / live as f64;
                if h[k] > max[k] {
                    max[k] = h[k];
                    argmax[k] = e;
                }
            }
        }
        let mut trunk_in = mean;
        trunk_in.extend_from_slice(&max);
        trunk_in.extend_from_slice(&state.preference);
        let trunk = self.trunk.forward(p, trunk_in);
        let z = trunk.last().expect("trunk output");
        let head: Vec<Vec<Vec<f64>>> = encoder
            .iter()
            .map(|acts| {
                let mut x = acts.last().expect("encoder output").clone();
                x.extend_from_slice(z);
                self.head.forward(p, x)
            })
            .collect();
        let [w_t, w_e] = state.preference;
        let out = head
            .iter()
            .map(|a| {
                let y = a.last().expect("head output");
                w_t * y[0] + w_e * y[1]
            })
            .collect();
        Ok((
            out,
            ForwardTrace {
                live,
                encoder,
                argmax,
                trunk,
                head,
                preference: state.preference,
            },
        ))
    }

    /// Reverse pass: accumulates `d loss / d params` into `grads` given
    /// `out_grad[e] = d loss / d output[e]` for live slots.
    pub fn backward_into(&self, params: &ParamSet, trace: ForwardTrace, out_grad: &[f64], grads: &mut ParamSet) {
        let p = &params.values;
        let g = &mut grads.values;
        let enc_out = self.encoder.out_dim();
        let live = trace.live;
        let mut d_enc = vec![vec![0.0; enc_out]; live];
        let mut d_z = vec![0.0; self.trunk.out_dim()];
        for (e, acts) in trace.head.iter().enumerate() {
            let d = out_grad.get(e).copied().unwrap_or(0.0);
            if d == 0.0 {
                continue;
            }
            let [w_t, w_e] = trace.preference;
            let d_in = self.head.backward(p, acts, vec![d * w_t, d * w_e], g);
            for (a, b) in d_enc[e].iter_mut().zip(&d_in[..enc_out]) {
                *a += b;
            }
            for (a, b) in d_z.iter_mut().zip(&d_in[enc_out..]) {
                *a += b;
            }
        }
        if d_z.iter().any(|&v| v != 0.0) {
            let d_trunk_in = self.trunk.backward(p, &trace.trunk, d_z, g);
            for k in 0..enc_out {
                let dm = d_trunk_in[k] / live as f64;
                for d in d_enc.iter_mut() {
                    d[k] += dm;
                }
                d_enc[trace.argmax[k]][k] += d_trunk_in[enc_out + k];
            }
        }
        for (acts, d) in trace.encoder.iter().zip(d_enc) {
            if d.iter().any(|&v| v != 0.0) {
                self.encoder.backward(p, acts, d, g);
            }
        }
    }

    pub fn backward(&self, params: &ParamSet, trace: ForwardTrace, out_grad: &[f64]) -> ParamSet {
        let mut grads = self.zero_grad();
        self.backward_into(params, trace, out_grad, &mut grads);
        grads
    }

    /// Action probabilities over all `E_max + 1` slots; dummy slots are exactly 0.
    pub fn forward_policy(&self, params: &ParamSet, state: &EncodedState) -> Result<Vec<f64>> {
        let (logits, _) = self.forward(params, state)?;
        Ok(masked_softmax(&logits, self.spec.head_dim())?.probs)
    }

    /// Q-values over all slots; dummy slots hold [`MASKED_Q`].
    pub fn forward_q(&self, params: &ParamSet, state: &EncodedState) -> Result<Vec<f64>> {
        let (q, _) = self.forward(params, state)?;
        Ok(pad_q(&q, self.spec.head_dim()))
    }
}

/// Pads live Q-values with [`MASKED_Q`] to `dim` entries.
pub fn pad_q(live: &[f64], dim: usize) -> Vec<f64> {
    let mut q = vec![MASKED_Q; dim];
    q[..live.len()].copy_from_slice(live);
    q
}

/// Softmax restricted to the first `live.len()` of `dim` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSoftmax {
    pub probs: Vec<f64>,
    /// Log-probabilities for live slots; masked slots hold `-inf`.
    pub log_probs: Vec<f64>,
}

/// Masked slots act as `-inf` logits; `live` are the pre-activations of the
/// valid actions, which occupy the leading slots.
pub fn masked_softmax(live: &[f64], dim: usize) -> Result<MaskedSoftmax> {
    if live.is_empty() {
        return Err(Error::EmptyMask);
    }
    let m = live.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = live.iter().map(|&l| (l - m).exp()).sum();
    let log_z = z.ln();
    let mut probs = vec![0.0; dim];
    let mut log_probs = vec![f64::NEG_INFINITY; dim];
    for (i, &l) in live.iter().enumerate() {
        log_probs[i] = l - m - log_z;
        probs[i] = (l - m).exp() / z;
    }
    Ok(MaskedSoftmax { probs, log_probs })
}

/// Index of the largest live entry; ties resolve to the lowest index.
pub fn masked_argmax(values: &[f64], num_valid: usize) -> usize {
    let mut best = 0;
    for i in 1..num_valid.min(values.len()) {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::momdp::EncodingConfig;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn random_state<R: Rng>(r: &mut R, enc: EncodingConfig, e: usize) -> EncodedState {
        crate::checks::synthetic_state(r, enc, e)
    }

    fn small_net(enc: &EncodingConfig, act: Activation) -> Network {
        let mut spec = NetworkSpec::with_widths(enc, vec![6, 5], vec![7], vec![4]);
        spec.activation = act;
        Network::new(spec).unwrap()
    }

    #[test]
    fn masked_softmax_examples() {
        let s = masked_softmax(&[1.0, 1.0], 3).unwrap();
        assert_eq!(s.probs, vec![0.5, 0.5, 0.0]);
        let s = masked_softmax(&[0.3], 3).unwrap();
        assert_eq!(s.probs, vec![1.0, 0.0, 0.0]);
        assert!(matches!(masked_softmax(&[], 3), Err(Error::EmptyMask)));
    }

    #[test]
    fn zero_head_policy_is_uniform() {
        let enc = EncodingConfig::new(3, 4).unwrap();
        let net = Network::new(NetworkSpec::for_encoding(&enc)).unwrap();
        let mut r = rng::stream(0, 0);
        let params = net.init(&mut r, true);
        let s = random_state(&mut r, enc, 2);
        let p = net.forward_policy(&params, &s).unwrap();
        for &x in &p[..3] {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(p[3], 0.0);
    }

    #[test]
    fn q_head_masks_dummy_slots() {
        let enc = EncodingConfig::new(2, 4).unwrap();
        let net = small_net(&enc, Activation::Relu);
        let mut r = rng::stream(1, 0);
        let params = net.init(&mut r, false);
        let s = random_state(&mut r, enc, 1);
        let q = net.forward_q(&params, &s).unwrap();
        assert_eq!(q[2], MASKED_Q);
        assert!(q[..2].iter().all(|v| v.is_finite()));
        assert!(masked_argmax(&q, 2) < 2);
    }

    #[test]
    fn zero_output_grad_gives_zero_gradient() {
        let enc = EncodingConfig::new(2, 4).unwrap();
        let net = small_net(&enc, Activation::Tanh);
        let mut r = rng::stream(2, 0);
        let params = net.init(&mut r, false);
        let s = random_state(&mut r, enc, 2);
        let (_, trace) = net.forward(&params, &s).unwrap();
        let g = net.backward(&params, trace, &[0.0; 3]);
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let enc = EncodingConfig::new(3, 4).unwrap();
        let net = small_net(&enc, Activation::Tanh);
        for seed in 0..5 {
            let mut r = rng::stream(seed, 9);
            let params = net.init(&mut r, false);
            let s = random_state(&mut r, enc, 1 + seed as usize % 3);
            let weights: Vec<f64> = (0..s.num_valid()).map(|_| r.random_range(-1.0..1.0)).collect();
            let loss = |p: &ParamSet| -> f64 {
                let (o, _) = net.forward(p, &s).unwrap();
                o.iter().zip(&weights).map(|(a, b)| a * b).sum()
            };
            let (_, trace) = net.forward(&params, &s).unwrap();
            let g = net.backward(&params, trace, &weights);
            let h = 1e-5;
            let mut p = params.clone();
            for i in 0..params.len() {
                let orig = p.values[i];
                p.values[i] = orig + h;
                let up = loss(&p);
                p.values[i] = orig - h;
                let down = loss(&p);
                p.values[i] = orig;
                let fd = (up - down) / (2.0 * h);
                let rel = (g.values[i] - fd).abs() / (fd.abs() + 1e-8);
                assert!(
                    rel < 1e-4 || (g.values[i] - fd).abs() < 1e-10,
                    "{:?} {} vs {}",
                    params.locate(i),
                    g.values[i],
                    fd
                );
            }
        }
    }

    proptest! {
        #[test]
        fn policy_is_normalised_and_masked(seed in 0u64..1000, e in 1usize..=4) {
            let enc = EncodingConfig::new(4, 4).unwrap();
            let net = small_net(&enc, Activation::Relu);
            let mut r = rng::stream(seed, 3);
            let params = net.init(&mut r, false);
            let s = random_state(&mut r, enc, e);
            let p = net.forward_policy(&params, &s).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p[e + 1..].iter().all(|&x| x == 0.0));
        }

        #[test]
        fn permuting_live_servers_permutes_outputs(seed in 0u64..500) {
            let enc = EncodingConfig::new(3, 4).unwrap();
            let net = small_net(&enc, Activation::Tanh);
            let mut r = rng::stream(seed, 4);
            let params = net.init(&mut r, false);
            let s = random_state(&mut r, enc, 3);
            let mut swapped = s.clone();
            let w = enc.server_width();
            for k in 0..w {
                swapped.servers.swap(w + k, 3 * w + k);
            }
            let (a, _) = net.forward(&params, &s).unwrap();
            let (b, _) = net.forward(&params, &swapped).unwrap();
            prop_assert!((a[1] - b[3]).abs() < 1e-12);
            prop_assert!((a[3] - b[1]).abs() < 1e-12);
            prop_assert!((a[0] - b[0]).abs() < 1e-12);
            prop_assert!((a[2] - b[2]).abs() < 1e-12);
        }
    }
}
