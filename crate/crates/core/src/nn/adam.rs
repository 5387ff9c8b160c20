use super::params::ParamSet;
use crate::error::{Error, Result};

/// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One descent step on `params` along `grads`.
    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet, lr: f64) -> Result<()> {
        params.check_same_shape(grads)?;
        if grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer sized for {} parameters, got {}",
                self.m.len(),
                grads.len()
            )));
        }
        if let Err(e) = grads.check_finite("gradient") {
            if let Error::NonFinite { index, .. } = e {
                log::error!("non-finite gradient in {:?}", grads.locate(index));
            }
            return Err(e);
        }
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .values
            .iter_mut()
            .zip(&grads.values)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::NamedSlice;

    fn p(v: &[f64]) -> ParamSet {
        ParamSet {
            values: v.to_vec(),
            slices: vec![NamedSlice {
                name: "x".into(),
                offset: 0,
                len: v.len(),
            }],
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut x = p(&[1.0, -2.0]);
        Adam::new(2).step(&mut x, &p(&[0.0, 0.0]), 0.1).unwrap();
        assert_eq!(x.values, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut x = p(&[1.0, -2.0, 0.0]);
        Adam::new(3).step(&mut x, &p(&[3.0, -0.5, 1e3]), 0.01).unwrap();
        assert!((x.values[0] - 0.99).abs() < 1e-9);
        assert!((x.values[1] + 1.99).abs() < 1e-9);
        assert!((x.values[2] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn descends_a_quadratic_bowl() {
        let scales = [1.0, 2.0, 0.5];
        let loss = |x: &[f64]| x.iter().zip(scales).map(|(v, s)| s * v * v).sum::<f64>();
        let mut x = p(&[3.0, -2.0, 5.0]);
        let mut opt = Adam::new(3);
        let mut prev = loss(&x.values);
        let start = prev;
        for k in 0..150 {
            let g = p(&x
                .values
                .iter()
                .zip(scales)
                .map(|(v, s)| 2.0 * s * v)
                .collect::<Vec<_>>());
            opt.step(&mut x, &g, 0.01).unwrap();
            let l = loss(&x.values);
            if k >= 10 {
                assert!(l < prev, "loss rose at step {k}: {prev} -> {l}");
            }
            prev = l;
        }
        assert!(prev < 0.5 * start);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut x = p(&[1.0, 1.0]);
        let err = Adam::new(2).step(&mut x, &p(&[0.0, f64::NAN]), 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
        assert_eq!(x.values, vec![1.0, 1.0]);
    }
}
