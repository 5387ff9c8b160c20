use crate::error::{Error, Result};

/// A named contiguous range of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSlice {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Flat parameter (or gradient) vector with named per-layer slices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub values: Vec<f64>,
    pub slices: Vec<NamedSlice>,
}

impl ParamSet {
    pub fn zeros_like(other: &ParamSet) -> Self {
        Self {
            values: vec![0.0; other.values.len()],
            slices: other.slices.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slice(&self, name: &str) -> Option<&[f64]> {
        self.slices
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.values[s.offset..s.offset + s.len])
    }

    pub fn check_same_shape(&self, other: &ParamSet) -> Result<()> {
        if self.values.len() != other.values.len() || self.slices != other.slices {
            return Err(Error::Shape(format!(
                "parameter sets differ: {} vs {} values",
                self.values.len(),
                other.values.len()
            )));
        }
        Ok(())
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite {
                what,
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    /// Index of the slice containing flat position `i` (for diagnostics).
    pub fn locate(&self, i: usize) -> Option<&str> {
        self.slices
            .iter()
            .find(|s| (s.offset..s.offset + s.len).contains(&i))
            .map(|s| s.name.as_str())
    }
}

/// Polyak averaging: `target <- beta * online + (1 - beta) * target`.
pub fn soft_update(online: &ParamSet, target: &mut ParamSet, beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!(
            "smoothing coefficient must be in (0, 1], got {beta}"
        )));
    }
    online.check_same_shape(target)?;
    for (t, &o) in target.values.iter_mut().zip(&online.values) {
        *t = beta * o + (1.0 - beta) * *t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> ParamSet {
        ParamSet {
            values: v.to_vec(),
            slices: vec![NamedSlice {
                name: "w".into(),
                offset: 0,
                len: v.len(),
            }],
        }
    }

    #[test]
    fn soft_update_examples() {
        let online = p(&[2.0, -4.0]);
        let mut t = p(&[0.0, 0.0]);
        soft_update(&online, &mut t, 1.0).unwrap();
        assert_eq!(t.values, online.values);
        let mut t = p(&[0.0, 0.0]);
        soft_update(&online, &mut t, 0.5).unwrap();
        assert_eq!(t.values, vec![1.0, -2.0]);
        let mut t = p(&[0.0, 0.0]);
        for k in 1..=30 {
            soft_update(&online, &mut t, 0.3).unwrap();
            let gap = (online.values[0] - t.values[0]).abs();
            assert!((gap - 2.0 * 0.7f64.powi(k)).abs() < 1e-12);
        }
        assert!(soft_update(&online, &mut t, 0.0).is_err());
        assert!(soft_update(&online, &mut p(&[1.0]), 0.5).is_err());
    }
}
