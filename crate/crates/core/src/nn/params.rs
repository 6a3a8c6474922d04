use crate::autodiff::Matrix;
use crate::error::{GlnoError, Result};

/// Named trainable parameters with Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    names: Vec<String>,
    values: Vec<Matrix>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for ParameterStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParameterStore {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> Result<usize> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(GlnoError::InvalidArgument(format!(
                "duplicate parameter {name}"
            )));
        }
        self.m.push(vec![0.0; value.data.len()]);
        self.v.push(vec![0.0; value.data.len()]);
        self.names.push(name);
        self.values.push(value);
        Ok(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.index_of(name).map(|i| &self.values[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        self.index_of(name).map(|i| &mut self.values[i])
    }

    pub fn value(&self, i: usize) -> &Matrix {
        &self.values[i]
    }

    pub fn value_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.values[i]
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Total scalar parameter count.
    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(|v| v.data.len()).sum()
    }

    /// One Adam update with bias correction. Non-finite gradients abort the
    /// step before anything is modified.
    pub fn adam_step(&mut self, grads: &[Vec<f64>], lr: f64, cfg: AdamConfig) -> Result<()> {
        if grads.len() != self.values.len() {
            return Err(GlnoError::ShapeMismatch(format!(
                "{} gradients for {} parameters",
                grads.len(),
                self.values.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.len() != self.values[i].data.len() {
                return Err(GlnoError::ShapeMismatch(format!(
                    "gradient of {} has the wrong size",
                    self.names[i]
                )));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(GlnoError::NonFinite(format!(
                    "gradient of {}",
                    self.names[i]
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (i, g) in grads.iter().enumerate() {
            let (m, v, p) = (&mut self.m[i], &mut self.v[i], &mut self.values[i].data);
            for j in 0..g.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p[j] -= lr * mh / (vh.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

/// `base_lr * 0.5^floor(epoch / 100)`.
pub fn lr_schedule(epoch: usize, base_lr: f64) -> f64 {
    base_lr * 0.5f64.powi((epoch / 100) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_halves_every_hundred() {
        assert_eq!(lr_schedule(0, 1e-3), 1e-3);
        assert_eq!(lr_schedule(99, 1e-3), 1e-3);
        assert_eq!(lr_schedule(100, 1e-3), 5e-4);
        assert_eq!(lr_schedule(250, 1e-3), 2.5e-4);
    }

    #[test]
    fn adam_first_step_closed_form() {
        let mut s = ParameterStore::new();
        s.insert("a", Matrix::new(1, 1, vec![0.0]).unwrap())
            .unwrap();
        s.insert("b", Matrix::new(1, 1, vec![0.0]).unwrap())
            .unwrap();
        s.adam_step(&[vec![1.0], vec![2.0]], 1e-3, AdamConfig::default())
            .unwrap();
        let a = s.get("a").unwrap().data[0];
        let b = s.get("b").unwrap().data[0];
        assert!((a - (-1e-3 / (1.0 + 1e-8))).abs() < 1e-18);
        assert!((b.abs() - a.abs()).abs() < 1e-10);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn adam_zero_gradient_and_non_finite() {
        let mut s = ParameterStore::new();
        s.insert("a", Matrix::new(1, 2, vec![0.5, -1.0]).unwrap())
            .unwrap();
        s.adam_step(&[vec![0.0, 0.0]], 1e-3, AdamConfig::default())
            .unwrap();
        assert_eq!(s.get("a").unwrap().data, vec![0.5, -1.0]);
        assert_eq!(s.step(), 1);
        assert!(s
            .adam_step(&[vec![f64::NAN, 0.0]], 1e-3, AdamConfig::default())
            .is_err());
        assert_eq!(s.step(), 1);
        assert!(s.insert("a", Matrix::zeros(1, 1)).is_err());
    }
}
