//! Adam with bias correction, applied across a whole parameter store.

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, ..Default::default() }
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Tensor> = (0..store.len()).map(|i| Tensor::zeros_like(store.get(i))).collect();
        AdamState { m: zeros.clone(), v: zeros, t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected update, in place over the store.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Tensor], cfg: &AdamConfig) -> Result<()> {
        if grads.len() != store.len() {
            return Err(Error::ShapeMismatch {
                op: "adam_step",
                details: format!("{} gradients for {} parameters", grads.len(), store.len()),
            });
        }
        for i in 0..grads.len() {
            if grads[i].shape() != store.get(i).shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    details: format!(
                        "gradient shape {:?} vs parameter {:?} for {}",
                        grads[i].shape(),
                        store.get(i).shape(),
                        store.name(i)
                    ),
                });
            }
        }
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..grads.len() {
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let p = store.get_mut(i).data_mut();
            let g = grads[i].data();
            for j in 0..g.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::init_params;

    fn scalar_store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.register("p", Tensor::scalar(v)).unwrap();
        s
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut store = ParamStore::new();
        store.register("w", init_params(&[4, 4], 9)).unwrap();
        let before = store.get(0).clone();
        let mut adam = AdamState::new(&store);
        let cfg = AdamConfig::default();
        for _ in 0..3 {
            adam.step(&mut store, &[Tensor::zeros(4, 4)], &cfg).unwrap();
        }
        assert!(before.data().iter().zip(store.get(0).data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        let mut store = scalar_store(1.0);
        let mut adam = AdamState::new(&store);
        let cfg = AdamConfig::default();
        let g = 0.37;
        adam.step(&mut store, &[Tensor::scalar(g)], &cfg).unwrap();
        let expected = 1.0 - cfg.lr * g / (g.abs() + cfg.eps);
        assert!((store.get(0).data()[0] - expected).abs() < 1e-15);
        assert!((1.0 - store.get(0).data()[0] - cfg.lr).abs() < 1e-6);
    }

    #[test]
    fn two_steps_match_hand_computed_recurrence() {
        let mut store = scalar_store(0.5);
        let mut adam = AdamState::new(&store);
        let cfg = AdamConfig::default();
        let g = 0.2;
        adam.step(&mut store, &[Tensor::scalar(g)], &cfg).unwrap();
        adam.step(&mut store, &[Tensor::scalar(g)], &cfg).unwrap();

        // independent recurrence with the same constant gradient
        let (b1, b2) = (0.9, 0.999);
        let mut p = 0.5;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2u32 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t as i32));
            let v_hat = v / (1.0 - b2.powi(t as i32));
            p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        assert!((store.get(0).data()[0] - p).abs() <= 1e-12);
        assert_eq!(adam.step_count(), 2);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut store = scalar_store(1.0);
        let mut adam = AdamState::new(&store);
        let err = adam.step(&mut store, &[Tensor::zeros(2, 2)], &AdamConfig::default());
        assert!(err.is_err());
    }
}
