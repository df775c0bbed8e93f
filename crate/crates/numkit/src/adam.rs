//! Bias-corrected adaptive-moment estimation.

use crate::error::{NumkitError, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl AdamState {
    pub fn new(param_shapes: &[Vec<usize>], learning_rate: f64) -> Self {
        AdamState {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: param_shapes.iter().map(|s| Tensor::zeros(s.clone())).collect(),
            second_moment: param_shapes.iter().map(|s| Tensor::zeros(s.clone())).collect(),
        }
    }

    /// State sized for a parameter list (e.g. `Mlp::params`).
    pub fn for_params(params: &[&Tensor], learning_rate: f64) -> Self {
        let shapes: Vec<Vec<usize>> = params.iter().map(|p| p.shape().to_vec()).collect();
        AdamState::new(&shapes, learning_rate)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One in-place update. `params` and `grads` must align with the shapes
    /// this state was created for.
    pub fn update(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(NumkitError::ShapeMismatch {
                op: "adam update",
                left: vec![params.len()],
                right: vec![grads.len()],
            });
        }
        for ((p, g), (m, v)) in params
            .iter()
            .zip(grads)
            .zip(self.first_moment.iter().zip(&self.second_moment))
        {
            if p.shape() != g.shape() || p.shape() != m.shape() || p.shape() != v.shape() {
                return Err(NumkitError::ShapeMismatch {
                    op: "adam update",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (idx, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.first_moment[idx].data_mut();
            let v = self.second_moment[idx].data_mut();
            for ((pv, &gv), (mv, vv)) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = Tensor::from_vec(vec![2], vec![0.3, -0.7]).unwrap();
        let before = p.clone();
        let mut state = AdamState::for_params(&[&p], 1e-3);
        state
            .update(&mut [&mut p], &[Tensor::zeros(vec![2])])
            .unwrap();
        assert_eq!(p, before);
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn first_step_moves_by_about_lr_times_sign() {
        let mut p = Tensor::scalar(1.0);
        let mut state = AdamState::for_params(&[&p], 1e-3);
        state
            .update(&mut [&mut p], &[Tensor::scalar(0.42)])
            .unwrap();
        let delta = 1.0 - p.scalar_value();
        assert!((delta - 1e-3).abs() < 1e-5, "delta = {delta}");
    }

    #[test]
    fn converges_on_convex_quadratic() {
        // f(w) = (w - 3)^2 from w = 0 with lr = 0.1.
        let mut w = Tensor::scalar(0.0);
        let mut state = AdamState::for_params(&[&w], 0.1);
        for _ in 0..200 {
            let g = 2.0 * (w.scalar_value() - 3.0);
            state.update(&mut [&mut w], &[Tensor::scalar(g)]).unwrap();
        }
        assert!((w.scalar_value() - 3.0).abs() < 0.1);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = Tensor::zeros(vec![2]);
        let mut state = AdamState::for_params(&[&p], 1e-3);
        assert!(state
            .update(&mut [&mut p], &[Tensor::zeros(vec![3])])
            .is_err());
    }
}
