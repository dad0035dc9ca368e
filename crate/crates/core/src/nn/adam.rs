use serde::{Deserialize, Serialize};

use super::network::NetworkParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn for_shapes(lengths: &[usize]) -> Self {
        AdamState {
            step: 0,
            m: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            v: lengths.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn new(params: &NetworkParams) -> Self {
        let lengths: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();
        Self::for_shapes(&lengths)
    }

    /// One bias-corrected update of every tensor.
    pub fn update(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], cfg: &AdamConfig) {
        assert_eq!(params.len(), self.m.len(), "tensor count changed");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

pub fn optimizer_step(params: &mut NetworkParams, grads: &NetworkParams, state: &mut AdamState, cfg: &AdamConfig) {
    let g: Vec<&[f64]> = grads.tensors().into_iter().map(|(_, t)| t).collect();
    let mut p = params.tensors_mut();
    state.update(&mut p, &g, cfg);
}
