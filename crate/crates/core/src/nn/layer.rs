use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected layer. `weights` is row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Fan-in scaled uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let gain = match activation {
            Activation::Relu => 6.0,
            Activation::Linear => 3.0,
        };
        let limit = (gain / inputs.max(1) as f64).sqrt();
        let mut layer = Dense::zeros(inputs, outputs, activation);
        for w in &mut layer.weights {
            *w = rng.random_range(-limit..limit);
        }
        layer
    }

    pub fn zeros_like(&self) -> Self {
        Dense::zeros(self.inputs, self.outputs, self.activation)
    }

    pub fn forward_into(&self, input: &[f64], pre: &mut [f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.inputs);
        for (j, row) in self.weights.chunks_exact(self.inputs).enumerate() {
            let z = self.bias[j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            pre[j] = z;
            out[j] = self.activation.apply(z);
        }
    }

    /// Accumulates parameter gradients into `grads` given `grad_out` = dL/d(output).
    /// When `grad_in` is given it is overwritten with dL/d(input).
    pub fn backward(&self, input: &[f64], pre: &[f64], grad_out: &[f64], grads: &mut Dense, grad_in: Option<&mut [f64]>) {
        let mut grad_in = grad_in;
        if let Some(g) = grad_in.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        for j in 0..self.outputs {
            let delta = grad_out[j] * self.activation.derivative(pre[j]);
            if delta == 0.0 {
                continue;
            }
            grads.bias[j] += delta;
            let row = j * self.inputs..(j + 1) * self.inputs;
            for (gw, x) in grads.weights[row.clone()].iter_mut().zip(input) {
                *gw += delta * x;
            }
            if let Some(g) = grad_in.as_deref_mut() {
                for (gi, w) in g.iter_mut().zip(&self.weights[row]) {
                    *gi += w * delta;
                }
            }
        }
    }
}
