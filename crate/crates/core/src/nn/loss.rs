use serde::{Deserialize, Serialize};

use super::network::{Forward, NetworkParams};
use crate::masking::MaskedSample;

/// Which positions the reconstruction term covers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EligibleSet {
    /// Observed and masked in this pass.
    #[default]
    Intersection,
    /// Every observed position.
    Union,
}

impl EligibleSet {
    #[inline]
    pub fn contains(self, known: bool, masked: bool) -> bool {
        match self {
            EligibleSet::Intersection => known && masked,
            EligibleSet::Union => known,
        }
    }

    pub fn any(self, sample: &MaskedSample) -> bool {
        sample
            .known
            .iter()
            .zip(&sample.train_mask)
            .any(|(&k, &m)| self.contains(k, m))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub classification: f64,
    pub reconstruction: f64,
    /// `classification + lambda * reconstruction`.
    pub total: f64,
    pub lambda: f64,
}

/// Cross-entropy of the class probabilities plus the L2 sum of reconstruction
/// errors over the eligible positions.
pub fn loss(out: &Forward, sample: &MaskedSample, lambda: f64, eligible: EligibleSet) -> LossBreakdown {
    let l = out.logits;
    let m = l[0].max(l[1]);
    let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
    let classification = (lse - l[sample.label as usize]).max(0.0);
    let reconstruction = match &out.reconstruction {
        Some(rec) => (0..sample.dim())
            .filter(|&i| eligible.contains(sample.known[i], sample.train_mask[i]))
            .map(|i| {
                let r = rec[i] - sample.targets[i];
                r * r
            })
            .sum(),
        None => 0.0,
    };
    LossBreakdown {
        classification,
        reconstruction,
        total: classification + lambda * reconstruction,
        lambda,
    }
}

/// What a training step optimizes: `classification_weight * CE + lambda * L2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub classification_weight: f64,
    pub lambda: f64,
    pub eligible: EligibleSet,
    /// Leave encoder gradients at zero.
    pub freeze_encoder: bool,
}

impl Objective {
    pub fn joint(lambda: f64, eligible: EligibleSet) -> Self {
        Objective {
            classification_weight: 1.0,
            lambda,
            eligible,
            freeze_encoder: false,
        }
    }

    pub fn reconstruction_only(eligible: EligibleSet) -> Self {
        Objective {
            classification_weight: 0.0,
            lambda: 1.0,
            eligible,
            freeze_encoder: false,
        }
    }

    pub fn classification_frozen_encoder() -> Self {
        Objective {
            classification_weight: 1.0,
            lambda: 0.0,
            eligible: EligibleSet::Intersection,
            freeze_encoder: true,
        }
    }

    pub fn value(&self, lb: &LossBreakdown) -> f64 {
        self.classification_weight * lb.classification + self.lambda * lb.reconstruction
    }

    pub fn breakdown(&self, out: &Forward, sample: &MaskedSample) -> LossBreakdown {
        loss(out, sample, self.lambda, self.eligible)
    }
}

/// Accumulates the gradient of `objective` for one sample into `grads`.
/// The decoder branch is skipped entirely when `lambda` is zero or no
/// position is eligible, so it contributes exactly nothing.
pub fn backward(params: &NetworkParams, fwd: &Forward, sample: &MaskedSample, objective: &Objective, grads: &mut NetworkParams) {
    let e = params.encoding_dim();
    let mut grad_encoding = vec![0.0; e];
    let mut touched = false;

    if objective.classification_weight != 0.0 {
        let mut g = vec![
            objective.classification_weight * fwd.class_probs[0],
            objective.classification_weight * fwd.class_probs[1],
        ];
        g[sample.label as usize] -= objective.classification_weight;
        let into = backprop_stack(&params.classifier, &fwd.classifier, g, &mut grads.classifier);
        add_into(&mut grad_encoding, &into);
        touched = true;
    }

    let run_decoder = objective.lambda != 0.0 && params.has_decoder() && objective.eligible.any(sample);
    if run_decoder {
        let rec = fwd.reconstruction.as_ref().expect("forward pass ran without the decoder");
        let g: Vec<f64> = (0..sample.dim())
            .map(|i| {
                if objective.eligible.contains(sample.known[i], sample.train_mask[i]) {
                    2.0 * objective.lambda * (rec[i] - sample.targets[i])
                } else {
                    0.0
                }
            })
            .collect();
        let into = backprop_stack(&params.decoder, &fwd.decoder, g, &mut grads.decoder);
        add_into(&mut grad_encoding, &into);
        touched = true;
    }

    if touched && !objective.freeze_encoder && !params.encoder.is_empty() {
        backprop_stack(&params.encoder, &fwd.encoder, grad_encoding, &mut grads.encoder);
    }
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// Backpropagates `grad_out` through a layer stack and returns dL/d(stack input).
fn backprop_stack(
    layers: &[super::Dense],
    traces: &[super::LayerTrace],
    grad_out: Vec<f64>,
    grads: &mut [super::Dense],
) -> Vec<f64> {
    let mut g = grad_out;
    for i in (0..layers.len()).rev() {
        let l = &layers[i];
        let t = &traces[i];
        let mut gin = vec![0.0; l.inputs];
        l.backward(&t.input, &t.pre, &g, &mut grads[i], Some(&mut gin));
        g = gin;
    }
    g
}
