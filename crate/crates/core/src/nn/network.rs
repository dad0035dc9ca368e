use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Activation, Dense};
use crate::error::{Error, Result};
use crate::masking::MaskedSample;
use crate::rng::{derive_seed, rng_from_seed};

/// Hidden widths of the three parts of the network. The classifier head
/// always ends in 2 linear logits and the decoder head in `input_dim`
/// linear outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub encoder: Vec<usize>,
    pub classifier: Vec<usize>,
    pub decoder: Vec<usize>,
    pub hidden_activation: Activation,
    /// Build the decoder head at all.
    pub with_decoder: bool,
}

impl Architecture {
    /// Encoder 64-64, classifier 32-2, decoder 32-input.
    pub fn wide(input_dim: usize) -> Self {
        Architecture {
            input_dim,
            encoder: vec![64, 64],
            classifier: vec![32],
            decoder: vec![32],
            hidden_activation: Activation::Relu,
            with_decoder: true,
        }
    }

    /// Encoder 64-8, classifier 32-2, decoder 64-input.
    pub fn bottleneck(input_dim: usize) -> Self {
        Architecture {
            input_dim,
            encoder: vec![64, 8],
            classifier: vec![32],
            decoder: vec![64],
            hidden_activation: Activation::Relu,
            with_decoder: true,
        }
    }

    pub fn encoding_dim(&self) -> usize {
        self.encoder.last().copied().unwrap_or(self.input_dim)
    }

    pub fn is_bottleneck(&self) -> bool {
        self.encoding_dim() < self.input_dim
    }
}

/// `(inputs, outputs)` of every layer, per part.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDims {
    pub encoder: Vec<(usize, usize)>,
    pub classifier: Vec<(usize, usize)>,
    pub decoder: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub input_dim: usize,
    pub encoder: Vec<Dense>,
    pub classifier: Vec<Dense>,
    pub decoder: Vec<Dense>,
}

fn stack<R: Rng + ?Sized>(input: usize, hidden: &[usize], last: Option<(usize, Activation)>, act: Activation, rng: &mut R) -> Vec<Dense> {
    let mut layers = Vec::new();
    let mut prev = input;
    for &h in hidden {
        layers.push(Dense::init(prev, h, act, rng));
        prev = h;
    }
    if let Some((out, a)) = last {
        layers.push(Dense::init(prev, out, a, rng));
    }
    layers
}

impl NetworkParams {
    /// Seeded initialization. Each part draws from its own stream, so the
    /// encoder and classifier weights do not depend on whether a decoder exists.
    pub fn init(arch: &Architecture, seed: u64) -> Self {
        let act = arch.hidden_activation;
        let enc = stack(arch.input_dim, &arch.encoder, None, act, &mut rng_from_seed(derive_seed(seed, &[0])));
        let e = arch.encoding_dim();
        let cls = stack(e, &arch.classifier, Some((2, Activation::Linear)), act, &mut rng_from_seed(derive_seed(seed, &[1])));
        let dec = if arch.with_decoder {
            stack(e, &arch.decoder, Some((arch.input_dim, Activation::Linear)), act, &mut rng_from_seed(derive_seed(seed, &[2])))
        } else {
            Vec::new()
        };
        NetworkParams {
            input_dim: arch.input_dim,
            encoder: enc,
            classifier: cls,
            decoder: dec,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |ls: &[Dense]| ls.iter().map(Dense::zeros_like).collect();
        NetworkParams {
            input_dim: self.input_dim,
            encoder: z(&self.encoder),
            classifier: z(&self.classifier),
            decoder: z(&self.decoder),
        }
    }

    pub fn encoding_dim(&self) -> usize {
        self.encoder.last().map_or(self.input_dim, |l| l.outputs)
    }

    pub fn has_decoder(&self) -> bool {
        !self.decoder.is_empty()
    }

    pub fn layer_dims(&self) -> LayerDims {
        let d = |ls: &[Dense]| ls.iter().map(|l| (l.inputs, l.outputs)).collect();
        LayerDims {
            encoder: d(&self.encoder),
            classifier: d(&self.classifier),
            decoder: d(&self.decoder),
        }
    }

    /// Checks that layer shapes compose and the heads have the right widths.
    pub fn validate(&self) -> Result<()> {
        let check_chain = |part: &str, layers: &[Dense], start: usize| -> Result<usize> {
            let mut prev = start;
            for (i, l) in layers.iter().enumerate() {
                if l.inputs != prev || l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                    return Err(Error::InvalidConfig(format!("{part} layer {i} does not compose: expects {} inputs, gets {prev}", l.inputs)));
                }
                prev = l.outputs;
            }
            Ok(prev)
        };
        let e = check_chain("encoder", &self.encoder, self.input_dim)?;
        if check_chain("classifier", &self.classifier, e)? != 2 || self.classifier.is_empty() {
            return Err(Error::InvalidConfig("classifier head must end in 2 logits".into()));
        }
        if !self.decoder.is_empty() && check_chain("decoder", &self.decoder, e)? != self.input_dim {
            return Err(Error::InvalidConfig("decoder head must output one value per input".into()));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Every weight and bias tensor with a stable name such as `encoder.0.weight`.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (part, layers) in [("encoder", &self.encoder), ("classifier", &self.classifier), ("decoder", &self.decoder)] {
            for (i, l) in layers.iter().enumerate() {
                out.push((format!("{part}.{i}.weight"), l.weights.as_slice()));
                out.push((format!("{part}.{i}.bias"), l.bias.as_slice()));
            }
        }
        out
    }

    /// Mutable tensors in the same order as [`NetworkParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layers in [&mut self.encoder, &mut self.classifier, &mut self.decoder] {
            for l in layers.iter_mut() {
                out.push(l.weights.as_mut_slice());
                out.push(l.bias.as_mut_slice());
            }
        }
        out
    }

    pub fn encoder_tensor_count(&self) -> usize {
        2 * self.encoder.len()
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = value);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// FNV-style checksum over the exact bit patterns of the given tensors.
    pub fn checksum_of(tensors: &[(String, &[f64])]) -> u64 {
        let mut h = 0xCBF2_9CE4_8422_2325u64;
        for (_, t) in tensors {
            for x in t.iter() {
                h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
        h
    }

    pub fn encoder_checksum(&self) -> u64 {
        let tensors = self.tensors();
        Self::checksum_of(&tensors[..self.encoder_tensor_count()])
    }

    pub fn checksum(&self) -> u64 {
        Self::checksum_of(&self.tensors())
    }

    /// Full forward pass over a raw input vector, allocating a fresh trace.
    pub fn forward_input(&self, input: &[f64]) -> Result<Forward> {
        let mut fwd = Forward::for_network(self);
        self.forward_into(input, &mut fwd, true)?;
        Ok(fwd)
    }

    /// Forward pass reusing `fwd`'s buffers. The decoder is skipped when
    /// `with_decoder` is false, leaving `fwd.reconstruction` stale.
    pub fn forward_into(&self, input: &[f64], fwd: &mut Forward, with_decoder: bool) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: input.len(),
            });
        }
        run_stack(&self.encoder, input, &mut fwd.encoder);
        let encoding = fwd.encoder.last().map_or(input, |t| t.out.as_slice());
        fwd.encoding.clear();
        fwd.encoding.extend_from_slice(encoding);
        run_stack(&self.classifier, &fwd.encoding, &mut fwd.classifier);
        let logits = &fwd.classifier.last().expect("classifier head").out;
        fwd.logits = [logits[0], logits[1]];
        fwd.class_probs = softmax2(fwd.logits);
        if with_decoder && !self.decoder.is_empty() {
            run_stack(&self.decoder, &fwd.encoding, &mut fwd.decoder);
            let rec = fwd.reconstruction.get_or_insert_with(Vec::new);
            rec.clear();
            rec.extend_from_slice(&fwd.decoder.last().expect("decoder head").out);
        }
        Ok(())
    }

    /// Positive-class probability.
    pub fn predict_input(&self, input: &[f64], fwd: &mut Forward) -> Result<f64> {
        self.forward_into(input, fwd, false)?;
        Ok(fwd.class_probs[1])
    }
}

fn run_stack(layers: &[Dense], input: &[f64], traces: &mut [LayerTrace]) {
    for (i, l) in layers.iter().enumerate() {
        let (done, rest) = traces.split_at_mut(i);
        let t = &mut rest[0];
        let x = if i == 0 { input } else { done[i - 1].out.as_slice() };
        t.input.clear();
        t.input.extend_from_slice(x);
        l.forward_into(&t.input, &mut t.pre, &mut t.out);
    }
}

pub(crate) fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Per-layer activations kept for backpropagation.
#[derive(Clone, Debug, Default)]
pub struct LayerTrace {
    pub input: Vec<f64>,
    pub pre: Vec<f64>,
    pub out: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Forward {
    pub encoder: Vec<LayerTrace>,
    pub classifier: Vec<LayerTrace>,
    pub decoder: Vec<LayerTrace>,
    pub encoding: Vec<f64>,
    pub logits: [f64; 2],
    pub class_probs: [f64; 2],
    pub reconstruction: Option<Vec<f64>>,
}

impl Forward {
    pub fn for_network(params: &NetworkParams) -> Self {
        let traces = |ls: &[Dense]| {
            ls.iter()
                .map(|l| LayerTrace {
                    input: Vec::with_capacity(l.inputs),
                    pre: vec![0.0; l.outputs],
                    out: vec![0.0; l.outputs],
                })
                .collect()
        };
        Forward {
            encoder: traces(&params.encoder),
            classifier: traces(&params.classifier),
            decoder: traces(&params.decoder),
            encoding: Vec::new(),
            logits: [0.0; 2],
            class_probs: [0.5; 2],
            reconstruction: None,
        }
    }
}

/// Runs the network on a masked sample.
pub fn forward(params: &NetworkParams, sample: &MaskedSample) -> Result<Forward> {
    params.forward_input(&sample.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_is_indifferent() {
        let mut p = NetworkParams::init(&Architecture::wide(28), 3);
        p.fill(0.0);
        let f = p.forward_input(&[1.0; 28]).unwrap();
        assert_eq!(f.class_probs, [0.5, 0.5]);
    }

    #[test]
    fn identity_decoder_reconstructs_input() {
        // 2 inputs, no encoder layers, decoder = identity.
        let mut p = NetworkParams::init(
            &Architecture {
                input_dim: 2,
                encoder: vec![],
                classifier: vec![],
                decoder: vec![],
                hidden_activation: Activation::Relu,
                with_decoder: true,
            },
            1,
        );
        p.decoder[0].weights = vec![1.0, 0.0, 0.0, 1.0];
        p.decoder[0].bias = vec![0.0, 0.0];
        let f = p.forward_input(&[0.75, -1.5]).unwrap();
        assert_eq!(f.reconstruction.unwrap(), vec![0.75, -1.5]);
    }

    #[test]
    fn probabilities_normalized_even_for_extreme_logits() {
        for logits in [[1000.0, -1000.0], [-745.0, 745.0], [3.0, 3.0], [1e-300, 0.0]] {
            let p = softmax2(logits);
            assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
            assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn shapes_and_validation() {
        let p = NetworkParams::init(&Architecture::bottleneck(28), 0);
        p.validate().unwrap();
        assert_eq!(p.encoding_dim(), 8);
        assert_eq!(p.layer_dims().decoder, vec![(8, 64), (64, 28)]);
        assert!(p.forward_input(&[0.0; 27]).is_err());
        let mut broken = p.clone();
        broken.classifier[0].inputs = 9;
        assert!(broken.validate().is_err());
    }

    #[test]
    fn decoder_stream_does_not_shift_other_parts() {
        let with = NetworkParams::init(&Architecture::wide(5), 11);
        let without = NetworkParams::init(&Architecture { with_decoder: false, ..Architecture::wide(5) }, 11);
        assert_eq!(with.encoder, without.encoder);
        assert_eq!(with.classifier, without.classifier);
        assert!(without.decoder.is_empty());
    }
}
