use super::layer::Activation;
use super::loss::{backward, Objective};
use super::network::NetworkParams;
use crate::error::{Error, Result};
use crate::masking::MaskedSample;

/// Denominator floor of the relative error `|a - n| / max(|a|, |n|, floor)`.
/// Gradients smaller than this are compared absolutely; central differences
/// carry roughly 1e-11 of rounding noise, far below the floor.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// True when some ReLU pre-activation lies within `margin` of zero. Central
/// differences straddle the kink there and stop approximating the gradient.
pub fn near_kink(params: &NetworkParams, sample: &MaskedSample, margin: f64) -> Result<bool> {
    let f = params.forward_input(&sample.values)?;
    let layers = params.encoder.iter().zip(&f.encoder)
        .chain(params.classifier.iter().zip(&f.classifier))
        .chain(params.decoder.iter().zip(&f.decoder));
    Ok(layers
        .filter(|(l, _)| l.activation == Activation::Relu)
        .any(|(_, t)| t.pre.iter().any(|p| p.abs() < margin)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub checked: usize,
}

fn objective_value(params: &NetworkParams, sample: &MaskedSample, objective: &Objective) -> Result<f64> {
    let f = params.forward_input(&sample.values)?;
    Ok(objective.value(&objective.breakdown(&f, sample)))
}

/// Compares backpropagated gradients with central finite differences over
/// every trainable parameter (the encoder is skipped when the objective
/// freezes it).
pub fn grad_check(params: &NetworkParams, sample: &MaskedSample, objective: &Objective, step: f64, tolerance: f64) -> Result<GradCheckReport> {
    let f = params.forward_input(&sample.values)?;
    let mut analytic = params.zeros_like();
    backward(params, &f, sample, objective, &mut analytic);
    compare_gradients(params, sample, objective, &analytic, step, tolerance)
}

/// Like [`grad_check`] with caller-supplied analytic gradients.
pub fn compare_gradients(
    params: &NetworkParams,
    sample: &MaskedSample,
    objective: &Objective,
    analytic: &NetworkParams,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = analytic.tensors().into_iter().map(|(_, t)| t.to_vec()).collect();
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        checked: 0,
    };
    let mut worst_values = (0.0, 0.0);
    let first = if objective.freeze_encoder { params.encoder_tensor_count() } else { 0 };
    for (k, name) in names.iter().enumerate().skip(first) {
        for (i, &a) in analytic[k].iter().enumerate() {
            let original = probe.tensors_mut()[k][i];
            probe.tensors_mut()[k][i] = original + step;
            let plus = objective_value(&probe, sample, objective)?;
            probe.tensors_mut()[k][i] = original - step;
            let minus = objective_value(&probe, sample, objective)?;
            probe.tensors_mut()[k][i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            report.checked += 1;
            if rel > report.max_relative_error || report.worst_tensor.is_empty() {
                report.max_relative_error = rel;
                report.worst_tensor = name.clone();
                report.worst_index = i;
                worst_values = (a, numeric);
            }
        }
    }
    if report.max_relative_error > tolerance {
        return Err(Error::GradientMismatch {
            tensor: report.worst_tensor,
            index: report.worst_index,
            analytic: worst_values.0,
            numeric: worst_values.1,
            relative_error: report.max_relative_error,
        });
    }
    Ok(report)
}
