//! A small dense-network engine: one shared encoder feeding a two-logit
//! classifier head and a linear reconstruction head, trained with a composite
//! cross-entropy + masked-L2 loss.

mod adam;
mod gradcheck;
mod layer;
mod loss;
mod network;

pub use adam::{optimizer_step, AdamConfig, AdamState};
pub use gradcheck::{compare_gradients, grad_check, near_kink, GradCheckReport, GRAD_CHECK_FLOOR};
pub use layer::{Activation, Dense};
pub use loss::{backward, loss, EligibleSet, LossBreakdown, Objective};
pub use network::{forward, Architecture, Forward, LayerDims, LayerTrace, NetworkParams};
