//! Dense linear algebra, probability primitives and the Adam optimizer.
//!
//! All arithmetic is `f64`. Logarithms are natural.

mod adam;
pub(crate) mod linalg;
mod prob;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use linalg::{dot, Matrix};
pub use prob::{
    bce_with_logit, binary_entropy, js_divergence, js_divergence_grad, sigmoid, softmax, softmax2, Simplex2,
    KL_FLOOR,
};
