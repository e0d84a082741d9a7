//! The pairwise-gated hierarchical fusion detector.
//!
//! Data flow for one utterance:
//!
//! ```text
//! layers ──► level 0 gates (adjacent pairs) ──► level 1 gates ──► … ──► one
//! per-frame vector ──► additive attention pool over frames ──► linear logit
//! ```
//!
//! Every gate is a learned affine map `R^{2D} → R^2` followed by a two-way
//! softmax; the fused frame is the convex combination of its two inputs.

mod backward;
mod forward;
mod gatemap;
mod loss;
mod params;
mod stack;
mod topology;

pub use backward::loss_and_grad;
pub use forward::{forward, FusionTrace, GateTrace, Intermediates};
pub use gatemap::{export_gate_maps, routing_mass, GateMapRow};
pub use loss::{loss, ClassWeights, LossBreakdown};
pub use params::{init_params, ModelParams, ParamLayout};
pub use stack::{Label, LayerStack};
pub use topology::{build_topology, FusionLevel, GateRef, ModelTopology};
