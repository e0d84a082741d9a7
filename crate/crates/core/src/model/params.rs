use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::topology::ModelTopology;
use crate::error::{invalid, Result};
use crate::rng;

/// Offsets of every parameter block inside the flat parameter vector.
///
/// Layout: for each gate (level-major) a `2 × 2D` weight then a 2-bias;
/// then the attention projection `D × D`, its bias `D`, the context vector
/// `D`; then the classifier weight `D` and scalar bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    dim: usize,
    gates: usize,
}

impl ParamLayout {
    pub fn new(topology: &ModelTopology) -> Self {
        Self { dim: topology.dim(), gates: topology.gate_count() }
    }

    #[inline]
    pub fn gate_stride(&self) -> usize {
        4 * self.dim + 2
    }

    #[inline]
    pub fn gate_weight(&self, gate: usize) -> usize {
        gate * self.gate_stride()
    }

    #[inline]
    pub fn gate_bias(&self, gate: usize) -> usize {
        self.gate_weight(gate) + 4 * self.dim
    }

    #[inline]
    pub fn attn_proj(&self) -> usize {
        self.gates * self.gate_stride()
    }

    #[inline]
    pub fn attn_bias(&self) -> usize {
        self.attn_proj() + self.dim * self.dim
    }

    #[inline]
    pub fn attn_context(&self) -> usize {
        self.attn_bias() + self.dim
    }

    #[inline]
    pub fn cls_weight(&self) -> usize {
        self.attn_context() + self.dim
    }

    #[inline]
    pub fn cls_bias(&self) -> usize {
        self.cls_weight() + self.dim
    }

    /// `M·(4D+2) + D² + 2D + D + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.cls_bias() + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    topology: ModelTopology,
    layout: ParamLayout,
    values: Vec<f64>,
}

impl ModelParams {
    pub fn from_values(topology: ModelTopology, values: Vec<f64>) -> Result<Self> {
        let layout = ParamLayout::new(&topology);
        if values.len() != layout.len() {
            return Err(invalid!(
                "parameter vector has {} entries, topology needs {}",
                values.len(),
                layout.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("parameter {i} is not finite"));
        }
        Ok(Self { topology, layout, values })
    }

    pub fn zeros(topology: ModelTopology) -> Self {
        let layout = ParamLayout::new(&topology);
        Self { values: vec![0.0; layout.len()], topology, layout }
    }

    #[inline]
    pub fn topology(&self) -> &ModelTopology {
        &self.topology
    }

    #[inline]
    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access for optimizers. Callers must keep entries finite.
    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `2 × 2D` row-major gate projection.
    #[inline]
    pub fn gate_weight(&self, gate: usize) -> &[f64] {
        let o = self.layout.gate_weight(gate);
        &self.values[o..o + 4 * self.layout.dim]
    }

    #[inline]
    pub fn gate_bias(&self, gate: usize) -> [f64; 2] {
        let o = self.layout.gate_bias(gate);
        [self.values[o], self.values[o + 1]]
    }

    #[inline]
    pub fn attn_proj(&self) -> &[f64] {
        let o = self.layout.attn_proj();
        &self.values[o..o + self.layout.dim * self.layout.dim]
    }

    #[inline]
    pub fn attn_bias(&self) -> &[f64] {
        let o = self.layout.attn_bias();
        &self.values[o..o + self.layout.dim]
    }

    #[inline]
    pub fn attn_context(&self) -> &[f64] {
        let o = self.layout.attn_context();
        &self.values[o..o + self.layout.dim]
    }

    #[inline]
    pub fn cls_weight(&self) -> &[f64] {
        let o = self.layout.cls_weight();
        &self.values[o..o + self.layout.dim]
    }

    #[inline]
    pub fn cls_bias(&self) -> f64 {
        self.values[self.layout.cls_bias()]
    }
}

fn xavier(rng: &mut impl Rng, out: &mut [f64], fan_in: usize, fan_out: usize) {
    let a = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    for v in out {
        *v = rng.gen_range(-a..a);
    }
}

/// Xavier-uniform weights, zero biases, fully determined by `seed`.
pub fn init_params(topology: &ModelTopology, seed: u64) -> ModelParams {
    let mut params = ModelParams::zeros(topology.clone());
    let layout = params.layout;
    let d = topology.dim();
    let mut rng = rng::stream(&[seed, 0x1a17_9a8a]);
    let values = &mut params.values;
    for g in 0..topology.gate_count() {
        let o = layout.gate_weight(g);
        xavier(&mut rng, &mut values[o..o + 4 * d], 2 * d, 2);
    }
    let o = layout.attn_proj();
    xavier(&mut rng, &mut values[o..o + d * d], d, d);
    let o = layout.attn_context();
    xavier(&mut rng, &mut values[o..o + d], d, 1);
    let o = layout.cls_weight();
    xavier(&mut rng, &mut values[o..o + d], d, 1);
    params
}
