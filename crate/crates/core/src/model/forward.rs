use alloc::vec;
use alloc::vec::Vec;

use super::params::ModelParams;
use super::stack::LayerStack;
use crate::error::{invalid, numeric_fault, Result};
use crate::numerics::{dot, sigmoid, softmax, softmax2, Matrix, Simplex2};

/// Per-frame routing weights of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTrace {
    pub level: usize,
    pub index: usize,
    pub alphas: Vec<Simplex2>,
}

/// Activations retained for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates {
    /// Input layers widened to `f64`, each `T × D`.
    pub inputs: Vec<Matrix>,
    /// Output slots of every fusion level, each `T × D`.
    pub fused: Vec<Vec<Matrix>>,
    /// `tanh(Wₐ h(t) + bₐ)` per frame, `T × D`.
    pub attn_hidden: Matrix,
    /// Attention-pooled utterance vector.
    pub pooled: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionTrace {
    /// One entry per gate, level-major.
    pub gates: Vec<GateTrace>,
    /// Attention weights over frames.
    pub attention: Vec<f64>,
    pub logit: f64,
    pub posterior: f64,
    pub intermediates: Option<Intermediates>,
}

impl FusionTrace {
    pub fn frames(&self) -> usize {
        self.attention.len()
    }
}

fn widen(stack: &LayerStack) -> Vec<Matrix> {
    let (t, d) = (stack.frames(), stack.dim());
    (0..stack.layers())
        .map(|l| {
            let data = stack.layer(l).iter().map(|&v| f64::from(v)).collect();
            Matrix::new(t, d, data).expect("stack features are finite and sized")
        })
        .collect()
}

/// Runs the detector on one layer stack.
pub fn forward(stack: &LayerStack, params: &ModelParams, keep_intermediates: bool) -> Result<FusionTrace> {
    let topo = params.topology();
    if stack.layers() != topo.layers() || stack.dim() != topo.dim() {
        return Err(invalid!(
            "utterance {} has L={} D={}, model expects L={} D={}",
            stack.utt_id,
            stack.layers(),
            stack.dim(),
            topo.layers(),
            topo.dim()
        ));
    }
    let (frames, dim) = (stack.frames(), stack.dim());
    let inputs = widen(stack);

    let mut gates = Vec::with_capacity(topo.gate_count());
    let mut fused: Vec<Vec<Matrix>> = Vec::with_capacity(topo.levels().len());
    let mut gate_id = 0;
    for (level_idx, level) in topo.levels().iter().enumerate() {
        let slots: &[Matrix] = match fused.last() {
            Some(prev) => prev,
            None => &inputs,
        };
        let mut outputs = Vec::with_capacity(level.output_slots());
        for (index, &[a, b]) in level.gates.iter().enumerate() {
            let w = params.gate_weight(gate_id);
            let bias = params.gate_bias(gate_id);
            let (wa1, wb1) = w[..2 * dim].split_at(dim);
            let (wa2, wb2) = w[2 * dim..].split_at(dim);
            let (ha, hb) = (&slots[a], &slots[b]);
            let mut out = Matrix::zeros(frames, dim);
            let mut alphas = Vec::with_capacity(frames);
            for t in 0..frames {
                let (xa, xb) = (ha.row(t), hb.row(t));
                let z1 = dot(wa1, xa) + dot(wb1, xb) + bias[0];
                let z2 = dot(wa2, xa) + dot(wb2, xb) + bias[1];
                if !(z1.is_finite() && z2.is_finite()) {
                    return Err(numeric_fault!(
                        "gate (level {level_idx}, index {index}) produced a non-finite logit at frame {t} of {}",
                        stack.utt_id
                    ));
                }
                let alpha = softmax2(z1, z2);
                for ((o, &va), &vb) in out.row_mut(t).iter_mut().zip(xa).zip(xb) {
                    *o = alpha.p1 * va + alpha.p2 * vb;
                }
                alphas.push(alpha);
            }
            outputs.push(out);
            gates.push(GateTrace { level: level_idx, index, alphas });
            gate_id += 1;
        }
        if let Some(p) = level.pass_through {
            outputs.push(slots[p].clone());
        }
        fused.push(outputs);
    }

    let top = &fused.last().expect("topology has at least one level")[0];
    let proj = params.attn_proj();
    let proj_bias = params.attn_bias();
    let context = params.attn_context();
    let mut attn_hidden = Matrix::zeros(frames, dim);
    let mut scores = vec![0.0; frames];
    for (t, score) in scores.iter_mut().enumerate() {
        let h = top.row(t);
        let u = attn_hidden.row_mut(t);
        for (r, u_r) in u.iter_mut().enumerate() {
            *u_r = libm::tanh(dot(&proj[r * dim..(r + 1) * dim], h) + proj_bias[r]);
        }
        *score = dot(context, u);
    }
    let attention =
        softmax(&scores).map_err(|_| numeric_fault!("non-finite attention score for {}", stack.utt_id))?;
    let mut pooled = vec![0.0; dim];
    for (t, &beta) in attention.iter().enumerate() {
        for (p, &h) in pooled.iter_mut().zip(top.row(t)) {
            *p += beta * h;
        }
    }
    let logit = dot(params.cls_weight(), &pooled) + params.cls_bias();
    if !logit.is_finite() {
        return Err(numeric_fault!("non-finite output logit for {}", stack.utt_id));
    }

    let intermediates = keep_intermediates.then_some(Intermediates { inputs, fused, attn_hidden, pooled });
    Ok(FusionTrace { gates, attention, logit, posterior: sigmoid(logit), intermediates })
}
