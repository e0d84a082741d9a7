use alloc::vec;
use alloc::vec::Vec;

use super::forward::{forward, FusionTrace, Intermediates};
use super::loss::{loss, ClassWeights, LossBreakdown};
use super::params::ModelParams;
use super::stack::{Label, LayerStack};
use crate::error::{invalid, numeric_fault, Result};
use crate::numerics::linalg::{matvec_t_acc, outer_acc};
use crate::numerics::{dot, js_divergence_grad, sigmoid, Matrix};

/// Loss of one clean/augmented pair and its exact gradient with respect to
/// every parameter (same layout as [`ModelParams::values`]).
pub fn loss_and_grad(
    clean: &LayerStack,
    aug: &LayerStack,
    label: Label,
    params: &ModelParams,
    lambda: f64,
    weights: ClassWeights,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let y = label.target().ok_or_else(|| invalid!("utterance {} is unlabeled", clean.utt_id))?;
    let w = weights.for_label(label)?;
    let tc = forward(clean, params, true)?;
    let ta = forward(aug, params, true)?;
    let breakdown = loss(&tc, &ta, label, lambda, weights)?;

    let frames = tc.frames();
    let scale = lambda / (tc.gates.len() * frames) as f64;
    let mut dalpha_clean = Vec::with_capacity(tc.gates.len());
    let mut dalpha_aug = Vec::with_capacity(tc.gates.len());
    for (gc, ga) in tc.gates.iter().zip(&ta.gates) {
        let mut rows_c = Vec::with_capacity(frames);
        let mut rows_a = Vec::with_capacity(frames);
        for (ac, aa) in gc.alphas.iter().zip(&ga.alphas) {
            let (p, q) = (ac.as_array(), aa.as_array());
            let mut gp = [0.0; 2];
            let mut gq = [0.0; 2];
            js_divergence_grad(&p, &q, &mut gp);
            js_divergence_grad(&q, &p, &mut gq);
            rows_c.push([scale * gp[0], scale * gp[1]]);
            rows_a.push([scale * gq[0], scale * gq[1]]);
        }
        dalpha_clean.push(rows_c);
        dalpha_aug.push(rows_a);
    }

    let mut grad = vec![0.0; params.len()];
    let dlogit_clean = w * 0.5 * (sigmoid(tc.logit) - y);
    let dlogit_aug = w * 0.5 * (sigmoid(ta.logit) - y);
    backward(&tc, params, dlogit_clean, &dalpha_clean, &mut grad);
    backward(&ta, params, dlogit_aug, &dalpha_aug, &mut grad);

    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(numeric_fault!("non-finite gradient at parameter {i} for utterance {}", clean.utt_id));
    }
    Ok((breakdown, grad))
}

/// Accumulates into `grad` the gradient of a loss whose partials are
/// `dlogit` on the output logit and `dalpha[g][t]` on gate `g`'s routing
/// weights at frame `t`.
fn backward(
    trace: &FusionTrace,
    params: &ModelParams,
    dlogit: f64,
    dalpha: &[Vec<[f64; 2]>],
    grad: &mut [f64],
) {
    let Intermediates { inputs, fused, attn_hidden, pooled } =
        trace.intermediates.as_ref().expect("backward needs a trace with intermediates");
    let layout = params.layout();
    let topo = params.topology();
    let dim = topo.dim();
    let frames = trace.frames();

    // Classifier.
    let o = layout.cls_weight();
    for (g, &p) in grad[o..o + dim].iter_mut().zip(pooled) {
        *g += dlogit * p;
    }
    grad[layout.cls_bias()] += dlogit;
    let dpooled: Vec<f64> = params.cls_weight().iter().map(|w| dlogit * w).collect();

    // Attention pool.
    let top = &fused.last().expect("at least one level")[0];
    let beta = &trace.attention;
    let mut dtop = Matrix::zeros(frames, dim);
    let dbeta: Vec<f64> = (0..frames).map(|t| dot(&dpooled, top.row(t))).collect();
    let mean_dbeta: f64 = beta.iter().zip(&dbeta).map(|(b, d)| b * d).sum();
    let context = params.attn_context();
    let proj = params.attn_proj();
    let mut dpre = vec![0.0; dim];
    for t in 0..frames {
        let h = top.row(t);
        let u = attn_hidden.row(t);
        let dscore = beta[t] * (dbeta[t] - mean_dbeta);
        let dh = dtop.row_mut(t);
        for (d, &p) in dh.iter_mut().zip(&dpooled) {
            *d += beta[t] * p;
        }
        let o = layout.attn_context();
        for (g, &uv) in grad[o..o + dim].iter_mut().zip(u) {
            *g += dscore * uv;
        }
        for ((dp, &c), &uv) in dpre.iter_mut().zip(context).zip(u) {
            *dp = dscore * c * (1.0 - uv * uv);
        }
        let o = layout.attn_proj();
        outer_acc(&mut grad[o..o + dim * dim], &dpre, h);
        let o = layout.attn_bias();
        for (g, &dp) in grad[o..o + dim].iter_mut().zip(&dpre) {
            *g += dp;
        }
        matvec_t_acc(proj, dim, dim, &dpre, dh);
    }

    // Fusion levels, top-down.
    let mut gate_ids: Vec<usize> = Vec::with_capacity(topo.levels().len());
    let mut next = 0;
    for level in topo.levels() {
        gate_ids.push(next);
        next += level.gates.len();
    }
    let mut dout: Vec<Matrix> = vec![dtop];
    for (level_idx, level) in topo.levels().iter().enumerate().rev() {
        let slots: &[Matrix] = if level_idx == 0 { inputs } else { &fused[level_idx - 1] };
        let need_input_grad = level_idx > 0;
        let mut din: Vec<Matrix> = if need_input_grad {
            (0..level.input_slots()).map(|_| Matrix::zeros(frames, dim)).collect()
        } else {
            Vec::new()
        };
        for (index, &[a, b]) in level.gates.iter().enumerate() {
            let gate = gate_ids[level_idx] + index;
            let alphas = &trace.gates[gate].alphas;
            let w = params.gate_weight(gate);
            let wo = layout.gate_weight(gate);
            let bo = layout.gate_bias(gate);
            let mut x = vec![0.0; 2 * dim];
            for t in 0..frames {
                let (xa, xb) = (slots[a].row(t), slots[b].row(t));
                let dh = dout[index].row(t);
                let alpha = alphas[t];
                let da1 = dot(dh, xa) + dalpha[gate][t][0];
                let da2 = dot(dh, xb) + dalpha[gate][t][1];
                let s = alpha.p1 * da1 + alpha.p2 * da2;
                let dz = [alpha.p1 * (da1 - s), alpha.p2 * (da2 - s)];
                x[..dim].copy_from_slice(xa);
                x[dim..].copy_from_slice(xb);
                outer_acc(&mut grad[wo..wo + 4 * dim], &dz, &x);
                grad[bo] += dz[0];
                grad[bo + 1] += dz[1];
                if need_input_grad {
                    let mut dx = vec![0.0; 2 * dim];
                    matvec_t_acc(w, 2, 2 * dim, &dz, &mut dx);
                    for ((d, &g), &x) in din[a].row_mut(t).iter_mut().zip(dh).zip(&dx[..dim]) {
                        *d += alpha.p1 * g + x;
                    }
                    for ((d, &g), &x) in din[b].row_mut(t).iter_mut().zip(dh).zip(&dx[dim..]) {
                        *d += alpha.p2 * g + x;
                    }
                }
            }
        }
        if need_input_grad {
            if let Some(p) = level.pass_through {
                let carried = dout[level.gates.len()].clone();
                for (d, &c) in din[p].as_mut_slice().iter_mut().zip(carried.as_slice()) {
                    *d += c;
                }
            }
            dout = din;
        }
    }
}
