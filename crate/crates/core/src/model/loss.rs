use super::forward::FusionTrace;
use super::stack::Label;
use crate::error::{invalid, Result};
use crate::numerics::{bce_with_logit, js_divergence};

/// Per-class multipliers on the classification loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub bona_fide: f64,
    pub spoof: f64,
}

impl Default for ClassWeights {
    fn default() -> Self {
        Self { bona_fide: 1.0, spoof: 1.0 }
    }
}

impl ClassWeights {
    /// Inverse-frequency weights `w_c = N / (2·N_c)`.
    pub fn balanced(n_bona_fide: usize, n_spoof: usize) -> Result<Self> {
        if n_bona_fide == 0 || n_spoof == 0 {
            return Err(invalid!(
                "balanced class weights need both classes (bona fide {n_bona_fide}, spoof {n_spoof})"
            ));
        }
        let n = (n_bona_fide + n_spoof) as f64;
        Ok(Self { bona_fide: n / (2.0 * n_bona_fide as f64), spoof: n / (2.0 * n_spoof as f64) })
    }

    pub fn for_label(&self, label: Label) -> Result<f64> {
        match label {
            Label::BonaFide => Ok(self.bona_fide),
            Label::Spoof => Ok(self.spoof),
            Label::Unlabeled => Err(invalid!("loss requires a labeled utterance")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub cls: f64,
    pub cons: f64,
    pub lambda: f64,
}

pub(super) fn check_pair(clean: &FusionTrace, aug: &FusionTrace) -> Result<()> {
    let same_gates = clean.gates.len() == aug.gates.len()
        && clean.gates.iter().zip(&aug.gates).all(|(a, b)| a.level == b.level && a.index == b.index);
    if !same_gates {
        return Err(invalid!("clean and augmented traces come from different topologies"));
    }
    if clean.frames() != aug.frames() {
        return Err(invalid!(
            "clean view has {} frames, augmented view has {}",
            clean.frames(),
            aug.frames()
        ));
    }
    Ok(())
}

/// Class-weighted BCE over both views plus `lambda` times the mean gate JS
/// divergence between the views.
pub fn loss(
    clean: &FusionTrace,
    aug: &FusionTrace,
    label: Label,
    lambda: f64,
    weights: ClassWeights,
) -> Result<LossBreakdown> {
    check_pair(clean, aug)?;
    let y = label.target().ok_or_else(|| invalid!("loss requires a labeled utterance"))?;
    let w = weights.for_label(label)?;
    let cls = w * 0.5 * (bce_with_logit(clean.logit, y) + bce_with_logit(aug.logit, y));

    let mut js_sum = 0.0;
    for (gc, ga) in clean.gates.iter().zip(&aug.gates) {
        for (ac, aa) in gc.alphas.iter().zip(&ga.alphas) {
            js_sum += js_divergence(&ac.as_array(), &aa.as_array())?;
        }
    }
    let cons = js_sum / (clean.gates.len() * clean.frames()) as f64;
    Ok(LossBreakdown { total: cls + lambda * cons, cls, cons, lambda })
}
