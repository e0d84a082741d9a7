use alloc::string::String;
use alloc::vec::Vec;

use super::ScoreRecord;
use crate::error::{invalid, Result};
use crate::model::Label;
use crate::numerics::binary_entropy;

/// Test-time-augmentation summary of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct TtaResult {
    pub utt_id: String,
    pub dataset_id: String,
    pub label: Label,
    /// Arithmetic mean of the per-view spoof posteriors.
    pub mean_posterior: f64,
    /// Mean binary prediction entropy across views, in nats.
    pub u_ale: f64,
    pub view_posteriors: Vec<f64>,
}

/// Aggregates the augmented-view scores of one utterance.
pub fn tta_aggregate(views: &[ScoreRecord]) -> Result<TtaResult> {
    let first = views.first().ok_or_else(|| invalid!("TTA aggregation needs at least one view"))?;
    if let Some(r) = views.iter().find(|r| r.utt_id != first.utt_id || r.dataset_id != first.dataset_id) {
        return Err(invalid!("TTA views mix utterances {} and {}", first.utt_id, r.utt_id));
    }
    if views.iter().any(|r| r.label != first.label) {
        return Err(invalid!("TTA views of {} disagree on the label", first.utt_id));
    }
    let k = views.len() as f64;
    let view_posteriors: Vec<f64> = views.iter().map(|r| r.score).collect();
    let mean_posterior = view_posteriors.iter().sum::<f64>() / k;
    let mut entropy = 0.0;
    for &p in &view_posteriors {
        entropy += binary_entropy(p)?;
    }
    Ok(TtaResult {
        utt_id: first.utt_id.clone(),
        dataset_id: first.dataset_id.clone(),
        label: first.label,
        mean_posterior,
        u_ale: entropy / k,
        view_posteriors,
    })
}

/// Ensemble EER minus clean EER, in percentage points.
pub fn delta_eer(ensemble_eer: f64, clean_eer: f64) -> f64 {
    100.0 * (ensemble_eer - clean_eer)
}
