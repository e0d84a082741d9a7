//! Evaluation metrics. Spoof is the positive class and scores are spoof
//! posteriors: an utterance is flagged as spoof when its score is at or
//! above the threshold.

mod eer;
mod report;
mod tta;

pub use eer::{average_eer, compute_eer, pooled_eer, Eer};
pub use report::{build_report, EvalReport, RecordCounts, TtaSummary};
pub use tta::{delta_eer, tta_aggregate, TtaResult};

use alloc::string::String;

use crate::error::{invalid, Result};
use crate::model::Label;

/// One scored utterance view.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub utt_id: String,
    pub dataset_id: String,
    pub label: Label,
    pub view_id: u8,
    pub score: f64,
}

impl ScoreRecord {
    pub fn new(
        utt_id: impl Into<String>,
        dataset_id: impl Into<String>,
        label: Label,
        view_id: u8,
        score: f64,
    ) -> Result<Self> {
        let utt_id = utt_id.into();
        if label == Label::Unlabeled {
            return Err(invalid!("score record {utt_id} has no label"));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(invalid!("score {score} of {utt_id} is not a probability"));
        }
        Ok(Self { utt_id, dataset_id: dataset_id.into(), label, view_id, score })
    }

    #[inline]
    pub fn is_spoof(&self) -> bool {
        self.label == Label::Spoof
    }
}
