//! Score and TTA-aggregate JSON Lines.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use raptor_core::metrics::{ScoreRecord, TtaResult};
use raptor_core::model::Label;

use crate::error::{Error, Result};
use crate::jsonl::{read_jsonl, write_jsonl};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreLine {
    pub utt: String,
    pub dataset: String,
    pub label: u8,
    pub view: u8,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

impl ScoreLine {
    pub fn new(r: &ScoreRecord, fingerprint: &str) -> Self {
        Self {
            utt: r.utt_id.clone(),
            dataset: r.dataset_id.clone(),
            label: r.label.code(),
            view: r.view_id,
            score: r.score,
            fingerprint: Some(fingerprint.to_string()),
        }
    }

    pub fn to_record(&self) -> Result<ScoreRecord> {
        let label = Label::from_code(self.label)
            .ok_or_else(|| Error::Domain(format!("score for {}: invalid label {}", self.utt, self.label)))?;
        Ok(ScoreRecord::new(self.utt.clone(), self.dataset.clone(), label, self.view, self.score)?)
    }
}

/// Score records plus the set of fingerprints they carry. Lines without a
/// fingerprint contribute `None`.
pub struct ScoreFile {
    pub records: Vec<ScoreRecord>,
    pub fingerprints: BTreeSet<Option<String>>,
}

pub fn read_scores(path: &Path) -> Result<ScoreFile> {
    let lines: Vec<ScoreLine> = read_jsonl(path)?;
    let records = lines
        .iter()
        .map(ScoreLine::to_record)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
    Ok(ScoreFile { records, fingerprints: lines.into_iter().map(|l| l.fingerprint).collect() })
}

pub fn write_scores(path: &Path, records: &[ScoreRecord], fingerprint: &str) -> Result<()> {
    let lines: Vec<ScoreLine> = records.iter().map(|r| ScoreLine::new(r, fingerprint)).collect();
    write_jsonl(path, &lines)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtaLine {
    pub utt: String,
    pub dataset: String,
    pub label: u8,
    pub views: Vec<f64>,
    pub mean_posterior: f64,
    pub u_ale: f64,
    pub fingerprint: String,
}

impl TtaLine {
    pub fn new(r: &TtaResult, fingerprint: &str) -> Self {
        Self {
            utt: r.utt_id.clone(),
            dataset: r.dataset_id.clone(),
            label: r.label.code(),
            views: r.view_posteriors.clone(),
            mean_posterior: r.mean_posterior,
            u_ale: r.u_ale,
            fingerprint: fingerprint.to_string(),
        }
    }
}
