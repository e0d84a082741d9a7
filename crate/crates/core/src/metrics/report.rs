use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::eer::{average_eer, eer_from_pairs, pooled_eer};
use super::tta::{delta_eer, tta_aggregate};
use super::ScoreRecord;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordCounts {
    pub clean: usize,
    pub tta: usize,
    pub tta_utterances: usize,
    pub datasets: usize,
}

/// Per-dataset TTA diagnostics, computed on the utterances that have
/// augmented-view scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TtaSummary {
    pub clean_eer: BTreeMap<String, f64>,
    pub tta_eer: BTreeMap<String, f64>,
    /// `tta_eer - clean_eer` in percentage points.
    pub delta_eer: BTreeMap<String, f64>,
    pub mean_u_ale: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_dataset_eer: BTreeMap<String, f64>,
    pub avg_eer: f64,
    pub pooled_eer: f64,
    pub tta: Option<TtaSummary>,
    /// Provenance: config fingerprint and resolved settings.
    pub config: BTreeMap<String, String>,
    pub counts: RecordCounts,
}

type UttKey<'a> = (&'a str, &'a str);

fn group_by_dataset<'a>(
    records: impl Iterator<Item = &'a ScoreRecord>,
) -> BTreeMap<&'a str, Vec<&'a ScoreRecord>> {
    let mut map: BTreeMap<&str, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.dataset_id.as_str()).or_default().push(r);
    }
    map
}

fn eer_of(records: &[&ScoreRecord], dataset: &str) -> Result<f64> {
    eer_from_pairs(records.iter().map(|r| (r.score, r.is_spoof())))
        .map(|e| e.eer)
        .map_err(|e| invalid!("dataset {dataset}: {e}"))
}

/// Assembles the full evaluation report.
///
/// `clean` holds view-0 scores, one per utterance; `tta` holds augmented
/// view scores (`view ≥ 1`), and every utterance in it must also appear in
/// `clean`. An empty `tta` yields a report without TTA diagnostics.
pub fn build_report(
    clean: &[ScoreRecord],
    tta: &[ScoreRecord],
    config: BTreeMap<String, String>,
) -> Result<EvalReport> {
    let mut clean_index: BTreeMap<UttKey, &ScoreRecord> = BTreeMap::new();
    for r in clean {
        if r.view_id != 0 {
            return Err(invalid!("clean score file holds view {} of {}", r.view_id, r.utt_id));
        }
        if clean_index.insert((r.dataset_id.as_str(), r.utt_id.as_str()), r).is_some() {
            return Err(invalid!("duplicate clean score for {}", r.utt_id));
        }
    }

    let by_dataset = group_by_dataset(clean.iter());
    if by_dataset.is_empty() {
        return Err(invalid!("no clean scores"));
    }
    let mut per_dataset_eer = BTreeMap::new();
    for (ds, recs) in &by_dataset {
        per_dataset_eer.insert(String::from(*ds), eer_of(recs, ds)?);
    }
    let eers: Vec<f64> = per_dataset_eer.values().copied().collect();
    let avg_eer = average_eer(&eers)?;
    let pooled_eer = pooled_eer([clean])?;

    let mut views: BTreeMap<UttKey, Vec<ScoreRecord>> = BTreeMap::new();
    for r in tta {
        if r.view_id == 0 {
            return Err(invalid!("TTA score file holds the clean view of {}", r.utt_id));
        }
        let key = (r.dataset_id.as_str(), r.utt_id.as_str());
        if !clean_index.contains_key(&key) {
            return Err(invalid!(
                "TTA record for {} (dataset {}) has no clean score",
                r.utt_id,
                r.dataset_id
            ));
        }
        views.entry(key).or_default().push(r.clone());
    }

    let tta_summary = if views.is_empty() {
        None
    } else {
        let mut ensemble: Vec<ScoreRecord> = Vec::with_capacity(views.len());
        let mut u_ale: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for (key, v) in &views {
            let agg = tta_aggregate(v)?;
            let clean_rec = clean_index[key];
            if clean_rec.label != agg.label {
                return Err(invalid!("label of {} differs between clean and TTA scores", agg.utt_id));
            }
            let slot = u_ale.entry(key.0).or_insert((0.0, 0));
            slot.0 += agg.u_ale;
            slot.1 += 1;
            ensemble.push(ScoreRecord {
                utt_id: agg.utt_id,
                dataset_id: agg.dataset_id,
                label: agg.label,
                view_id: 0,
                score: agg.mean_posterior,
            });
        }
        let covered_clean = group_by_dataset(views.keys().map(|k| clean_index[k]));
        let ensemble_by_ds = group_by_dataset(ensemble.iter());
        let mut summary = TtaSummary {
            clean_eer: BTreeMap::new(),
            tta_eer: BTreeMap::new(),
            delta_eer: BTreeMap::new(),
            mean_u_ale: BTreeMap::new(),
        };
        for (ds, recs) in &ensemble_by_ds {
            let ens = eer_of(recs, ds)?;
            let cl = eer_of(&covered_clean[ds], ds)?;
            let (sum, n) = u_ale[ds];
            summary.tta_eer.insert(String::from(*ds), ens);
            summary.clean_eer.insert(String::from(*ds), cl);
            summary.delta_eer.insert(String::from(*ds), delta_eer(ens, cl));
            summary.mean_u_ale.insert(String::from(*ds), sum / n as f64);
        }
        Some(summary)
    };

    Ok(EvalReport {
        counts: RecordCounts {
            clean: clean.len(),
            tta: tta.len(),
            tta_utterances: views.len(),
            datasets: per_dataset_eer.len(),
        },
        per_dataset_eer,
        avg_eer,
        pooled_eer,
        tta: tta_summary,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Label;
    use alloc::format;

    fn rec(utt: &str, ds: &str, spoof: bool, view: u8, score: f64) -> ScoreRecord {
        let label = if spoof { Label::Spoof } else { Label::BonaFide };
        ScoreRecord::new(utt, ds, label, view, score).unwrap()
    }

    fn clean_set() -> Vec<ScoreRecord> {
        let mut v = Vec::new();
        for (i, s) in [0.9, 0.7, 0.4].iter().enumerate() {
            v.push(rec(&format!("s{i}"), "A", true, 0, *s));
        }
        for (i, s) in [0.6, 0.2, 0.1].iter().enumerate() {
            v.push(rec(&format!("b{i}"), "A", false, 0, *s));
        }
        v
    }

    #[test]
    fn clean_only_report() {
        let r = build_report(&clean_set(), &[], BTreeMap::new()).unwrap();
        assert!(r.tta.is_none());
        assert_eq!(r.per_dataset_eer.len(), 1);
        assert_eq!(r.avg_eer, r.pooled_eer);
        assert_eq!(r.counts.tta, 0);
    }

    #[test]
    fn identical_single_view_tta_has_zero_delta() {
        let clean = clean_set();
        let tta: Vec<_> = clean.iter().map(|r| ScoreRecord { view_id: 1, ..r.clone() }).collect();
        let r = build_report(&clean, &tta, BTreeMap::new()).unwrap();
        let t = r.tta.unwrap();
        assert_eq!(t.delta_eer["A"], 0.0);
        assert_eq!(t.clean_eer["A"], r.per_dataset_eer["A"]);
    }

    #[test]
    fn orphan_tta_record_is_named() {
        let tta = [rec("ghost", "A", true, 1, 0.3)];
        let err = build_report(&clean_set(), &tta, BTreeMap::new()).unwrap_err();
        assert!(format!("{err}").contains("ghost"));
    }

    #[test]
    fn view_roles_are_enforced() {
        let mut clean = clean_set();
        clean[0].view_id = 2;
        assert!(build_report(&clean, &[], BTreeMap::new()).is_err());
        let tta = [rec("s0", "A", true, 0, 0.3)];
        assert!(build_report(&clean_set(), &tta, BTreeMap::new()).is_err());
        let mut dup = clean_set();
        dup.push(dup[0].clone());
        assert!(build_report(&dup, &[], BTreeMap::new()).is_err());
    }
}
