use alloc::vec::Vec;

use super::ScoreRecord;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eer {
    pub eer: f64,
    /// Score of the first operating point (scanning from the strictest
    /// threshold down) at which the miss rate no longer exceeds the false
    /// alarm rate.
    pub threshold: f64,
}

/// Equal error rate with linear interpolation between adjacent ROC vertices.
///
/// Vertices are the operating points at every distinct score, plus the
/// all-reject point `(FPR, FNR) = (0, 1)`. Equal scores form one vertex.
pub fn compute_eer(records: &[ScoreRecord]) -> Result<Eer> {
    eer_from_pairs(records.iter().map(|r| (r.score, r.is_spoof())))
}

/// EER of the concatenation of several score sets under one threshold.
pub fn pooled_eer<'a, I>(groups: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [ScoreRecord]>,
{
    let pairs = groups.into_iter().flat_map(|g| g.iter().map(|r| (r.score, r.is_spoof())));
    Ok(eer_from_pairs(pairs)?.eer)
}

/// Unweighted mean of per-dataset EERs.
pub fn average_eer(eers: &[f64]) -> Result<f64> {
    if eers.is_empty() {
        return Err(invalid!("average EER of an empty list"));
    }
    Ok(eers.iter().sum::<f64>() / eers.len() as f64)
}

pub(crate) fn eer_from_pairs(pairs: impl Iterator<Item = (f64, bool)>) -> Result<Eer> {
    let mut scored: Vec<(f64, bool)> = pairs.collect();
    let n_spoof = scored.iter().filter(|(_, s)| *s).count();
    let n_bona = scored.len() - n_spoof;
    if n_spoof == 0 || n_bona == 0 {
        return Err(invalid!("EER needs both classes (spoof {n_spoof}, bona fide {n_bona})"));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (ns, nb) = (n_spoof as f64, n_bona as f64);

    // Walk thresholds from the highest score down. Accepted-as-spoof counts
    // grow monotonically, so FPR rises and FNR falls.
    let mut prev = (0.0f64, 1.0f64);
    let (mut spoof_above, mut bona_above) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let threshold = scored[i].0;
        while i < scored.len() && scored[i].0 == threshold {
            if scored[i].1 {
                spoof_above += 1;
            } else {
                bona_above += 1;
            }
            i += 1;
        }
        let fpr = bona_above as f64 / nb;
        let fnr = (n_spoof - spoof_above) as f64 / ns;
        if fnr <= fpr {
            return Ok(Eer { eer: cross(prev, (fpr, fnr)), threshold });
        }
        prev = (fpr, fnr);
    }
    unreachable!("the last vertex has FNR = 0")
}

/// Point where segment `a → b` meets `FPR = FNR`, given `FNR > FPR` at `a`
/// and `FNR ≤ FPR` at `b`.
fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    let da = a.1 - a.0;
    let db = b.1 - b.0;
    if db == 0.0 {
        return b.0;
    }
    let t = da / (da - db);
    a.0 + t * (b.0 - a.0)
}
