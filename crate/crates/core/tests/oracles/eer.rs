//! Brute-force EER reference: sweeps every candidate threshold (above the
//! maximum, each midpoint between distinct scores, below the minimum),
//! counts errors directly at each, and intersects the resulting polyline
//! with the diagonal.

pub fn exhaustive_eer(scores: &[(f64, bool)]) -> f64 {
    let mut distinct: Vec<f64> = scores.iter().map(|s| s.0).collect();
    distinct.sort_by(|a, b| b.partial_cmp(a).unwrap());
    distinct.dedup();
    let mut thresholds = vec![f64::INFINITY];
    for w in distinct.windows(2) {
        thresholds.push(0.5 * (w[0] + w[1]));
    }
    thresholds.push(f64::NEG_INFINITY);

    let n_spoof = scores.iter().filter(|s| s.1).count() as f64;
    let n_bona = scores.iter().filter(|s| !s.1).count() as f64;
    let points: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&th| {
            let fa = scores.iter().filter(|s| !s.1 && s.0 >= th).count() as f64;
            let miss = scores.iter().filter(|s| s.1 && s.0 < th).count() as f64;
            (fa / n_bona, miss / n_spoof)
        })
        .collect();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let da = a.1 - a.0;
        let db = b.1 - b.0;
        if da > 0.0 && db <= 0.0 {
            if db == 0.0 {
                return b.0;
            }
            let t = da / (da - db);
            return a.0 + t * (b.0 - a.0);
        }
        if da == 0.0 {
            return a.0;
        }
    }
    panic!("polyline never crosses the diagonal")
}
