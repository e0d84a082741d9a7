use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Zero crossings of the sinc kernel on each side, at the output cutoff.
const ZERO_CROSSINGS: f64 = 16.0;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.95;

/// Blackman window on `[-1, 1]`.
fn blackman(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let a = core::f64::consts::PI * (x + 1.0);
    0.42 - 0.5 * libm::cos(a) + 0.08 * libm::cos(2.0 * a)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = core::f64::consts::PI * x;
        libm::sin(px) / px
    }
}

/// Band-limited resampling with a Blackman-windowed sinc kernel.
///
/// The output has `round(n · to / from)` samples; output sample `j` sits at
/// input time `j · from / to`.
pub fn resample(samples: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    if from == 0 || to == 0 {
        return Err(invalid!("sample rates must be positive ({from} -> {to})"));
    }
    if from == to {
        return Ok(samples.to_vec());
    }
    let n_in = samples.len() as u64;
    let n_out = (n_in * u64::from(to) + u64::from(from) / 2) / u64::from(from);
    let step = f64::from(from) / f64::from(to);
    // Cutoff in cycles per input sample, relative to input Nyquist.
    let cutoff = ROLLOFF * (f64::from(to) / f64::from(from)).min(1.0);
    let half_width = ZERO_CROSSINGS / cutoff;

    let mut out = Vec::with_capacity(n_out as usize);
    for j in 0..n_out {
        let center = j as f64 * step;
        let lo = libm::ceil(center - half_width).max(0.0) as usize;
        let hi = (libm::floor(center + half_width) as i64).min(n_in as i64 - 1);
        let mut acc = 0.0;
        if hi >= 0 {
            for (k, &x) in samples.iter().enumerate().take(hi as usize + 1).skip(lo) {
                let dx = k as f64 - center;
                acc += x * cutoff * sinc(cutoff * dx) * blackman(dx / half_width);
            }
        }
        out.push(acc);
    }
    Ok(out)
}
