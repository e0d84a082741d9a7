use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Lower clamp applied to probabilities inside the KL logarithms of
/// [`js_divergence`]. Keeps the divergence finite for saturated gates.
pub const KL_FLOOR: f64 = 1e-12;

const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the 1-simplex: two non-negative weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex2 {
    pub p1: f64,
    pub p2: f64,
}

impl Simplex2 {
    pub const UNIFORM: Simplex2 = Simplex2 { p1: 0.5, p2: 0.5 };

    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) || (p1 + p2 - 1.0).abs() > 1e-12 {
            return Err(invalid!("({p1}, {p2}) is not on the 1-simplex"));
        }
        Ok(Self { p1, p2 })
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 2] {
        [self.p1, self.p2]
    }
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(invalid!("softmax of an empty vector"));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(invalid!("softmax input {i} is not finite"));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|x| libm::exp(x - max)).collect();
    let sum: f64 = out.iter().sum();
    for o in &mut out {
        *o /= sum;
    }
    Ok(out)
}

/// Two-way softmax used by every fusion gate. Inputs must be finite.
#[inline]
pub fn softmax2(z1: f64, z2: f64) -> Simplex2 {
    // p1 = 1 / (1 + exp(z2 - z1)); p2 is formed from the same exponential so
    // the pair sums to one up to a single rounding.
    let (p1, p2) = if z1 >= z2 {
        let e = libm::exp(z2 - z1);
        let s = 1.0 + e;
        (1.0 / s, e / s)
    } else {
        let e = libm::exp(z1 - z2);
        let s = 1.0 + e;
        (e / s, 1.0 / s)
    };
    Simplex2 { p1, p2 }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit against a 0/1 target, in the overflow-free
/// form `log(1 + exp(-|z|)) + max(z, 0) - z·y`.
#[inline]
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    libm::log1p(libm::exp(-z.abs())) + z.max(0.0) - z * y
}

/// Entropy of the Bernoulli distribution `(p, 1 - p)` in nats, with
/// `0 · ln 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid!("binary_entropy: {p} is not a probability"));
    }
    Ok(xlnx(p) + xlnx(1.0 - p))
}

#[inline]
fn xlnx(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        -p * libm::log(p)
    }
}

fn check_simplex(p: &[f64], name: &str) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&x)) || (sum - 1.0).abs() > SIMPLEX_TOL
    {
        return Err(invalid!("{name} is not a probability vector (sum {sum})"));
    }
    Ok(())
}

#[inline]
fn clamped_ln(p: f64) -> f64 {
    libm::log(p.max(KL_FLOOR))
}

#[inline]
fn kl_to_midpoint(p: &[f64], m: &[f64]) -> f64 {
    p.iter().zip(m).map(|(&pi, &mi)| pi * (clamped_ln(pi) - clamped_ln(mi))).sum()
}

/// Jensen–Shannon divergence `½KL(p‖m) + ½KL(q‖m)` with `m = (p + q)/2`.
///
/// Symmetric bit-for-bit: swapping the arguments only swaps the operands of
/// commutative additions.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(invalid!("js_divergence length mismatch ({} vs {})", p.len(), q.len()));
    }
    check_simplex(p, "p")?;
    check_simplex(q, "q")?;
    Ok(js_unchecked(p, q))
}

pub(crate) fn js_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    0.5 * (kl_to_midpoint(p, &m) + kl_to_midpoint(q, &m))
}

/// Gradient of [`js_divergence`] (including the log clamp) with respect to
/// its first argument. By symmetry, the gradient with respect to `q` is
/// `js_divergence_grad(q, p)`.
pub fn js_divergence_grad(p: &[f64], q: &[f64], out: &mut [f64]) {
    for ((o, &pi), &qi) in out.iter_mut().zip(p).zip(q) {
        let mi = 0.5 * (pi + qi);
        let dp = if pi > KL_FLOOR { 1.0 } else { 0.0 };
        let dm = if mi > KL_FLOOR { 1.0 } else { 0.0 };
        *o = 0.5 * (clamped_ln(pi) - clamped_ln(mi)) + 0.5 * dp - 0.5 * dm;
    }
}
