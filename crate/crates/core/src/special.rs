//! Modified Bessel function `K_1` and the product-Rayleigh distribution.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Modified Bessel function of the second kind, order one.
///
/// Power series for `x < 2`, Steed's continued fraction (Temme's method)
/// for `x >= 2`. Underflows to zero for very large `x`.
pub fn bessel_k1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("K1 requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x < 2.0 { k1_series(x) } else { k1_continued_fraction(x) })
}

/// `K1(x) = 1/x + ln(x/2) I1(x) - (x/4) S(x)` with
/// `S(x) = sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k! (k+1)!)`.
fn k1_series(x: f64) -> f64 {
    let (i1, s) = series_parts(x);
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * s
}

/// Returns `(I1(x), S(x))` for the small-argument series.
fn series_parts(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    // term_k = (x^2/4)^k / (k! (k+1)!)
    let mut term = 1.0;
    let mut psi_a = -EULER_GAMMA; // psi(k+1)
    let mut psi_b = 1.0 - EULER_GAMMA; // psi(k+2)
    let mut i1_sum = 0.0;
    let mut psi_sum = 0.0;
    for k in 0..60 {
        i1_sum += term;
        psi_sum += (psi_a + psi_b) * term;
        let kf = k as f64;
        psi_a += 1.0 / (kf + 1.0);
        psi_b += 1.0 / (kf + 2.0);
        term *= y / ((kf + 1.0) * (kf + 2.0));
        if term < 1e-18 * i1_sum {
            break;
        }
    }
    (0.5 * x * i1_sum, psi_sum)
}

fn k1_continued_fraction(x: f64) -> f64 {
    // Steed's algorithm for CF2 with nu = 0, yielding K0 and K1 together.
    const EPS: f64 = 1e-17;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    k0 * (x + 0.5 - h) / x
}

/// CDF of `|f||h|` for independent `CN(0, 1)` coefficients: `1 - 2x K1(2x)`.
pub fn product_rayleigh_cdf(x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let t = 2.0 * x;
    if t < 2.0 {
        // 1 - t K1(t) = (t^2/4) S(t) - t ln(t/2) I1(t); the leading 1 cancels exactly.
        let (i1, s) = series_parts(t);
        let v = 0.25 * t * t * s - t * (0.5 * t).ln() * i1;
        return v.clamp(0.0, 1.0);
    }
    let k1 = k1_continued_fraction(t);
    (1.0 - t * k1).clamp(0.0, 1.0)
}

/// `F1(x) = (2/x) K1(2/x)`, the probability that `|f||h| > 1/x`.
pub fn product_rayleigh_tail_at_inverse(x: f64) -> f64 {
    1.0 - product_rayleigh_cdf(1.0 / x)
}
