//! Independent reference computations used by the integration tests.
//! Nothing here calls the library's numerical kernels.
#![allow(dead_code, clippy::needless_range_loop)]

use relaydiv::linalg::{CMatrix, C64};

/// Singular values by one-sided Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &CMatrix) -> Vec<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| (0..m).map(|r| a[(r, c)]).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|v| v.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|v| v.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // Rotate column q by the phase of gamma so the pair is real.
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let x = cols[p][r];
                    let y = cols[q][r] * phase;
                    cols[p][r] = x * c - y * s;
                    cols[q][r] = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank with cutoff `K * sigma_max * 1e-12`.
pub fn oracle_rank(a: &CMatrix) -> usize {
    let sv = jacobi_singular_values(a);
    let cut = a.ncols() as f64 * sv.first().copied().unwrap_or(0.0) * 1e-12;
    sv.iter().filter(|&&s| s > cut && s > 0.0).count()
}

/// `ln det(A)` of a Hermitian positive definite matrix by Cholesky.
pub fn cholesky_logdet(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut l = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        assert!(d > 0.0, "not positive definite");
        let djj = d.sqrt();
        l[j][j] = C64::new(djj, 0.0);
        logdet += 2.0 * djj.ln();
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / djj;
        }
    }
    logdet
}

/// `(1/2N) log2 det(I + rho H H^H)`.
pub fn logdet_mi(h: &CMatrix, rho: f64) -> f64 {
    let n = h.nrows();
    let a = CMatrix::identity(n, n) + h * h.adjoint() * C64::new(rho, 0.0);
    cholesky_logdet(&a) / (2.0 * n as f64 * std::f64::consts::LN_2)
}

/// Trapezoid rule on `[0, t_max]` with step `h`; the integrand is analytic
/// and decays doubly exponentially, so the error is far below rounding.
pub fn trapezoid(f: impl Fn(f64) -> f64, t_max: f64, h: f64) -> f64 {
    let steps = (t_max / h).ceil() as usize;
    let mut sum = 0.5 * f(0.0);
    let mut comp = 0.0;
    for i in 1..=steps {
        // Kahan summation
        let y = f(i as f64 * h) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum * h
}

/// `K_1(x) = int_0^inf exp(-x cosh t) cosh t dt`.
pub fn k1_quadrature(x: f64) -> f64 {
    // Integrand is below 1e-300 once x cosh t > 700.
    let t_max = (710.0 / x).acosh().max(1.0);
    trapezoid(|t| (-x * t.cosh()).exp() * t.cosh(), t_max, 1.0 / 64.0)
}

/// `int_0^inf exp(-v) g(v) dv` after substituting `v = e^s`, which
/// turns the integrand smooth with doubly exponential decay at both ends.
pub fn exponential_expectation(g: impl Fn(f64) -> f64) -> f64 {
    let lo = -80.0;
    let shifted = |t: f64| {
        let v = (lo + t).exp();
        (-v).exp() * v * g(v)
    };
    trapezoid(shifted, 4.5 - lo, 1.0 / 128.0)
}

/// `P(|f|^2 |h|^2 < c)` for independent unit exponentials, conditioning on `v = |h|^2`.
pub fn product_exponential_below(c: f64) -> f64 {
    exponential_expectation(|v| -(-c / v).exp_m1())
}

/// `P(|f|^2 |h|^2 / (1 + |h|^2) < tau)`.
pub fn scaled_product_below(tau: f64) -> f64 {
    exponential_expectation(|v| -(-tau * (1.0 + v) / v).exp_m1())
}

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
