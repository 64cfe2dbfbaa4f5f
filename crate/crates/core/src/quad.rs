//! Shared quadrature building blocks: a 15-point Gauss-Legendre panel rule
//! and an adaptive bisection driver used by the kernel inversion and the
//! improper-integral routine.

use crate::error::{Error, Result};

/// 15-point Gauss-Legendre nodes and weights on [-1, 1].
const GL15: [(f64, f64); 15] = [
    (-9.87992518020485377e-01, 3.07532419961186465e-02),
    (-9.37273392400705951e-01, 7.03660474881080689e-02),
    (-8.48206583410427206e-01, 1.07159220467171773e-01),
    (-7.24417731360170070e-01, 1.39570677926153908e-01),
    (-5.70972172608538830e-01, 1.66269205816993781e-01),
    (-3.94151347077563385e-01, 1.86161000015561878e-01),
    (-2.01194093997434514e-01, 1.98431485327111246e-01),
    (0.00000000000000000e+00, 2.02578241925560898e-01),
    (2.01194093997434514e-01, 1.98431485327111246e-01),
    (3.94151347077563385e-01, 1.86161000015561878e-01),
    (5.70972172608538830e-01, 1.66269205816993781e-01),
    (7.24417731360170070e-01, 1.39570677926153908e-01),
    (8.48206583410427206e-01, 1.07159220467171773e-01),
    (9.37273392400705951e-01, 7.03660474881080689e-02),
    (9.87992518020485377e-01, 3.07532419961186465e-02),
];

/// Single Gauss-Legendre panel over [a, b].
#[inline]
pub fn gl15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL15 {
        acc += w * f(c + h * x);
    }
    acc * h
}

/// Adaptive Gauss-Legendre integration of `f` over [a, b] to absolute
/// tolerance `tol`. The error indicator compares one panel against its two
/// halves; panels are bisected until the indicator falls below the local
/// tolerance budget.
pub fn adaptive_gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = gl15(f, a, m);
        let right = gl15(f, m, b);
        let err = (left + right - whole).abs();
        if err <= tol || (b - a) < 1e-300 {
            return Ok(left + right);
        }
        if depth == 0 {
            return Err(Error::Numeric(format!(
                "adaptive quadrature did not converge on [{a}, {b}]: residual {err:.3e} > {tol:.3e}"
            )));
        }
        let half_tol = 0.5 * tol;
        Ok(recurse(f, a, m, left, half_tol, depth - 1)?
            + recurse(f, m, b, right, half_tol, depth - 1)?)
    }
    recurse(f, a, b, gl15(f, a, b), tol, 52)
}
