//! Model constants and the drift pair (g, f).
//!
//! All scalar constants of the model are derived from the Hurst exponent H
//! alone. The convention `alpha = 1/(1 - 2H)` ties the roughness of the
//! driving noise to the stability index of the fractional Laplacian, and
//! under it the two amplitude constants `kappa_H` and `c_alpha` coincide.

use crate::error::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

/// All derived scalar constants of a model instance.
///
/// Immutable after construction; safe to share across threads.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    /// Hurst exponent of the driving fBm, in (0, 1/4].
    pub h: f64,
    /// Stability index alpha = 1/(1 - 2H), in (1, 2].
    pub alpha: f64,
    /// Bi-fBm second parameter K = (alpha - 1)/alpha = 2H, in (0, 1/2].
    pub k: f64,
    /// Amplitude constant kappa_H = sqrt((1-2H) Gamma(1-2H) / (2 pi H)).
    pub kappa_h: f64,
    /// Amplitude constant c_alpha = sqrt(Gamma(1/alpha) / (pi (alpha-1))).
    /// Equals `kappa_h` under the alpha(H) convention.
    pub c_alpha: f64,
    /// Correction-rate exponent 2H/(1+H).
    pub g_h: f64,
    /// Localization exponent 1/(1+H).
    pub a_split: f64,
    /// Initial value Y_0.
    pub y0: f64,
    /// Time horizon T.
    pub horizon: f64,
}

/// Gamma function on (0, 2] and beyond; libm's implementation is accurate to
/// a few ulp, far inside the 1e-13 relative requirement.
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Derive every model constant from (H, Y_0, T).
///
/// H must lie in (0, 1/4]: this is Dalang's condition 1 < alpha <= 2 for the
/// driving equation to have a function-valued solution.
pub fn derive_params(h: f64, y0: f64, horizon: f64) -> Result<ModelParams> {
    if !h.is_finite() || h <= 0.0 || h > 0.25 {
        return Err(Error::Domain(format!(
            "Hurst exponent H = {h} outside the admissible interval (0, 1/4] \
             (Dalang's condition: alpha = 1/(1-2H) must lie in (1, 2])"
        )));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::Domain(format!("horizon T = {horizon} must be positive")));
    }
    let alpha = 1.0 / (1.0 - 2.0 * h);
    let k = 2.0 * h;
    let kappa_h = ((1.0 - 2.0 * h) * gamma(1.0 - 2.0 * h) / (2.0 * std::f64::consts::PI * h)).sqrt();
    let c_alpha = (gamma(1.0 / alpha) / (std::f64::consts::PI * (alpha - 1.0))).sqrt();
    let g_h = 2.0 * h / (1.0 + h);
    let a_split = 1.0 / (1.0 + h);
    Ok(ModelParams {
        h,
        alpha,
        k,
        kappa_h,
        c_alpha,
        g_h,
        a_split,
        y0,
        horizon,
    })
}

/// The drift g of the target equation dY = g(Y) dX.
///
/// Named variants admit a vectorized evaluation path in the simulator;
/// `Custom` accepts any Lipschitz function.
#[derive(Clone)]
pub enum GFn {
    Const(f64),
    Sin,
    /// `Linear(c)` is g(x) = c x.
    Linear(f64),
    /// Piecewise-linear interpolation of (x, g(x)) pairs sorted by x,
    /// constant beyond the endpoints (hence globally Lipschitz).
    Table(Arc<Vec<(f64, f64)>>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl GFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            GFn::Const(c) => *c,
            GFn::Sin => x.sin(),
            GFn::Linear(c) => c * x,
            GFn::Table(pts) => eval_table(pts, x),
            GFn::Custom(f) => f(x),
        }
    }
}

impl std::fmt::Debug for GFn {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GFn::Const(c) => write!(fm, "Const({c})"),
            GFn::Sin => write!(fm, "Sin"),
            GFn::Linear(c) => write!(fm, "Linear({c})"),
            GFn::Table(pts) => write!(fm, "Table({} pts)", pts.len()),
            GFn::Custom(_) => write!(fm, "Custom"),
        }
    }
}

fn eval_table(pts: &[(f64, f64)], x: f64) -> f64 {
    match pts.len() {
        0 => 0.0,
        1 => pts[0].1,
        _ => {
            if x <= pts[0].0 {
                return pts[0].1;
            }
            if x >= pts[pts.len() - 1].0 {
                return pts[pts.len() - 1].1;
            }
            let i = pts.partition_point(|p| p.0 <= x) - 1;
            let (x0, y0) = pts[i];
            let (x1, y1) = pts[i + 1];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

/// The pair (g, f) with f(x) = 2^H / (kappa_H^2 sqrt(2)) * g(x), so that
/// g(x) = c_alpha^2 2^(1/(2 alpha)) f(x) pointwise.
#[derive(Clone, Debug)]
pub struct DriftPair {
    pub g: GFn,
    /// The scalar 2^H / (kappa_H^2 sqrt(2)) relating f to g.
    pub f_scale: f64,
    /// Lipschitz constant of g. When estimated by probing this is a lower
    /// bound on the true constant.
    pub lip_g: f64,
}

impl DriftPair {
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    #[inline]
    pub fn f(&self, x: f64) -> f64 {
        self.f_scale * self.g.eval(x)
    }

    /// When f is structurally constant, its value.
    pub fn f_const(&self) -> Option<f64> {
        match self.g {
            GFn::Const(c) => Some(self.f_scale * c),
            _ => None,
        }
    }
}

/// Build the drift pair for `g`, estimating its Lipschitz constant as the
/// maximum divided difference over a 10^4-point grid on [-10, 10] (a lower
/// bound on the true constant).
pub fn make_drift_pair(g: GFn, params: &ModelParams) -> DriftPair {
    let lip = estimate_lipschitz(&g);
    make_drift_pair_with_lip(g, lip, params)
}

/// Build the drift pair with a caller-supplied Lipschitz constant.
pub fn make_drift_pair_with_lip(g: GFn, lip_g: f64, params: &ModelParams) -> DriftPair {
    let f_scale = 2f64.powf(params.h) / (params.kappa_h * params.kappa_h * std::f64::consts::SQRT_2);
    DriftPair { g, f_scale, lip_g }
}

fn estimate_lipschitz(g: &GFn) -> f64 {
    match g {
        GFn::Const(_) => 0.0,
        GFn::Linear(c) => c.abs(),
        _ => {
            let n = 10_000usize;
            let lo = -10.0;
            let step = 20.0 / n as f64;
            let mut prev = g.eval(lo);
            let mut lip: f64 = 0.0;
            for i in 1..=n {
                let next = g.eval(lo + i as f64 * step);
                lip = lip.max(((next - prev) / step).abs());
                prev = next;
            }
            lip
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // pi^(-1/4), the common value of kappa_H and c_alpha at H = 1/4.
    const KAPPA_QUARTER: f64 = 0.751_125_544_464_942_5;
    // 2^(-1/4) sqrt(pi): the constant f when g = 1 and H = 1/4.
    const F_CONST_QUARTER: f64 = 1.490_450_089_429_090_2;

    #[test]
    fn quarter_hurst_constants() {
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        assert!((p.alpha - 2.0).abs() < 1e-14);
        assert!((p.k - 0.5).abs() < 1e-14);
        assert!((p.g_h - 0.4).abs() < 1e-14);
        assert!((p.a_split - 0.8).abs() < 1e-14);
        assert!((p.kappa_h - KAPPA_QUARTER).abs() < 1e-12);
        assert!((p.c_alpha - KAPPA_QUARTER).abs() < 1e-12);
    }

    #[test]
    fn fifth_hurst_constants() {
        let p = derive_params(0.2, 0.0, 1.0).unwrap();
        assert!((p.alpha - 5.0 / 3.0).abs() < 1e-14);
        assert!((p.k - 0.4).abs() < 1e-14);
        assert!((p.g_h - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_h_is_domain_error() {
        let err = derive_params(0.3, 0.0, 1.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(0, 1/4]"), "message should name the interval: {msg}");
        assert!(derive_params(0.0, 0.0, 1.0).is_err());
        assert!(derive_params(-0.1, 0.0, 1.0).is_err());
        assert!(derive_params(0.25, 0.0, 0.0).is_err());
    }

    #[test]
    fn gamma_reference_points() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        assert!((gamma(1.0) - 1.0).abs() < 1e-13);
        assert!((gamma(2.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn invariants_over_random_h() {
        let mut state = 0x243f_6a88_85a3_08d3u64;
        for _ in 0..1000 {
            state = crate::rng::mix64(state);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let h = 0.01 + 0.24 * u;
            let p = derive_params(h, 0.0, 1.0).unwrap();
            // alpha <-> H round trip
            let h_rt = (p.alpha - 1.0) / (2.0 * p.alpha);
            assert!((h_rt - h).abs() < 1e-12, "round trip failed at H = {h}");
            // kappa_H = c_alpha
            assert!(
                ((p.kappa_h - p.c_alpha) / p.kappa_h).abs() < 1e-12,
                "kappa != c_alpha at H = {h}"
            );
            // G_H identities and bounds
            assert!((1.0 - p.a_split * (1.0 - h) - p.g_h).abs() < 1e-14);
            assert!((2.0 * p.a_split * h - p.g_h).abs() < 1e-14);
            let ratio = p.g_h / h;
            assert!((1.6..2.0).contains(&ratio), "G_H/H = {ratio} at H = {h}");
            assert!(p.g_h > h);
            assert_eq!(p.k, 2.0 * h);
        }
    }

    #[test]
    fn drift_pair_unit_g() {
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        let pair = make_drift_pair(GFn::Const(1.0), &p);
        assert!((pair.f(3.7) - F_CONST_QUARTER).abs() < 1e-12);
        assert_eq!(pair.lip_g, 0.0);
        assert!((pair.f_const().unwrap() - F_CONST_QUARTER).abs() < 1e-12);
    }

    #[test]
    fn drift_pair_zero_g() {
        let p = derive_params(0.2, 0.0, 1.0).unwrap();
        let pair = make_drift_pair(GFn::Const(0.0), &p);
        for x in [-2.0, 0.0, 5.5] {
            assert_eq!(pair.f(x), 0.0);
        }
    }

    #[test]
    fn drift_pair_identity_ratio() {
        let p = derive_params(0.2, 0.0, 1.0).unwrap();
        let pair = make_drift_pair(GFn::Linear(1.0), &p);
        let expect = p.c_alpha * p.c_alpha * 2f64.powf(1.0 / (2.0 * p.alpha));
        for x in [-3.0, 0.1, 1.0, 17.0] {
            let ratio = pair.g(x) / pair.f(x);
            assert!((ratio - expect).abs() < 1e-12 * expect.abs());
        }
    }

    #[test]
    fn lipschitz_probe_for_sin() {
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        let pair = make_drift_pair(GFn::Sin, &p);
        assert!(pair.lip_g > 0.99 && pair.lip_g <= 1.0);
    }

    #[test]
    fn table_drift_interpolates_and_clamps() {
        let pts = Arc::new(vec![(-1.0, 0.0), (0.0, 2.0), (2.0, 1.0)]);
        let g = GFn::Table(pts);
        assert_eq!(g.eval(-5.0), 0.0);
        assert_eq!(g.eval(5.0), 1.0);
        assert!((g.eval(-0.5) - 1.0).abs() < 1e-15);
        assert!((g.eval(1.0) - 1.5).abs() < 1e-15);
    }
}
