//! Covariance functions of every Gaussian field in the model — fBm, bi-fBm,
//! the smooth component xi, the linear-equation trace v_t(0), and the smooth
//! remainder R — together with the decomposition that recovers the driving
//! fBm from the linear trace.
//!
//! The load-bearing identity, with K = 2H: the trace of the linear equation
//! satisfies `cov_v_trace = c_alpha^2 (2^(1-K) cov_fbm(H) - cov_xi(K))`, i.e.
//! adding an independent copy of xi to the normalized trace yields a scaled
//! fBm. `extract_fbm` applies exactly that: X = 2^(-(1-K)/2) (v/c_alpha - xi).

use crate::error::{Error, Result};
use crate::params::{gamma, ModelParams};
use crate::rng::derive_seed;
use crate::sampler::{build_cov, cholesky_sample, PathSample, TimeGrid};

fn check_nonneg(s: f64, t: f64) -> Result<()> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!(
            "covariance arguments must be non-negative, got ({s}, {t})"
        )));
    }
    Ok(())
}

/// Fractional Brownian motion covariance (s^2H + t^2H - |t-s|^2H)/2.
pub fn cov_fbm(s: f64, t: f64, h: f64) -> Result<f64> {
    check_nonneg(s, t)?;
    if !(0.0 < h && h < 1.0) {
        return Err(Error::Domain(format!("Hurst parameter {h} outside (0, 1)")));
    }
    Ok(0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h)))
}

/// Bifractional Brownian motion covariance
/// 2^-K ([s^2H + t^2H]^K - |t-s|^2HK); bi-fBm(H, 1) is fBm(H).
pub fn cov_bifbm(s: f64, t: f64, h: f64, k: f64) -> Result<f64> {
    check_nonneg(s, t)?;
    if !(0.0 < h && h < 1.0) {
        return Err(Error::Domain(format!("bi-fBm H = {h} outside (0, 1)")));
    }
    if !(0.0 < k && k <= 1.0) {
        return Err(Error::Domain(format!("bi-fBm K = {k} outside (0, 1]")));
    }
    Ok(2f64.powf(-k)
        * ((s.powf(2.0 * h) + t.powf(2.0 * h)).powf(k) - (t - s).abs().powf(2.0 * h * k)))
}

/// Covariance of the smooth Gaussian component xi (bi-fBm temporal parameter
/// 1/2, so the Wiener integrand carries 1 - e^{-rt}):
/// closed form 2^-K (t^K + s^K - (t+s)^K).
pub fn cov_xi(s: f64, t: f64, k: f64) -> Result<f64> {
    check_nonneg(s, t)?;
    if !(0.0 < k && k < 1.0) {
        return Err(Error::Domain(format!("xi parameter K = {k} outside (0, 1)")));
    }
    Ok(2f64.powf(-k) * (t.powf(k) + s.powf(k) - (t + s).powf(k)))
}

/// Same covariance through the Wiener isometry:
/// (K / (2^K Gamma(1-K))) Int_0^inf (1-e^{-rt})(1-e^{-rs}) r^-(1+K) dr.
/// Cross-check for the closed form; agreement within 1e-8.
pub fn cov_xi_quadrature(s: f64, t: f64, k: f64) -> Result<f64> {
    check_nonneg(s, t)?;
    if !(0.0 < k && k < 1.0) {
        return Err(Error::Domain(format!("xi parameter K = {k} outside (0, 1)")));
    }
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let integrand =
        move |r: f64| (-(-r * t).exp_m1()) * (-(-r * s).exp_m1()) * r.powf(-(1.0 + k));
    let integral = crate::sampler::quadrature_0_inf(integrand, 0.0)?;
    Ok(k / (2f64.powf(k) * gamma(1.0 - k)) * integral)
}

/// Covariance of the linear-equation trace t -> v_t(0):
/// c_alpha^2 2^((1-alpha)/alpha) (|t+s|^((alpha-1)/alpha) - |t-s|^((alpha-1)/alpha)).
pub fn cov_v_trace(s: f64, t: f64, params: &ModelParams) -> Result<f64> {
    check_nonneg(s, t)?;
    let e = (params.alpha - 1.0) / params.alpha;
    Ok(params.c_alpha * params.c_alpha
        * 2f64.powf(-e)
        * ((t + s).powf(e) - (t - s).abs().powf(e)))
}

/// Covariance of the smooth remainder R = c_alpha xi (at K = 2H).
pub fn cov_r_smooth(s: f64, t: f64, params: &ModelParams) -> Result<f64> {
    Ok(params.c_alpha * params.c_alpha * cov_xi(s, t, params.k)?)
}

/// A covariance kind with its parameters; a tag for generic grid sampling.
#[derive(Clone, Debug)]
pub enum CovSpec {
    Fbm { h: f64 },
    Bifbm { h: f64, k: f64 },
    Xi { k: f64 },
    VTrace(ModelParams),
    RSmooth(ModelParams),
}

impl CovSpec {
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        match self {
            CovSpec::Fbm { h } => cov_fbm(s, t, *h),
            CovSpec::Bifbm { h, k } => cov_bifbm(s, t, *h, *k),
            CovSpec::Xi { k } => cov_xi(s, t, *k),
            CovSpec::VTrace(p) => cov_v_trace(s, t, p),
            CovSpec::RSmooth(p) => cov_r_smooth(s, t, p),
        }
    }
}

/// Salt for the xi stream family: xi draws must never overlap the field
/// noise driving the SPDE.
const XI_SALT: u64 = 0x78_69_5f_73_74_72_65_61; // "xi_strea"

/// Sample xi replicas on a grid by exact Cholesky of the closed-form
/// covariance at K = 2H, from the dedicated "xi" seed domain.
pub fn sample_xi(
    grid: &TimeGrid,
    params: &ModelParams,
    seed: u64,
    n_replicas: usize,
) -> Result<PathSample> {
    let k = params.k;
    let cov = build_cov(
        |s, t| cov_xi(s, t, k).expect("xi covariance on validated grid"),
        grid,
    )?;
    cholesky_sample(&cov, grid, derive_seed(seed, XI_SALT), n_replicas, "xi")
}

/// Recover the driving fBm from the linear trace and an independent xi:
/// X_t = 2^(-(1-K)/2) (c_alpha^-1 v_t(0) - xi_t), K = 2H.
pub fn extract_fbm(
    v_trace: &PathSample,
    xi: &PathSample,
    params: &ModelParams,
) -> Result<PathSample> {
    if v_trace.grid != xi.grid {
        return Err(Error::Contract(
            "v trace and xi must share the same time grid".into(),
        ));
    }
    if v_trace.n_replicas() != xi.n_replicas() {
        return Err(Error::Contract(format!(
            "replica count mismatch: v has {}, xi has {}",
            v_trace.n_replicas(),
            xi.n_replicas()
        )));
    }
    let scale = 2f64.powf(-(1.0 - params.k) / 2.0);
    let inv_c = 1.0 / params.c_alpha;
    let n = v_trace.grid.len();
    let rows: Vec<Vec<f64>> = (0..v_trace.n_replicas())
        .map(|i| {
            (0..n)
                .map(|j| scale * (inv_c * v_trace.value(i, j) - xi.value(i, j)))
                .collect()
        })
        .collect();
    PathSample::from_rows(v_trace.grid.clone(), rows, v_trace.seed, "fbm_extracted")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use crate::sampler::cholesky_sample;

    #[test]
    fn fbm_values() {
        assert!((cov_fbm(1.0, 1.0, 0.25).unwrap() - 1.0).abs() < 1e-14);
        assert!((cov_fbm(1.0, 2.0, 0.5).unwrap() - 1.0).abs() < 1e-14);
        // (1 + sqrt 3 - sqrt 2)/2, frozen from the formula oracle
        assert!((cov_fbm(1.0, 3.0, 0.25).unwrap() - 0.658_918_622_597_891_1).abs() < 1e-12);
        assert!(cov_fbm(-1.0, 1.0, 0.25).is_err());
        // increment form recovers |t-s|^2H
        let (s, t, h) = (0.7, 1.9, 0.25);
        let inc = cov_fbm(s, s, h).unwrap() + cov_fbm(t, t, h).unwrap()
            - 2.0 * cov_fbm(s, t, h).unwrap();
        assert!((inc - (t - s).abs().powf(2.0 * h)).abs() < 1e-14);
    }

    #[test]
    fn bifbm_values() {
        // variance t^2HK
        assert!((cov_bifbm(2.0, 2.0, 0.5, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        // frozen: 2^-0.4 (5^0.4 - 3^0.4)
        assert!((cov_bifbm(1.0, 4.0, 0.5, 0.4).unwrap() - 0.266_620_883_382_539_98).abs() < 1e-12);
        assert!(cov_bifbm(1.0, 1.0, 1.5, 0.5).is_err());
        assert!(cov_bifbm(1.0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn bifbm_reduces_to_fbm_at_k_one() {
        let mut state = 1u64;
        for _ in 0..100 {
            state = crate::rng::mix64(state);
            let s = (state >> 11) as f64 / (1u64 << 53) as f64 * 3.0;
            state = crate::rng::mix64(state);
            let t = (state >> 11) as f64 / (1u64 << 53) as f64 * 3.0;
            state = crate::rng::mix64(state);
            let h = 0.05 + 0.9 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            let a = cov_bifbm(s, t, h, 1.0).unwrap();
            let b = cov_fbm(s, t, h).unwrap();
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn xi_values_and_quadrature_agreement() {
        assert_eq!(cov_xi(0.0, 5.0, 0.5).unwrap(), 0.0);
        // 2^(-1/2) (2 - sqrt 2) = sqrt 2 - 1
        assert!((cov_xi(1.0, 1.0, 0.5).unwrap() - 0.414_213_562_373_095_05).abs() < 1e-12);
        // frozen: 2^-0.4 (1 + 2^0.4 - 3^0.4)
        assert!((cov_xi(1.0, 2.0, 0.4).unwrap() - 0.581_779_260_730_525_5).abs() < 1e-12);
        for (s, t, k) in [(1.0, 1.0, 0.5), (1.0, 2.0, 0.4), (0.3, 2.7, 0.37), (0.5, 0.5, 0.1)] {
            let closed = cov_xi(s, t, k).unwrap();
            let quad = cov_xi_quadrature(s, t, k).unwrap();
            assert!(
                (closed - quad).abs() < 1e-8,
                "K={k}, (s,t)=({s},{t}): closed {closed} vs quadrature {quad}"
            );
        }
        assert!(cov_xi(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn v_trace_values() {
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        // c_2^2 = pi^(-1/2)
        assert!((cov_v_trace(1.0, 1.0, &p).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-12);
        assert_eq!(cov_v_trace(0.0, 3.0, &p).unwrap(), 0.0);
        // proportional to bi-fBm(1/2, K)
        let p2 = derive_params(0.2, 0.0, 1.0).unwrap();
        for (s, t) in [(0.3, 0.9), (1.0, 1.0), (0.2, 2.0)] {
            let lhs = cov_v_trace(s, t, &p2).unwrap() / (p2.c_alpha * p2.c_alpha);
            let rhs = cov_bifbm(s, t, 0.5, p2.k).unwrap();
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn r_smooth_increment_bound() {
        // Remark-style probe: ||R_{t+e} - R_t||_2 <= C t^(H-1) e, with one C
        // stable across the probe set.
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        let mut ratios = Vec::new();
        for t in [0.5, 1.0] {
            for eps in [1e-2, 1e-3] {
                let inc = (cov_r_smooth(t + eps, t + eps, &p).unwrap()
                    + cov_r_smooth(t, t, &p).unwrap()
                    - 2.0 * cov_r_smooth(t, t + eps, &p).unwrap())
                .sqrt();
                ratios.push(inc / (t.powf(p.h - 1.0) * eps));
            }
        }
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(hi.is_finite() && hi > 0.0);
        assert!(hi / lo < 2.0, "increment ratios unstable: {ratios:?}");
    }

    #[test]
    fn trace_decomposition_identity() {
        // cov_v_trace = c^2 (2^(1-K) cov_fbm(H) - cov_xi(K)), K = 2H, i.e.
        // the normalized trace plus an independent xi is a scaled fBm.
        for h in [0.2, 0.25] {
            let p = derive_params(h, 0.0, 1.0).unwrap();
            let mut max_res = 0.0f64;
            for i in 1..=20 {
                for j in 1..=20 {
                    let s = i as f64 / 20.0;
                    let t = j as f64 / 20.0;
                    let lhs = cov_v_trace(s, t, &p).unwrap();
                    let rhs = p.c_alpha
                        * p.c_alpha
                        * (2f64.powf(1.0 - p.k) * cov_fbm(s, t, h).unwrap()
                            - cov_xi(s, t, p.k).unwrap());
                    max_res = max_res.max((lhs - rhs).abs());
                }
            }
            assert!(max_res < 1e-8, "H = {h}: residual {max_res}");
        }
    }

    #[test]
    fn extract_fbm_zero_inputs() {
        let grid = TimeGrid::new(vec![0.5, 1.0]).unwrap();
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        let zeros = PathSample::from_rows(grid.clone(), vec![vec![0.0, 0.0]; 3], 1, "z").unwrap();
        let x = extract_fbm(&zeros, &zeros, &p).unwrap();
        assert!(x.raw_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn extract_fbm_covariance_algebra() {
        // Cov of the linear combination, from cov_v_trace and cov_xi with the
        // two inputs independent, equals cov_fbm(H) on a 20x20 grid.
        for h in [0.2, 0.25] {
            let p = derive_params(h, 0.0, 1.0).unwrap();
            let scale2 = 2f64.powf(-(1.0 - p.k));
            let mut max_res = 0.0f64;
            for i in 1..=20 {
                for j in 1..=20 {
                    let s = i as f64 / 20.0;
                    let t = j as f64 / 20.0;
                    let combo = scale2
                        * (cov_v_trace(s, t, &p).unwrap() / (p.c_alpha * p.c_alpha)
                            + cov_xi(s, t, p.k).unwrap());
                    max_res = max_res.max((combo - cov_fbm(s, t, h).unwrap()).abs());
                }
            }
            assert!(max_res < 1e-8, "H = {h}: residual {max_res}");
        }
    }

    #[test]
    fn extract_fbm_grid_mismatch_is_contract_error() {
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        let g1 = TimeGrid::new(vec![0.5, 1.0]).unwrap();
        let g2 = TimeGrid::new(vec![0.5, 2.0]).unwrap();
        let a = PathSample::from_rows(g1, vec![vec![0.0, 0.0]], 1, "a").unwrap();
        let b = PathSample::from_rows(g2, vec![vec![0.0, 0.0]], 1, "b").unwrap();
        assert!(matches!(extract_fbm(&a, &b, &p), Err(Error::Contract(_))));
    }

    #[test]
    fn extract_fbm_increment_moment_mc() {
        // Exact-law pipeline: v sampled from cov_v_trace, xi from cov_xi,
        // independent seeds; E|X_1 - X_0.5|^2 = 2^(-1/2) at H = 1/4.
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        let grid = TimeGrid::new(vec![0.5, 1.0]).unwrap();
        let n = 10_000;
        let cov_v = build_cov(|s, t| cov_v_trace(s, t, &p).unwrap(), &grid).unwrap();
        let v = cholesky_sample(&cov_v, &grid, 2024, n, "v").unwrap();
        let xi = sample_xi(&grid, &p, 2024, n).unwrap();
        let x = extract_fbm(&v, &xi, &p).unwrap();
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for i in 0..n {
            let d = x.value(i, 1) - x.value(i, 0);
            m2 += d * d;
            m4 += d * d * d * d;
        }
        m2 /= n as f64;
        m4 /= n as f64;
        let se = ((m4 - m2 * m2) / n as f64).sqrt();
        let expect = 0.707_106_781_186_547_5;
        assert!(
            (m2 - expect).abs() < 3.0 * se,
            "E|dX|^2 = {m2}, expected {expect} (3 SE = {})",
            3.0 * se
        );
    }

    #[test]
    fn psd_sanity_all_kinds() {
        // build_cov + Cholesky (with jitter policy) succeeds on a 64-point
        // uniform grid of [0, 1] for every covariance kind.
        let p = derive_params(0.25, 0.0, 1.0).unwrap();
        let pts: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        let grid = TimeGrid::new(pts).unwrap();
        let kinds = [
            CovSpec::Fbm { h: 0.25 },
            CovSpec::Bifbm { h: 0.5, k: 0.5 },
            CovSpec::Xi { k: 0.5 },
            CovSpec::VTrace(p),
            CovSpec::RSmooth(p),
        ];
        for kind in kinds {
            let cov = build_cov(|s, t| kind.eval(s, t).unwrap(), &grid).unwrap();
            let sample = cholesky_sample(&cov, &grid, 11, 2, format!("{kind:?}"));
            assert!(sample.is_ok(), "kind {kind:?} failed: {sample:?}");
        }
    }
}
