//! Exact sampling of centered Gaussian processes from covariance functions,
//! plus robust quadrature for Wiener-integral covariances.

use crate::error::{Error, Result};
use crate::quad::{adaptive_gl, gl15};
use crate::rng::{mix64, NormalStream, StreamKind};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Strictly increasing times in [0, T].
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Contract("time grid must be non-empty".into()));
        }
        if points[0] < 0.0 {
            return Err(Error::Contract(format!(
                "time grid must start at or after 0, got {}",
                points[0]
            )));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Contract("time grid must be strictly increasing".into()));
        }
        Ok(TimeGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the grid point equal to `t` up to relative 1e-9.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|&p| (p - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

/// Replica time series on a common grid, together with the generating seed.
#[derive(Clone, Debug)]
pub struct PathSample {
    pub grid: TimeGrid,
    pub seed: u64,
    pub label: String,
    n_replicas: usize,
    /// Row-major (n_replicas x grid.len()) values.
    values: Vec<f64>,
}

impl PathSample {
    pub fn from_rows(
        grid: TimeGrid,
        rows: Vec<Vec<f64>>,
        seed: u64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = grid.len();
        if rows.is_empty() {
            return Err(Error::Contract("replica count must be >= 1".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Contract("every replica row must match the grid length".into()));
        }
        let n_replicas = rows.len();
        let mut values = Vec::with_capacity(n_replicas * n);
        for r in rows {
            values.extend_from_slice(&r);
        }
        Ok(PathSample {
            grid,
            seed,
            label: label.into(),
            n_replicas,
            values,
        })
    }

    pub fn n_replicas(&self) -> usize {
        self.n_replicas
    }

    pub fn replica(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn value(&self, replica: usize, point: usize) -> f64 {
        self.values[replica * self.grid.len() + point]
    }

    /// Column of values at one grid point across replicas.
    pub fn column(&self, point: usize) -> Vec<f64> {
        (0..self.n_replicas).map(|i| self.value(i, point)).collect()
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }
}

/// Evaluate a covariance function on a grid, checking symmetry on
/// pseudo-random pairs to 1e-10.
pub fn build_cov<F: Fn(f64, f64) -> f64>(cov_fn: F, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let pts = grid.points();
    // Deterministic pseudo-random probe pairs.
    let mut state = 0x9e3779b97f4a7c15u64;
    for _ in 0..(2 * n).min(64) {
        state = mix64(state);
        let i = (state % n as u64) as usize;
        state = mix64(state);
        let j = (state % n as u64) as usize;
        let a = cov_fn(pts[i], pts[j]);
        let b = cov_fn(pts[j], pts[i]);
        if (a - b).abs() > 1e-10 * a.abs().max(1.0) {
            return Err(Error::Contract(format!(
                "covariance function is asymmetric at ({}, {}): {a} vs {b}",
                pts[i], pts[j]
            )));
        }
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = cov_fn(pts[i], pts[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Draw `n_replicas` i.i.d. N(0, cov) rows by Cholesky factorization.
///
/// Near-singular matrices (fBm on fine grids) get an escalating diagonal
/// jitter of 1e-12 -> 1e-10 -> 1e-8 relative to the largest diagonal entry;
/// if factorization still fails the error reports the smallest eigenvalue.
/// Replica `i` draws from the stream `(seed, Process, i)`, so parallel and
/// serial generation agree bit for bit.
pub fn cholesky_sample(
    cov: &DMatrix<f64>,
    grid: &TimeGrid,
    seed: u64,
    n_replicas: usize,
    label: impl Into<String>,
) -> Result<PathSample> {
    cholesky_sample_impl(cov, grid, seed, n_replicas, label, true)
}

/// Serial variant; used to verify that the parallel path produces identical
/// values.
pub fn cholesky_sample_serial(
    cov: &DMatrix<f64>,
    grid: &TimeGrid,
    seed: u64,
    n_replicas: usize,
    label: impl Into<String>,
) -> Result<PathSample> {
    cholesky_sample_impl(cov, grid, seed, n_replicas, label, false)
}

fn cholesky_sample_impl(
    cov: &DMatrix<f64>,
    grid: &TimeGrid,
    seed: u64,
    n_replicas: usize,
    label: impl Into<String>,
    parallel: bool,
) -> Result<PathSample> {
    let n = grid.len();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(Error::Contract(format!(
            "covariance is {}x{} but the grid has {n} points",
            cov.nrows(),
            cov.ncols()
        )));
    }
    if n_replicas == 0 {
        return Err(Error::Contract("replica count must be >= 1".into()));
    }
    let asym = (cov - cov.transpose()).amax();
    if asym > 1e-10 * cov.amax().max(1.0) {
        return Err(Error::Contract(format!(
            "covariance matrix asymmetric (max |A - A^T| = {asym:.3e})"
        )));
    }
    let max_diag = (0..n).map(|i| cov[(i, i)]).fold(f64::MIN, f64::max);
    if max_diag < 0.0 {
        return Err(Error::Contract("covariance has negative diagonal".into()));
    }

    let lower = if max_diag == 0.0 {
        // Degenerate all-zero covariance: every sample is exactly 0.
        DMatrix::zeros(n, n)
    } else {
        let mut chol = None;
        for jitter in [0.0, 1e-12, 1e-10, 1e-8] {
            let mut m = cov.clone();
            if jitter > 0.0 {
                for i in 0..n {
                    m[(i, i)] += jitter * max_diag;
                }
            }
            if let Some(c) = nalgebra::Cholesky::new(m) {
                chol = Some(c.l());
                break;
            }
        }
        match chol {
            Some(l) => l,
            None => {
                let min_eig = cov
                    .clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::MAX, f64::min);
                return Err(Error::Numeric(format!(
                    "Cholesky failed after jitter escalation to 1e-8; \
                     smallest eigenvalue estimate {min_eig:.6e}"
                )));
            }
        }
    };

    let seed = seed;
    let gen_row = |replica: usize| -> Vec<f64> {
        let mut stream = NormalStream::new(seed, StreamKind::Process, replica as u64, 0);
        let z: Vec<f64> = (0..n).map(|_| stream.next()).collect();
        (0..n)
            .map(|i| (0..=i).map(|j| lower[(i, j)] * z[j]).sum())
            .collect()
    };
    let rows: Vec<Vec<f64>> = if parallel {
        (0..n_replicas).into_par_iter().map(gen_row).collect()
    } else {
        (0..n_replicas).map(gen_row).collect()
    };
    PathSample::from_rows(grid.clone(), rows, seed, label)
}

/// Integrate `f` over (0, inf) to absolute accuracy ~1e-9.
///
/// `singularity_order` is the s in the model f(r) ~ r^(-s) (smooth) near 0,
/// with s in [0, 1); the unit interval is regularized by the substitution
/// r = u^(1/(1-s)). Beyond 1 the integrand is integrated over dyadic octaves
/// until the running contributions are negligible; integrands with slower
/// than geometric octave decay are rejected as non-convergent.
pub fn quadrature_0_inf<F: Fn(f64) -> f64>(f: F, singularity_order: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&singularity_order) {
        return Err(Error::Domain(format!(
            "singularity order {singularity_order} outside [0, 1)"
        )));
    }
    let tol = 1e-12;
    // (0, 1]: substitute r = u^p to absorb the endpoint singularity.
    let head = if singularity_order > 0.0 {
        let p = 1.0 / (1.0 - singularity_order);
        adaptive_gl(&|u: f64| f(u.powf(p)) * p * u.powf(p - 1.0), 0.0, 1.0, tol)?
    } else {
        adaptive_gl(&f, 0.0, 1.0, tol)?
    };

    // [1, inf): dyadic octaves. Contributions may grow while prefactors
    // saturate but must eventually decay octave over octave; a long streak
    // of non-decreasing contributions marks a divergent (or log-divergent)
    // tail.
    let mut total = head;
    let mut prev_abs = f64::MAX;
    let mut small_streak = 0u32;
    let mut grow_streak = 0u32;
    let mut a = 1.0f64;
    for _octave in 0..960 {
        let b = 2.0 * a;
        let panel = adaptive_gl(&f, a, b, tol)?;
        total += panel;
        let pa = panel.abs();
        if pa < 1e-13 * total.abs().max(1.0) {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok(total);
            }
        } else {
            small_streak = 0;
            if pa >= prev_abs {
                grow_streak += 1;
                if grow_streak >= 24 {
                    return Err(Error::Numeric(format!(
                        "integrand tail not decaying: octave [{a}, {b}] still contributes {panel:.3e}"
                    )));
                }
            } else {
                grow_streak = 0;
            }
        }
        prev_abs = pa;
        a = b;
    }
    Err(Error::Numeric(
        "improper integral did not converge within 960 dyadic octaves (tail decays too slowly for f64-range panels)".into(),
    ))
}

/// One Gauss-Legendre panel; re-exported for oracle-style cross-checks.
pub fn gl_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    gl15(f, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SQRT_PI: f64 = 3.544_907_701_811_032; // 2 sqrt(pi)
    const TWO_SQRT_PI_2MSQRT2: f64 = 2.076_558_854_360_063; // 2 sqrt(pi) (2 - sqrt 2)

    fn fbm_cov(h: f64) -> impl Fn(f64, f64) -> f64 {
        move |s: f64, t: f64| {
            0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![-0.1, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn brownian_cov_on_two_points() {
        let grid = TimeGrid::new(vec![1.0, 2.0]).unwrap();
        let m = build_cov(fbm_cov(0.5), &grid).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((m[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((m[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((m[(1, 1)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_cov() {
        let grid = TimeGrid::new(vec![0.7]).unwrap();
        let m = build_cov(fbm_cov(0.25), &grid).unwrap();
        assert_eq!(m.nrows(), 1);
        assert!((m[(0, 0)] - 0.7f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn bifbm_cov_frozen_value() {
        // bi-fBm(1/2, 1/2) on {1, 4}: off-diagonal 2^(-1/2)(sqrt 5 - sqrt 3)
        let cov = |s: f64, t: f64| {
            let (h, k) = (0.5, 0.5);
            2f64.powf(-k) * ((s.powf(2.0 * h) + t.powf(2.0 * h)).powf(k) - (t - s).abs().powf(2.0 * h * k))
        };
        let grid = TimeGrid::new(vec![1.0, 4.0]).unwrap();
        let m = build_cov(cov, &grid).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((m[(0, 1)] - 0.356_393_958_692_600_6).abs() < 1e-12);
        assert!((m[(1, 1)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_cov_rejected() {
        let grid = TimeGrid::new(vec![0.5, 1.0, 2.0]).unwrap();
        let err = build_cov(|s, t| s + 0.5 * t, &grid).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn identity_cov_unit_variance() {
        let grid = TimeGrid::new(vec![1.0, 2.0]).unwrap();
        let cov = DMatrix::identity(2, 2);
        let n = 100_000;
        let s = cholesky_sample(&cov, &grid, 99, n, "iid").unwrap();
        for col in 0..2 {
            let v: Vec<f64> = s.column(col);
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            // 3 SE of a variance estimate at n = 1e5
            let se = (2.0 / n as f64).sqrt();
            assert!((var - 1.0).abs() < 3.0 * se, "var = {var}");
        }
        // cross-column independence
        let a = s.column(0);
        let b = s.column(1);
        let corr: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        assert!(corr.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn zero_cov_gives_exact_zeros() {
        let grid = TimeGrid::new(vec![1.0]).unwrap();
        let cov = DMatrix::from_element(1, 1, 0.0);
        let s = cholesky_sample(&cov, &grid, 3, 100, "zero").unwrap();
        assert!(s.raw_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn brownian_variance_matches_mc() {
        let pts: Vec<f64> = (1..=8).map(|i| i as f64 / 8.0).collect();
        let grid = TimeGrid::new(pts.clone()).unwrap();
        let cov = build_cov(fbm_cov(0.5), &grid).unwrap();
        let n = 100_000;
        let s = cholesky_sample(&cov, &grid, 1234, n, "bm").unwrap();
        for (j, &t) in pts.iter().enumerate() {
            let col = s.column(j);
            let var = col.iter().map(|x| x * x).sum::<f64>() / n as f64;
            let se = t * (2.0 / n as f64).sqrt();
            assert!((var - t).abs() < 3.0 * se, "Var(W_{t}) = {var}");
        }
    }

    #[test]
    fn determinism_and_parallel_serial_agreement() {
        let pts: Vec<f64> = (1..=16).map(|i| i as f64 / 16.0).collect();
        let grid = TimeGrid::new(pts).unwrap();
        let cov = build_cov(fbm_cov(0.25), &grid).unwrap();
        let a = cholesky_sample(&cov, &grid, 77, 64, "fbm").unwrap();
        let b = cholesky_sample(&cov, &grid, 77, 64, "fbm").unwrap();
        let c = cholesky_sample_serial(&cov, &grid, 77, 64, "fbm").unwrap();
        assert_eq!(a.raw_values(), b.raw_values());
        assert_eq!(a.raw_values(), c.raw_values());
    }

    #[test]
    fn replica_cross_correlation_vanishes() {
        let grid = TimeGrid::new(vec![0.5, 1.0]).unwrap();
        let cov = build_cov(fbm_cov(0.25), &grid).unwrap();
        let n = 10_000;
        let s = cholesky_sample(&cov, &grid, 5150, n, "fbm").unwrap();
        // adjacent-replica product at a fixed grid point
        let var = cov[(1, 1)];
        let mut acc = 0.0;
        for i in 0..n - 1 {
            acc += s.value(i, 1) * s.value(i + 1, 1);
        }
        let corr = acc / ((n - 1) as f64 * var);
        assert!(corr.abs() < 3.0 / ((n - 1) as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn fine_fbm_grid_needs_only_jitter() {
        // 64-point uniform grid on [0, 1] starting at 0: singular covariance,
        // must succeed through the jitter policy.
        let pts: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        let grid = TimeGrid::new(pts).unwrap();
        let cov = build_cov(fbm_cov(0.25), &grid).unwrap();
        let s = cholesky_sample(&cov, &grid, 8, 4, "fbm-fine").unwrap();
        assert_eq!(s.n_replicas(), 4);
        // t = 0 column is (near-)zero
        assert!(s.column(0).iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn quadrature_validation_set() {
        let one = quadrature_0_inf(|r| (-r).exp(), 0.0).unwrap();
        assert!((one - 1.0).abs() < 1e-9);

        let a = quadrature_0_inf(|r| (-(-r).exp_m1()) * r.powf(-1.5), 0.5).unwrap();
        assert!((a - TWO_SQRT_PI).abs() < 1e-9, "got {a}");

        let b = quadrature_0_inf(|r| (-(-r).exp_m1()).powi(2) * r.powf(-1.5), 0.0).unwrap();
        assert!((b - TWO_SQRT_PI_2MSQRT2).abs() < 1e-9, "got {b}");
    }

    #[test]
    fn quadrature_rejects_divergent_tail() {
        assert!(quadrature_0_inf(|r| 1.0 / (1.0 + r), 0.0).is_err());
    }
}
