//! Spectral Galerkin simulation of the linear and nonlinear fractional heat
//! equations on a periodic truncation of the line, both driven by the
//! identical white-noise realization.
//!
//! Conventions. The field lives on [0, L) with N grid points and is expanded
//! in Fourier coefficients u(x) = sum_j u_j exp(i 2 pi j x / L); only the
//! non-negative half-spectrum (j = 0..N/2) is stored, the rest is implied by
//! Hermitian symmetry. Under this convention white-noise mode increments are
//! independent complex Gaussians of variance dt/L (real modes j = 0, N/2 get
//! real variance dt/L). Each mode's linear update is the exact
//! Ornstein-Uhlenbeck transition
//!     v_j(t+dt) = e^{-lambda_j dt} v_j(t)
//!                 + sqrt((1 - e^{-2 lambda_j dt}) / (2 lambda_j L)) zeta_j,
//! with lambda_j = |2 pi j / L|^alpha / 2 and zeta_j a standard complex
//! normal taken from the same per-(replica, mode) streams as the white-noise
//! increments. The nonlinear equation uses an exponential-Euler step: the
//! drift factor f(c_alpha u) is frozen at the step start, multiplied into the
//! synthesized physical-space noise, transformed back, and filtered through
//! the same per-mode OU amplitudes, which makes the scheme exact for the
//! linear part and reduces bit-for-bit to the linear run when f is constant 1.
//!
//! Streams are keyed by (seed, component, replica, mode); the linear solver
//! consumes only the real-component streams (the imaginary OU components
//! never enter the trace at x = 0), while the nonlinear solver consumes both,
//! so the two stay aligned draw for draw.

use crate::error::{Error, Result};
use crate::fields::sample_xi;
use crate::params::{DriftPair, GFn, ModelParams};
use crate::rng::{NormalStream, StreamKind};
use crate::sampler::{PathSample, TimeGrid};
use rayon::prelude::*;
use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

/// Spatial/temporal discretization of a run.
#[derive(Clone, Debug)]
pub struct GridConfig {
    /// Periodic cell length.
    pub l: f64,
    /// Number of spatial points; a power of two, at least 64.
    pub n: usize,
    /// Time step.
    pub dt: f64,
    /// Number of steps; the horizon is n_steps * dt.
    pub n_steps: usize,
    /// Times at which traces are recorded; must sit on step boundaries.
    pub record_times: Vec<f64>,
    record_steps: Vec<usize>,
}

impl GridConfig {
    pub fn new(
        l: f64,
        n: usize,
        dt: f64,
        n_steps: usize,
        record_times: Vec<f64>,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if !(l > 0.0) {
            problems.push(format!("L = {l} must be positive"));
        }
        if n < 64 || !n.is_power_of_two() {
            problems.push(format!("N = {n} must be a power of two >= 64"));
        }
        if !(dt > 0.0) {
            problems.push(format!("dt = {dt} must be positive"));
        }
        if n_steps == 0 {
            problems.push("n_steps must be >= 1".into());
        }
        if record_times.is_empty() {
            problems.push("record_times must be non-empty".into());
        }
        if record_times.windows(2).any(|w| w[1] <= w[0]) {
            problems.push("record_times must be strictly increasing".into());
        }
        let mut record_steps = Vec::with_capacity(record_times.len());
        if problems.is_empty() {
            for &t in &record_times {
                let s = t / dt;
                let k = s.round();
                if (s - k).abs() > 1e-9 * s.max(1.0) || k < 1.0 || k > n_steps as f64 {
                    problems.push(format!(
                        "record time {t} is not a step time (dt = {dt}, n_steps = {n_steps})"
                    ));
                } else {
                    record_steps.push(k as usize);
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        Ok(GridConfig {
            l,
            n,
            dt,
            n_steps,
            record_times,
            record_steps,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn record_steps(&self) -> &[usize] {
        &self.record_steps
    }

    pub fn record_grid(&self) -> TimeGrid {
        TimeGrid::new(self.record_times.clone()).expect("validated record times")
    }
}

/// Eigenvalues lambda_j = |2 pi j / L|^alpha / 2 of the half-spectrum
/// (lambda_0 = 0).
pub fn spectral_eigenvalues(n: usize, l: f64, alpha: f64) -> Vec<f64> {
    (0..=n / 2)
        .map(|j| 0.5 * (2.0 * PI * j as f64 / l).powf(alpha))
        .collect()
}

/// Fourier half-spectrum of a real field with its operator eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralState {
    /// Coefficients for modes 0..=N/2; Hermitian symmetry is implied, so the
    /// represented field is real by construction.
    pub modes: Vec<Complex<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl SpectralState {
    pub fn zero(n: usize, l: f64, alpha: f64) -> Self {
        SpectralState {
            modes: vec![Complex::new(0.0, 0.0); n / 2 + 1],
            eigenvalues: spectral_eigenvalues(n, l, alpha),
        }
    }

    /// Value of the represented field at grid point 0 (x = 0): the modes sum
    /// with conjugate pairs folded, so the result is structurally real.
    pub fn trace_at_origin(&self) -> f64 {
        mode_sum(&self.modes)
    }

    /// Full Hermitian spectrum of length N (for tests and diagnostics).
    pub fn full_spectrum(&self) -> Vec<Complex<f64>> {
        let half = &self.modes;
        let n = (half.len() - 1) * 2;
        let mut full = vec![Complex::new(0.0, 0.0); n];
        full[..half.len()].copy_from_slice(half);
        for j in 1..n / 2 {
            full[n - j] = half[j].conj();
        }
        full
    }
}

#[inline]
fn mode_sum(modes: &[Complex<f64>]) -> f64 {
    let n2 = modes.len() - 1;
    let mut sum = modes[0].re;
    for m in &modes[1..n2] {
        sum += 2.0 * m.re;
    }
    sum + modes[n2].re
}

/// Per-mode update coefficients.
struct ModeCoeffs {
    /// e^{-lambda_j dt}
    decay: Vec<f64>,
    /// Per-component OU amplitude: g_j / sqrt(2) for complex modes, g_j for
    /// the real modes j = 0 and j = N/2.
    amp: Vec<f64>,
    /// Full complex amplitude g_j = sqrt((1 - e^{-2 lambda dt})/(2 lambda L)).
    g_full: Vec<f64>,
}

fn mode_coeffs(cfg: &GridConfig, alpha: f64, noise_scale: f64) -> ModeCoeffs {
    let n2 = cfg.n / 2;
    let eigen = spectral_eigenvalues(cfg.n, cfg.l, alpha);
    let mut decay = Vec::with_capacity(n2 + 1);
    let mut amp = Vec::with_capacity(n2 + 1);
    let mut g_full = Vec::with_capacity(n2 + 1);
    for (j, &lam) in eigen.iter().enumerate() {
        decay.push((-lam * cfg.dt).exp());
        let var = if lam > 0.0 {
            -(-2.0 * lam * cfg.dt).exp_m1() / (2.0 * lam * cfg.l)
        } else {
            cfg.dt / cfg.l
        };
        let g = noise_scale * var.sqrt();
        g_full.push(g);
        amp.push(if j == 0 || j == n2 { g } else { g * FRAC_1_SQRT_2 });
    }
    ModeCoeffs { decay, amp, g_full }
}

/// The white-noise increment consumed during step `step` (0-based), as the
/// Hermitian half-spectrum of mode increments: complex Gaussians of variance
/// dt/L, real Gaussians of variance dt/L at j = 0 and j = N/2.
///
/// Deterministic in (seed, step, replica); reconstructing step s replays the
/// per-mode streams, which costs O(step) draws per mode.
pub fn noise_increment(
    n: usize,
    l: f64,
    dt: f64,
    seed: u64,
    step: usize,
    replica: usize,
) -> Result<Vec<Complex<f64>>> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("dt = {dt} must be positive")));
    }
    if !(l > 0.0) || n < 4 || n % 2 != 0 {
        return Err(Error::Domain(format!("invalid noise shape n = {n}, L = {l}")));
    }
    let n2 = n / 2;
    let sd = (dt / l).sqrt();
    let mut out = Vec::with_capacity(n2 + 1);
    for j in 0..=n2 {
        let mut re = NormalStream::new(seed, StreamKind::FieldRe, replica as u64, j as u64);
        re.skip(step);
        let zr = re.next();
        if j == 0 || j == n2 {
            out.push(Complex::new(sd * zr, 0.0));
        } else {
            let mut im = NormalStream::new(seed, StreamKind::FieldIm, replica as u64, j as u64);
            im.skip(step);
            let zi = im.next();
            out.push(Complex::new(zr, zi) * (sd * FRAC_1_SQRT_2));
        }
    }
    Ok(out)
}

fn run_replicas<T: Send, F: Fn(usize) -> Result<T> + Sync + Send>(
    n_replicas: usize,
    parallel: bool,
    job: F,
) -> Result<Vec<T>> {
    if parallel {
        (0..n_replicas).into_par_iter().map(job).collect()
    } else {
        (0..n_replicas).map(job).collect()
    }
}

/// Simulate the linear equation and record the trace v_t(0).
///
/// Each mode is an autonomous OU process; only the real components feed the
/// x = 0 trace, so only the real-component streams are consumed.
pub fn simulate_linear(
    cfg: &GridConfig,
    params: &ModelParams,
    seed: u64,
    n_replicas: usize,
) -> Result<PathSample> {
    simulate_linear_impl(cfg, params, seed, n_replicas, true, 1.0)
}

/// Serial variant of [`simulate_linear`]; produces identical values.
pub fn simulate_linear_serial(
    cfg: &GridConfig,
    params: &ModelParams,
    seed: u64,
    n_replicas: usize,
) -> Result<PathSample> {
    simulate_linear_impl(cfg, params, seed, n_replicas, false, 1.0)
}

fn simulate_linear_impl(
    cfg: &GridConfig,
    params: &ModelParams,
    seed: u64,
    n_replicas: usize,
    parallel: bool,
    noise_scale: f64,
) -> Result<PathSample> {
    if n_replicas == 0 {
        return Err(Error::Contract("replica count must be >= 1".into()));
    }
    let coeffs = mode_coeffs(cfg, params.alpha, noise_scale);
    let n2 = cfg.n / 2;
    let rec_steps = cfg.record_steps();
    let n_rec = rec_steps.len();
    let rows = run_replicas(n_replicas, parallel, |replica| {
        let mut rec = vec![0.0f64; n_rec];
        for j in 0..=n2 {
            let mut stream = NormalStream::new(seed, StreamKind::FieldRe, replica as u64, j as u64);
            let decay = coeffs.decay[j];
            let amp = coeffs.amp[j];
            let weight = if j == 0 || j == n2 { 1.0 } else { 2.0 };
            let mut state = 0.0f64;
            let mut ri = 0usize;
            for step in 1..=cfg.n_steps {
                let z = stream.next();
                state = decay * state + amp * z;
                if ri < n_rec && step == rec_steps[ri] {
                    rec[ri] += weight * state;
                    ri += 1;
                }
            }
        }
        Ok(rec)
    })?;
    PathSample::from_rows(cfg.record_grid(), rows, seed, "v0")
}

/// Coupled traces of the nonlinear and linear runs driven by identical noise,
/// with an independent xi path on the record times.
#[derive(Clone, Debug)]
pub struct CoupledTrace {
    pub cfg: GridConfig,
    pub params: ModelParams,
    pub u0_trace: PathSample,
    pub v0_trace: PathSample,
    pub xi_path: PathSample,
    pub seed: u64,
    /// Set when u and v were produced by the same noise realization.
    pub coupled: bool,
}

struct Engine {
    cfg: GridConfig,
    params: ModelParams,
    drift: DriftPair,
    coeffs: ModeCoeffs,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    seed: u64,
}

impl Engine {
    fn new(cfg: &GridConfig, params: &ModelParams, drift: &DriftPair, seed: u64, noise_scale: f64) -> Self {
        let mut planner = RealFftPlanner::new();
        Engine {
            cfg: cfg.clone(),
            params: *params,
            drift: drift.clone(),
            coeffs: mode_coeffs(cfg, params.alpha, noise_scale),
            r2c: planner.plan_fft_forward(cfg.n),
            c2r: planner.plan_fft_inverse(cfg.n),
            seed,
        }
    }

    /// Evolve one replica; returns the u trace and (when requested) the
    /// coupled v trace on the record times.
    fn run_replica(&self, replica: usize, want_v: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.cfg.n;
        let n2 = n / 2;
        let cf = self.drift.f_const();
        let (decay, amp, g_full) = (&self.coeffs.decay, &self.coeffs.amp, &self.coeffs.g_full);
        let rec_steps = self.cfg.record_steps();
        let n_rec = rec_steps.len();
        let y0 = self.params.y0;
        let c_alpha = self.params.c_alpha;

        // Deviation from the flat initial condition: w = u - Y0, w(0) = 0.
        let mut u_modes = vec![Complex::new(0.0, 0.0); n2 + 1];
        let mut v_modes = vec![Complex::new(0.0, 0.0); n2 + 1];
        let mut str_re: Vec<NormalStream> = (0..=n2)
            .map(|j| NormalStream::new(self.seed, StreamKind::FieldRe, replica as u64, j as u64))
            .collect();
        let mut str_im: Vec<Option<NormalStream>> = (0..=n2)
            .map(|j| {
                (j != 0 && j != n2).then(|| {
                    NormalStream::new(self.seed, StreamKind::FieldIm, replica as u64, j as u64)
                })
            })
            .collect();
        let mut zr = vec![0.0f64; n2 + 1];
        let mut zi = vec![0.0f64; n2 + 1];
        let mut spec_buf = vec![Complex::new(0.0, 0.0); n2 + 1];
        let mut conv = vec![Complex::new(0.0, 0.0); n2 + 1];
        let mut phys_w = vec![0.0f64; n];
        let mut fvals = vec![0.0f64; n];
        let mut phys_z = vec![0.0f64; n];
        let mut scratch_fwd = self.r2c.make_scratch_vec();
        let mut scratch_inv = self.c2r.make_scratch_vec();
        let inv_n = 1.0 / n as f64;

        let mut u_row = vec![0.0f64; n_rec];
        let mut v_row = vec![0.0f64; n_rec];
        let mut ri = 0usize;

        for step in 1..=self.cfg.n_steps {
            for j in 0..=n2 {
                zr[j] = str_re[j].next();
                if let Some(s) = str_im[j].as_mut() {
                    zi[j] = s.next();
                }
            }

            if let Some(cf) = cf {
                // Constant drift factor: the convolution is a scalar
                // multiple, no transforms needed. With cf = 1 this is
                // bit-identical to the linear update.
                for j in 0..=n2 {
                    u_modes[j].re = decay[j] * u_modes[j].re + cf * (amp[j] * zr[j]);
                    u_modes[j].im = decay[j] * u_modes[j].im + cf * (amp[j] * zi[j]);
                }
            } else {
                // Physical field at step start.
                spec_buf.copy_from_slice(&u_modes);
                self.c2r
                    .process_with_scratch(&mut spec_buf, &mut phys_w, &mut scratch_inv)
                    .map_err(|e| Error::Numeric(format!("inverse FFT failed at step {step}: {e}")))?;
                self.eval_f(&phys_w, &mut fvals, c_alpha, y0);

                // Synthesize the white-noise pattern and multiply pointwise.
                for j in 0..=n2 {
                    spec_buf[j] = if j == 0 || j == n2 {
                        Complex::new(zr[j], 0.0)
                    } else {
                        Complex::new(zr[j] * FRAC_1_SQRT_2, zi[j] * FRAC_1_SQRT_2)
                    };
                }
                self.c2r
                    .process_with_scratch(&mut spec_buf, &mut phys_z, &mut scratch_inv)
                    .map_err(|e| Error::Numeric(format!("inverse FFT failed at step {step}: {e}")))?;
                for k in 0..n {
                    phys_z[k] *= fvals[k];
                }
                self.r2c
                    .process_with_scratch(&mut phys_z, &mut conv, &mut scratch_fwd)
                    .map_err(|e| Error::Numeric(format!("forward FFT failed at step {step}: {e}")))?;
                for c in conv.iter_mut() {
                    *c *= inv_n;
                }
                conv[0].im = 0.0;
                conv[n2].im = 0.0;

                for j in 0..=n2 {
                    u_modes[j] = u_modes[j] * decay[j] + conv[j] * g_full[j];
                }
            }

            if want_v {
                for j in 0..=n2 {
                    v_modes[j].re = decay[j] * v_modes[j].re + amp[j] * zr[j];
                    v_modes[j].im = decay[j] * v_modes[j].im + amp[j] * zi[j];
                }
            }

            if !u_modes[0].re.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite field in replica {replica} at step {step}"
                )));
            }

            if ri < n_rec && step == rec_steps[ri] {
                u_row[ri] = y0 + mode_sum(&u_modes);
                if want_v {
                    v_row[ri] = mode_sum(&v_modes);
                }
                ri += 1;
            }
        }
        Ok((u_row, v_row))
    }

    fn eval_f(&self, w: &[f64], out: &mut [f64], c_alpha: f64, y0: f64) {
        let fs = self.drift.f_scale;
        match &self.drift.g {
            GFn::Const(c) => out.fill(fs * c),
            GFn::Sin => {
                for (o, &x) in out.iter_mut().zip(w) {
                    *o = fs * (c_alpha * (y0 + x)).sin();
                }
            }
            GFn::Linear(c) => {
                for (o, &x) in out.iter_mut().zip(w) {
                    *o = fs * c * (c_alpha * (y0 + x));
                }
            }
            GFn::Table(_) | GFn::Custom(_) => {
                for (o, &x) in out.iter_mut().zip(w) {
                    *o = fs * self.drift.g.eval(c_alpha * (y0 + x));
                }
            }
        }
    }
}

/// Simulate the nonlinear equation (exponential Euler with the drift factor
/// frozen per step) and record the trace u_t(0).
pub fn simulate_nonlinear(
    cfg: &GridConfig,
    params: &ModelParams,
    drift: &DriftPair,
    seed: u64,
    n_replicas: usize,
) -> Result<PathSample> {
    if n_replicas == 0 {
        return Err(Error::Contract("replica count must be >= 1".into()));
    }
    let engine = Engine::new(cfg, params, drift, seed, 1.0);
    let rows = run_replicas(n_replicas, true, |r| Ok(engine.run_replica(r, false)?.0))?;
    PathSample::from_rows(cfg.record_grid(), rows, seed, "u0")
}

/// Run the nonlinear and linear equations on identical noise increments and
/// sample an independent xi path on the record times.
pub fn simulate_coupled(
    cfg: &GridConfig,
    params: &ModelParams,
    drift: &DriftPair,
    seed: u64,
    n_replicas: usize,
) -> Result<CoupledTrace> {
    simulate_coupled_impl(cfg, params, drift, seed, n_replicas, true)
}

/// Serial variant of [`simulate_coupled`]; produces identical values.
pub fn simulate_coupled_serial(
    cfg: &GridConfig,
    params: &ModelParams,
    drift: &DriftPair,
    seed: u64,
    n_replicas: usize,
) -> Result<CoupledTrace> {
    simulate_coupled_impl(cfg, params, drift, seed, n_replicas, false)
}

fn simulate_coupled_impl(
    cfg: &GridConfig,
    params: &ModelParams,
    drift: &DriftPair,
    seed: u64,
    n_replicas: usize,
    parallel: bool,
) -> Result<CoupledTrace> {
    if n_replicas == 0 {
        return Err(Error::Contract("replica count must be >= 1".into()));
    }
    let engine = Engine::new(cfg, params, drift, seed, 1.0);
    let pairs = run_replicas(n_replicas, parallel, |r| engine.run_replica(r, true))?;
    let mut u_rows = Vec::with_capacity(n_replicas);
    let mut v_rows = Vec::with_capacity(n_replicas);
    for (u, v) in pairs {
        u_rows.push(u);
        v_rows.push(v);
    }
    let grid = cfg.record_grid();
    let u0_trace = PathSample::from_rows(grid.clone(), u_rows, seed, "u0")?;
    let v0_trace = PathSample::from_rows(grid.clone(), v_rows, seed, "v0")?;
    let xi_path = sample_xi(&grid, params, seed, n_replicas)?;
    Ok(CoupledTrace {
        cfg: cfg.clone(),
        params: *params,
        u0_trace,
        v0_trace,
        xi_path,
        seed,
        coupled: true,
    })
}
