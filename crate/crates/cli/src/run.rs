//! Experiment orchestration: run the requested experiments in declaration
//! order, write per-experiment artifacts and a single run manifest.

use crate::config::{drift_from_config, RunConfig};
use roughdrive_core::experiments::{
    estimate_correction_rate, estimate_fbm_increments, estimate_holder_slope,
    gaussian_tail_probe, verify_constants, verify_cov_decomposition, verify_kernel_suite,
    verify_linear_law, verify_weak_solution, ExperimentRecord,
};
use roughdrive_core::fields::extract_fbm;
use roughdrive_core::spde::{simulate_coupled, simulate_linear, CoupledTrace};
use roughdrive_core::{derive_params, DriftPair, Error, GridConfig, ModelParams, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
pub struct ManifestExperiment {
    pub name: String,
    pub pass: bool,
    pub wall_ms: u128,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub params: ModelParams,
    pub experiments: Vec<ManifestExperiment>,
    pub artifacts: Vec<String>,
    pub wall_ms: u128,
}

/// Simulation plan shared by the coupled experiments.
struct Plan {
    grid_cfg: GridConfig,
    t_probe: f64,
    epsilons: Vec<f64>,
    probe_times: Vec<f64>,
    corr_pair: (f64, f64),
}

fn build_plan(cfg: &RunConfig) -> Result<Plan> {
    let steps_f = cfg.t / cfg.dt;
    let n_steps = steps_f.round();
    if (steps_f - n_steps).abs() > 1e-9 * steps_f.max(1.0) || n_steps < 256.0 {
        return Err(Error::Config(format!(
            "T/dt = {steps_f} must be an integer >= 256 so that dyadic lags fit around T/2"
        )));
    }
    let n_steps = n_steps as usize;
    // Dyadic lags 4 dt .. 128 dt (spanning 1.5 decades), probe at T/2.
    let lag_steps: Vec<usize> = (0..6).map(|i| 4usize << i).collect();
    let probe_step = n_steps / 2;
    let mut record_steps: Vec<usize> = vec![n_steps / 4, probe_step];
    record_steps.extend(lag_steps.iter().map(|&k| probe_step + k));
    record_steps.push(n_steps);
    record_steps.sort_unstable();
    record_steps.dedup();
    let record_times: Vec<f64> = record_steps.iter().map(|&s| s as f64 * cfg.dt).collect();
    let grid_cfg = GridConfig::new(cfg.l, cfg.n, cfg.dt, n_steps, record_times)?;
    let t_probe = probe_step as f64 * cfg.dt;
    let mut epsilons: Vec<f64> = lag_steps.iter().map(|&k| k as f64 * cfg.dt).collect();
    epsilons.reverse(); // decreasing
    Ok(Plan {
        grid_cfg,
        t_probe,
        epsilons,
        probe_times: vec![
            (n_steps / 4) as f64 * cfg.dt,
            probe_step as f64 * cfg.dt,
            n_steps as f64 * cfg.dt,
        ],
        corr_pair: (probe_step as f64 * cfg.dt, n_steps as f64 * cfg.dt),
    })
}

struct Ctx {
    cfg: RunConfig,
    params: ModelParams,
    drift: DriftPair,
    hash: String,
    coupled: Option<CoupledTrace>,
}

impl Ctx {
    fn coupled(&mut self) -> Result<&CoupledTrace> {
        if self.coupled.is_none() {
            let plan = build_plan(&self.cfg)?;
            let tr = simulate_coupled(
                &plan.grid_cfg,
                &self.params,
                &self.drift,
                self.cfg.seed(),
                self.cfg.n_replicas,
            )?;
            self.coupled = Some(tr);
        }
        Ok(self.coupled.as_ref().expect("just set"))
    }

    fn record(&self, name: &str, pass: bool, details: Vec<String>, table: Vec<(f64, f64, f64)>) -> ExperimentRecord {
        ExperimentRecord {
            name: name.into(),
            pass,
            seed: self.cfg.seed(),
            config_hash: self.hash.clone(),
            n_replicas: self.cfg.n_replicas,
            details,
            table,
        }
    }
}

fn run_experiment(ctx: &mut Ctx, name: &str) -> Result<ExperimentRecord> {
    match name {
        "constants" => {
            let rep = verify_constants(1000, ctx.cfg.seed());
            Ok(ctx.record(
                name,
                rep.pass,
                vec![
                    format!("samples: {}", rep.n_samples),
                    format!("max_alpha_roundtrip: {:e}", rep.max_roundtrip),
                    format!("max_kappa_rel: {:e}", rep.max_kappa_rel),
                    format!("max_split_identity: {:e}", rep.max_split_identity),
                    format!("ratio_bounds_ok: {}", rep.ratio_bounds_ok),
                ],
                vec![],
            ))
        }
        "kernel-identities" => {
            let rep = verify_kernel_suite(&[2.0, 5.0 / 3.0], 5001)?;
            let mut details = Vec::new();
            for c in &rep.checks {
                details.push(format!(
                    "alpha {:.6}: mass_err {:.2e}, l2_rel {:.2e}, peak_rel {:.2e}, ck_sup {:.2e}{}{}",
                    c.alpha,
                    c.mass_error,
                    c.l2_rel_error,
                    c.peak_rel_error,
                    c.ck_sup_error,
                    c.gauss_max_error
                        .map(|e| format!(", gauss_max {e:.2e}"))
                        .unwrap_or_default(),
                    if c.pass { "" } else { " FAIL" },
                ));
            }
            Ok(ctx.record(name, rep.pass, details, vec![]))
        }
        "cov-decomposition" => {
            let grid: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
            let mut pass = true;
            let mut details = Vec::new();
            for h in [0.2, 0.25] {
                let rep = verify_cov_decomposition(h, &grid)?;
                pass &= rep.pass;
                details.push(format!(
                    "H {h}: max_residual {:.3e}, quadrature_residual {:.3e}{}",
                    rep.max_residual,
                    rep.max_quadrature_residual,
                    if rep.pass { "" } else { " FAIL" }
                ));
            }
            Ok(ctx.record(name, pass, details, vec![]))
        }
        "linear-law" => {
            let plan = build_plan(&ctx.cfg)?;
            let v = simulate_linear(&plan.grid_cfg, &ctx.params, ctx.cfg.seed(), ctx.cfg.n_replicas)?;
            let rep = verify_linear_law(&v, &ctx.params, &plan.probe_times, plan.corr_pair)?;
            let mut details = Vec::new();
            let mut table = Vec::new();
            for c in &rep.variance_checks {
                details.push(format!(
                    "t {}: var {:.6} vs {:.6} (band {:.6}){}",
                    c.t,
                    c.empirical,
                    c.target,
                    c.band,
                    if c.pass { "" } else { " FAIL" }
                ));
                table.push((c.t, c.empirical, c.band / 3.0));
            }
            details.push(format!(
                "corr({}, {}): {:.4} vs {:.4} (band {:.4})",
                plan.corr_pair.0, plan.corr_pair.1, rep.corr_empirical, rep.corr_target, rep.corr_band
            ));
            Ok(ctx.record(name, rep.pass, details, table))
        }
        "fbm-extraction" => {
            let (h, t_probe, eps) = {
                let plan = build_plan(&ctx.cfg)?;
                (ctx.params.h, plan.t_probe, plan.epsilons)
            };
            let params = ctx.params;
            let tr = ctx.coupled()?;
            let x = extract_fbm(&tr.v0_trace, &tr.xi_path, &params)?;
            let rep = estimate_fbm_increments(&x, h, t_probe, &eps)?;
            let table = zip_table(&rep.fit.epsilons, &rep.fit.moments, &rep.fit.moment_ses);
            Ok(ctx.record(
                name,
                rep.pass,
                vec![
                    format!("slope: {:.4} +- {:.4} (target {})", rep.fit.slope, rep.fit.slope_se, rep.target_slope),
                    format!("moment_ratios: {:?}", rep.ratios),
                ],
                table,
            ))
        }
        "holder-slope" => {
            let (h, t_probe, eps) = {
                let plan = build_plan(&ctx.cfg)?;
                (ctx.params.h, plan.t_probe, plan.epsilons)
            };
            let tr = ctx.coupled()?;
            let rep = estimate_holder_slope(&tr.u0_trace, h, t_probe, &eps)?;
            let table = zip_table(&rep.fit.epsilons, &rep.fit.moments, &rep.fit.moment_ses);
            Ok(ctx.record(
                name,
                rep.pass,
                vec![format!(
                    "slope: {:.4} +- {:.4} (target {}, window [{}, {}])",
                    rep.fit.slope,
                    rep.fit.slope_se,
                    rep.target_slope,
                    rep.target_slope - 0.1,
                    rep.target_slope + 0.15
                )],
                table,
            ))
        }
        "correction-rate" => {
            let (t_probe, eps) = {
                let plan = build_plan(&ctx.cfg)?;
                (plan.t_probe, plan.epsilons)
            };
            let drift = ctx.drift.clone();
            let tr = ctx.coupled()?;
            let rep = estimate_correction_rate(tr, &drift, t_probe, &eps)?;
            let mut details = vec![format!("reference_exponent_2G_H: {}", rep.reference_slope)];
            let mut table = Vec::new();
            if rep.degenerate_zero {
                details.push("degenerate-zero: correction vanishes identically".into());
            }
            if let Some(fit) = &rep.fit {
                details.push(format!("correction_slope: {:.4} +- {:.4}", fit.slope, fit.slope_se));
                table = zip_table(&fit.epsilons, &fit.moments, &fit.moment_ses);
            }
            if let Some(raw) = &rep.raw_fit {
                details.push(format!("raw_increment_slope: {:.4} +- {:.4}", raw.slope, raw.slope_se));
            }
            Ok(ctx.record(name, rep.pass, details, table))
        }
        "weak-solution" => {
            let (t_probe, eps) = {
                let plan = build_plan(&ctx.cfg)?;
                (plan.t_probe, plan.epsilons)
            };
            let params = ctx.params;
            let drift = ctx.drift.clone();
            let b = 0.5 * (params.h + params.g_h);
            let delta = 0.5;
            let tr = ctx.coupled()?;
            let rep = verify_weak_solution(tr, &drift, &params, delta, b, t_probe, &eps)?;
            let mut details = vec![
                format!("delta: {delta}"),
                format!("b_exponent: {b}"),
                format!("t_probe: {t_probe}"),
                format!("exceed_probs: {:?}", rep.exceed_probs),
                format!("exceed_ses: {:?}", rep.exceed_ses),
                format!("chebyshev_ratios: {:?}", rep.chebyshev_ratios),
                format!("gaussian_tails: {:?}", rep.gaussian_tails),
                format!("excluded_fraction: {}", rep.excluded_fraction),
            ];
            // small-ball probe is monotone along the lag ladder
            let probes: Vec<f64> = rep
                .epsilons
                .iter()
                .map(|&e| gaussian_tail_probe(e, b, params.h, delta).unwrap_or(f64::NAN))
                .collect();
            details.push(format!("tail_probe_monotone: {}", probes.windows(2).all(|w| w[1] <= w[0])));
            let table: Vec<(f64, f64, f64)> = rep
                .epsilons
                .iter()
                .zip(rep.exceed_probs.iter().zip(&rep.exceed_ses))
                .map(|(&e, (&p, &s))| (e, p, s))
                .collect();
            Ok(ctx.record(name, rep.pass, details, table))
        }
        other => Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
}

fn zip_table(eps: &[f64], m: &[f64], se: &[f64]) -> Vec<(f64, f64, f64)> {
    eps.iter()
        .zip(m.iter().zip(se))
        .map(|(&e, (&m, &s))| (e, m, s))
        .collect()
}

/// Execute the requested experiments; returns the process exit code.
pub fn run(cfg: RunConfig, only: Option<Vec<String>>) -> i32 {
    let t0 = Instant::now();
    let params = match derive_params(cfg.h, cfg.y0, cfg.t) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let drift = match drift_from_config(&cfg, &params) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let names: Vec<String> = only.unwrap_or_else(|| cfg.experiments.clone());
    let out_dir = cfg.output_dir.clone();
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create output dir {}: {e}", out_dir.display());
        return 2;
    }

    let hash = cfg.hash();
    let mut ctx = Ctx {
        cfg,
        params,
        drift,
        hash: hash.clone(),
        coupled: None,
    };
    let mut manifest_exps = Vec::new();
    let mut artifacts = Vec::new();
    let mut all_pass = true;

    for name in &names {
        let te = Instant::now();
        match run_experiment(&mut ctx, name) {
            Ok(rec) => {
                println!("{}: {}", name, if rec.pass { "PASS" } else { "FAIL" });
                if !rec.pass {
                    all_pass = false;
                }
                if let Err(e) = write_artifacts(&out_dir, &rec, &mut artifacts) {
                    eprintln!("cannot write artifacts for {name}: {e}");
                    return 1;
                }
                manifest_exps.push(ManifestExperiment {
                    name: name.clone(),
                    pass: rec.pass,
                    wall_ms: te.elapsed().as_millis(),
                    error: None,
                });
            }
            Err(e) => {
                println!("{name}: ERROR ({e})");
                all_pass = false;
                manifest_exps.push(ManifestExperiment {
                    name: name.clone(),
                    pass: false,
                    wall_ms: te.elapsed().as_millis(),
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: ctx.cfg.clone(),
        config_hash: hash,
        params,
        experiments: manifest_exps,
        artifacts: artifacts.clone(),
        wall_ms: t0.elapsed().as_millis(),
    };
    let manifest_path = out_dir.join("manifest.json");
    match serde_json::to_string_pretty(&manifest) {
        Ok(text) => {
            if let Err(e) = std::fs::write(&manifest_path, text) {
                eprintln!("cannot write manifest: {e}");
                return 1;
            }
        }
        Err(e) => {
            eprintln!("cannot serialize manifest: {e}");
            return 1;
        }
    }
    if all_pass {
        0
    } else {
        1
    }
}

fn write_artifacts(
    out_dir: &Path,
    rec: &ExperimentRecord,
    artifacts: &mut Vec<String>,
) -> std::io::Result<()> {
    let txt = out_dir.join(format!("{}.report.txt", rec.name));
    std::fs::write(&txt, rec.to_text())?;
    artifacts.push(txt.display().to_string());
    let csv = out_dir.join(format!("{}.csv", rec.name));
    if rec.table.is_empty() {
        // key,value CSV for scalar experiments
        let mut text = String::from("# roughdrive-csv v1\nkey,value\n");
        text.push_str(&format!("pass,{}\n", rec.pass));
        for d in &rec.details {
            if let Some((k, v)) = d.split_once(": ") {
                text.push_str(&format!("{},{}\n", k.replace(',', ";"), v.replace(',', ";")));
            }
        }
        std::fs::write(&csv, text)?;
    } else {
        std::fs::write(&csv, rec.table_csv())?;
        let dat = out_dir.join(format!("{}.plot.dat", rec.name));
        std::fs::write(&dat, rec.plot_dat())?;
        artifacts.push(dat.display().to_string());
    }
    artifacts.push(csv.display().to_string());
    Ok(())
}

/// Coupled-trace dump: CSV with columns replica, t, u0, v0, xi.
pub fn dump_trace(cfg: &RunConfig, out_path: &Path) -> Result<PathBuf> {
    let params = derive_params(cfg.h, cfg.y0, cfg.t)?;
    let drift = drift_from_config(cfg, &params)?;
    let plan = build_plan(cfg)?;
    let tr = simulate_coupled(&plan.grid_cfg, &params, &drift, cfg.seed(), cfg.n_replicas)?;
    let mut text = String::from("# roughdrive-csv v1\nreplica,t,u0,v0,xi\n");
    let times = tr.u0_trace.grid.points().to_vec();
    for i in 0..tr.u0_trace.n_replicas() {
        for (j, &t) in times.iter().enumerate() {
            text.push_str(&format!(
                "{i},{t},{},{},{}\n",
                tr.u0_trace.value(i, j),
                tr.v0_trace.value(i, j),
                tr.xi_path.value(i, j)
            ));
        }
    }
    std::fs::write(out_path, text)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", out_path.display())))?;
    Ok(out_path.to_path_buf())
}
