use roughdrive_core::experiments::*;
use roughdrive_core::fields::extract_fbm;
use roughdrive_core::spde::{simulate_coupled, GridConfig};
use roughdrive_core::{derive_params, make_drift_pair, GFn};
use std::time::Instant;

fn main() {
    let n_rep: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let dt = 1.0 / 2048.0;
    let t_probe = 0.5;
    let lag_steps: [usize; 6] = [4, 8, 16, 32, 64, 128];
    let mut records = vec![0.25, 0.5];
    records.extend(lag_steps.iter().map(|&k| 0.5 + k as f64 * dt));
    records.push(1.0);
    let cfg = GridConfig::new(8.0, 1024, dt, 2048, records).unwrap();
    let p = derive_params(0.25, 1.0, 1.0).unwrap();
    let drift = make_drift_pair(GFn::Sin, &p);
    let eps: Vec<f64> = lag_steps.iter().rev().map(|&k| k as f64 * dt).collect();

    let t0 = Instant::now();
    let tr = simulate_coupled(&cfg, &p, &drift, 0xACCE97, n_rep).unwrap();
    println!("coupled run: {n_rep} replicas in {:.1} s", t0.elapsed().as_secs_f64());

    // criterion 5: extracted fBm
    let x = extract_fbm(&tr.v0_trace, &tr.xi_path, &p).unwrap();
    let rep = estimate_fbm_increments(&x, p.h, t_probe, &eps).unwrap();
    println!("C5 fbm: slope {:.4}+-{:.4}, ratios {:?}, pass {}", rep.fit.slope, rep.fit.slope_se,
        rep.ratios.iter().map(|r| (r*1000.0).round()/1000.0).collect::<Vec<_>>(), rep.pass);

    // criterion 6: holder slope
    let rep = estimate_holder_slope(&tr.u0_trace, p.h, t_probe, &eps).unwrap();
    println!("C6 holder: slope {:.4}+-{:.4}, pass {}", rep.fit.slope, rep.fit.slope_se, rep.pass);

    // criterion 7: correction rate
    let rep = estimate_correction_rate(&tr, &drift, t_probe, &eps).unwrap();
    let fit = rep.fit.as_ref().unwrap();
    let raw = rep.raw_fit.as_ref().unwrap();
    println!("C7 correction: slope {:.4}+-{:.4} (raw {:.4}), ref {:.2}, pass {}",
        fit.slope, fit.slope_se, raw.slope, rep.reference_slope, rep.pass);
    println!("   moments: {:?}", fit.moments.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>());

    // criterion 8: weak solution
    let b = 0.5 * (p.h + p.g_h);
    let rep = verify_weak_solution(&tr, &drift, &p, 0.5, b, t_probe, &eps).unwrap();
    println!("C8 weak: exceed {:?}, excluded {}, pass {}",
        rep.exceed_probs.iter().map(|x| (x*1000.0).round()/1000.0).collect::<Vec<_>>(),
        rep.excluded_fraction, rep.pass);
    println!("total: {:.1} s", t0.elapsed().as_secs_f64());
}
