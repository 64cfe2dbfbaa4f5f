//! Run configuration: a JSON document validated into a `RunConfig`.

use roughdrive_core::{GFn, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXPERIMENTS: [&str; 8] = [
    "constants",
    "kernel-identities",
    "cov-decomposition",
    "linear-law",
    "fbm-extraction",
    "holder-slope",
    "correction-rate",
    "weak-solution",
];

fn default_g_spec() -> String {
    "sin".into()
}
fn default_y0() -> f64 {
    1.0
}
fn default_t() -> f64 {
    1.0
}
fn default_l() -> f64 {
    8.0
}
fn default_n() -> usize {
    1024
}
fn default_dt() -> f64 {
    1.0 / 2048.0
}
fn default_replicas() -> usize {
    10_000
}
fn default_experiments() -> Vec<String> {
    EXPERIMENTS.iter().map(|s| s.to_string()).collect()
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A run configuration. `H` and `seed` are mandatory (seeds are the only
/// entropy source of a run); everything else has defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(default = "default_g_spec")]
    pub g_spec: String,
    #[serde(rename = "Y0", default = "default_y0")]
    pub y0: f64,
    #[serde(rename = "T", default = "default_t")]
    pub t: f64,
    #[serde(rename = "L", default = "default_l")]
    pub l: f64,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_replicas")]
    pub n_replicas: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_experiments")]
    pub experiments: Vec<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Parse and validate, reporting every violation at once.
    pub fn load(path: &Path) -> std::result::Result<RunConfig, Vec<String>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![format!("cannot read config {}: {e}", path.display())])?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| vec![format!("config parse error: {e}")])?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut v = Vec::new();
        if !(self.h > 0.0 && self.h <= 0.25) {
            v.push(format!(
                "H: {} violates Dalang's condition (H must lie in (0, 1/4], i.e. alpha = 1/(1-2H) in (1, 2])",
                self.h
            ));
        }
        if !(self.t > 0.0) {
            v.push(format!("T: {} must be positive", self.t));
        }
        if !(self.l > 0.0) {
            v.push(format!("L: {} must be positive", self.l));
        }
        if self.n < 64 || !self.n.is_power_of_two() {
            v.push(format!("N: {} must be a power of two >= 64", self.n));
        }
        if !(self.dt > 0.0 && self.dt <= self.t) {
            v.push(format!("dt: {} must lie in (0, T]", self.dt));
        }
        if self.n_replicas == 0 {
            v.push("n_replicas: must be >= 1".into());
        }
        if self.seed.is_none() {
            v.push("seed: missing (seeds are mandatory for reproducibility)".into());
        }
        for e in &self.experiments {
            if !EXPERIMENTS.contains(&e.as_str()) {
                v.push(format!(
                    "experiments: unknown experiment '{e}' (known: {})",
                    EXPERIMENTS.join(", ")
                ));
            }
        }
        if let Err(e) = parse_g_spec(&self.g_spec) {
            v.push(format!("g_spec: {e}"));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    /// SHA-256 of the canonical serialized config. The output directory is
    /// not part of the identity: it has no effect on any computed value.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::from("-");
        let canon = serde_json::to_string(&canon).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        hex_string(&h.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse a drift spec: `const:<c>`, `sin`, `linear:<slope>`, or
/// `custom-table:<path>` (CSV rows `x,g(x)`).
pub fn parse_g_spec(spec: &str) -> std::result::Result<GFn, String> {
    if spec == "sin" {
        return Ok(GFn::Sin);
    }
    if let Some(c) = spec.strip_prefix("const:") {
        let c: f64 = c.parse().map_err(|e| format!("bad constant in '{spec}': {e}"))?;
        return Ok(GFn::Const(c));
    }
    if let Some(c) = spec.strip_prefix("linear:") {
        let c: f64 = c.parse().map_err(|e| format!("bad slope in '{spec}': {e}"))?;
        return Ok(GFn::Linear(c));
    }
    if let Some(path) = spec.strip_prefix("custom-table:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read drift table '{path}': {e}"))?;
        let mut pts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
                continue;
            }
            let mut parts = line.split(',');
            let x: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| format!("drift table line {} malformed", i + 1))?;
            let y: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| format!("drift table line {} malformed", i + 1))?;
            pts.push((x, y));
        }
        if pts.len() < 2 {
            return Err("drift table needs at least two points".into());
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        return Ok(GFn::Table(Arc::new(pts)));
    }
    Err(format!(
        "unknown g_spec '{spec}' (expected const:<c>, sin, linear:<slope>, custom-table:<path>)"
    ))
}

/// Build the drift pair from the config.
pub fn drift_from_config(
    cfg: &RunConfig,
    params: &roughdrive_core::ModelParams,
) -> Result<roughdrive_core::DriftPair> {
    let g = parse_g_spec(&cfg.g_spec)
        .map_err(roughdrive_core::Error::Config)?;
    Ok(roughdrive_core::make_drift_pair(g, params))
}
