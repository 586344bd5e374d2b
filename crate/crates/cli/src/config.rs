//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use spinwave_core::bounds::BoundOptions;
use spinwave_core::experiment::{linspace, logspace, PipelineParams};

/// Inclusive range sampled at `steps` points, linearly or logarithmically.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub log: bool,
}

impl Sweep {
    pub fn points(&self) -> Vec<f64> {
        if self.log {
            logspace(self.lo, self.hi, self.steps)
        } else {
            linspace(self.lo, self.hi, self.steps)
        }
    }

    fn render(&self) -> String {
        format!("{}, {}, {}", self.lo, self.hi, self.steps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NuRead {
    Fixed(f64),
    /// Bisect `nu_read` so the W pipeline hits `target_yc`.
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub xi: f64,
    pub write_phases_deg: [f64; 4],
    pub herald_efficiency: f64,
    pub eta_read: f64,
    pub nu_read: NuRead,
    pub target_yc: f64,
    pub v0: f64,
    pub tau_m_us: f64,
    pub tau_us: f64,
    pub cutoff: usize,
    /// `None` matches the verification phases to the state.
    pub beta_phases_deg: Option<[f64; 3]>,
    pub detector_eta: f64,
    pub crossed_yc: f64,
    pub xi_sweep: Sweep,
    pub beta2_sweep_deg: Sweep,
    pub tau_sweep_us: Sweep,
    pub kt_sweep: Sweep,
    pub h_z_over_j: f64,
    pub bounds_yc: Vec<f64>,
    pub bounds_restarts: usize,
    pub bounds_rank: usize,
    pub bounds_tol_yc: f64,
    pub bounds_tol_agree: f64,
    pub swap_z: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = PipelineParams::default();
        let b = BoundOptions::default();
        Self {
            xi: p.xi,
            write_phases_deg: [0.0; 4],
            herald_efficiency: p.herald_efficiency,
            eta_read: p.eta_read,
            nu_read: NuRead::Fixed(p.nu_read),
            target_yc: 0.038,
            v0: p.v0,
            tau_m_us: p.tau_m_us,
            tau_us: p.tau_us,
            cutoff: p.cutoff,
            beta_phases_deg: None,
            detector_eta: p.detector_eta,
            crossed_yc: 0.07,
            xi_sweep: Sweep { lo: 1e-3, hi: 0.3, steps: 25, log: true },
            beta2_sweep_deg: Sweep { lo: 0.0, hi: 360.0, steps: 37, log: false },
            tau_sweep_us: Sweep { lo: 0.2, hi: 36.2, steps: 37, log: false },
            kt_sweep: Sweep { lo: 1e-3, hi: 10.0, steps: 61, log: true },
            h_z_over_j: 0.5,
            bounds_yc: default_bounds_grid(),
            bounds_restarts: b.restarts,
            bounds_rank: b.mixture_rank,
            bounds_tol_yc: b.tol_yc,
            bounds_tol_agree: b.tol_agree,
            swap_z: 400.0,
            seed: b.seed,
        }
    }
}

pub fn default_bounds_grid() -> Vec<f64> {
    vec![
        0.0, 0.02, 0.04, 0.06, 0.07, 0.08, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.8,
        1.0,
    ]
}

pub const KEYS: &[&str] = &[
    "xi",
    "write_phases",
    "herald_efficiency",
    "eta_read",
    "nu_read",
    "target_yc",
    "v0",
    "tau_m_us",
    "tau_us",
    "cutoff",
    "beta_phases",
    "detector_eta",
    "crossed_yc",
    "xi_sweep",
    "beta2_sweep",
    "tau_sweep",
    "kt_sweep",
    "h_z_over_j",
    "bounds_yc",
    "bounds_restarts",
    "bounds_rank",
    "bounds_tol_yc",
    "bounds_tol_agree",
    "swap_z",
    "seed",
];

fn nearest_key(key: &str) -> &'static str {
    KEYS.iter()
        .min_by_key(|k| strsim::levenshtein(key, k))
        .copied()
        .unwrap_or("xi")
}

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .with_context(|| format!("{key}: `{}` is not a number", v.trim()))?;
    if !x.is_finite() {
        bail!("{key} must be finite");
    }
    Ok(x)
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s)).collect()
}

fn fixed<const N: usize>(key: &str, v: &str) -> Result<[f64; N]> {
    let l = list(key, v)?;
    l.try_into()
        .map_err(|l: Vec<f64>| anyhow::anyhow!("{key} needs {N} comma-separated values, got {}", l.len()))
}

fn sweep(key: &str, v: &str, log: bool) -> Result<Sweep> {
    let [lo, hi, steps] = fixed::<3>(key, v)?;
    if steps < 1.0 || steps.fract() != 0.0 {
        bail!("{key}: step count must be a positive integer");
    }
    if !(lo <= hi) {
        bail!("{key}: range must satisfy lo <= hi");
    }
    if log && !(lo > 0.0) {
        bail!("{key}: logarithmic range needs lo > 0");
    }
    Ok(Sweep { lo, hi, steps: steps as usize, log })
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .with_context(|| format!("{key}: `{}` is not a non-negative integer", v.trim()))
}

/// Parsed config and any warnings raised while reading it.
pub fn parse(text: &str) -> Result<(ExperimentConfig, Vec<String>)> {
    let mut c = ExperimentConfig::default();
    let mut warnings = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got `{line}`", i + 1);
        };
        let (key, v) = (key.trim(), value.trim());
        match key {
            "xi" => c.xi = num(key, v)?,
            "write_phases" => c.write_phases_deg = fixed(key, v)?,
            "herald_efficiency" => c.herald_efficiency = num(key, v)?,
            "eta_read" => c.eta_read = num(key, v)?,
            "nu_read" => {
                c.nu_read = if v == "auto" { NuRead::Auto } else { NuRead::Fixed(num(key, v)?) }
            }
            "target_yc" => c.target_yc = num(key, v)?,
            "v0" => c.v0 = num(key, v)?,
            "tau_m_us" => c.tau_m_us = num(key, v)?,
            "tau_us" => c.tau_us = num(key, v)?,
            "cutoff" => c.cutoff = count(key, v)?,
            "beta_phases" => {
                c.beta_phases_deg = if v == "matched" { None } else { Some(fixed(key, v)?) }
            }
            "detector_eta" => c.detector_eta = num(key, v)?,
            "crossed_yc" => c.crossed_yc = num(key, v)?,
            "xi_sweep" => c.xi_sweep = sweep(key, v, true)?,
            "beta2_sweep" => c.beta2_sweep_deg = sweep(key, v, false)?,
            "tau_sweep" => c.tau_sweep_us = sweep(key, v, false)?,
            "kt_sweep" => c.kt_sweep = sweep(key, v, true)?,
            "h_z_over_j" => c.h_z_over_j = num(key, v)?,
            "bounds_yc" => c.bounds_yc = list(key, v)?,
            "bounds_restarts" => c.bounds_restarts = count(key, v)?,
            "bounds_rank" => c.bounds_rank = count(key, v)?,
            "bounds_tol_yc" => c.bounds_tol_yc = num(key, v)?,
            "bounds_tol_agree" => c.bounds_tol_agree = num(key, v)?,
            "swap_z" => c.swap_z = num(key, v)?,
            "seed" => c.seed = v.parse().with_context(|| format!("seed: `{v}` is not an unsigned integer"))?,
            _ => warnings.push(format!(
                "line {}: unknown key `{key}` ignored (did you mean `{}`?)",
                i + 1,
                nearest_key(key)
            )),
        }
    }
    c.validate()?;
    Ok((c, warnings))
}

pub fn load(path: &Path) -> Result<(ExperimentConfig, Vec<String>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        bail!("{name} must be in [0, 1], got {v}");
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        bail!("{name} must be > 0, got {v}");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.xi < 0.0 {
            bail!("xi must be >= 0, got {}", self.xi);
        }
        if self.xi >= 0.5 {
            bail!("xi must be < 0.5, got {}", self.xi);
        }
        unit("herald_efficiency", self.herald_efficiency)?;
        positive("herald_efficiency", self.herald_efficiency)?;
        unit("eta_read", self.eta_read)?;
        if let NuRead::Fixed(nu) = self.nu_read {
            unit("nu_read", nu)?;
        }
        positive("target_yc", self.target_yc)?;
        unit("v0", self.v0)?;
        positive("tau_m_us", self.tau_m_us)?;
        if !(self.tau_us >= 0.0) {
            bail!("tau_us must be >= 0, got {}", self.tau_us);
        }
        if !(1..=4).contains(&self.cutoff) {
            bail!("cutoff must be in [1, 4], got {}", self.cutoff);
        }
        unit("detector_eta", self.detector_eta)?;
        positive("crossed_yc", self.crossed_yc)?;
        if self.xi_sweep.hi >= 0.5 {
            bail!("xi_sweep upper end must be < 0.5, got {}", self.xi_sweep.hi);
        }
        if self.tau_sweep_us.lo < 0.0 {
            bail!("tau_sweep must start at >= 0, got {}", self.tau_sweep_us.lo);
        }
        if self.bounds_yc.is_empty() || self.bounds_yc.windows(2).any(|w| !(w[0] < w[1])) {
            bail!("bounds_yc must be a non-empty, strictly increasing list");
        }
        if self.bounds_yc[0] < 0.0 {
            bail!("bounds_yc values must be >= 0");
        }
        if self.bounds_restarts == 0 || self.bounds_rank == 0 {
            bail!("bounds_restarts and bounds_rank must be >= 1");
        }
        positive("bounds_tol_yc", self.bounds_tol_yc)?;
        positive("bounds_tol_agree", self.bounds_tol_agree)?;
        positive("swap_z", self.swap_z)?;
        Ok(())
    }

    pub fn pipeline(&self, nu_read: f64) -> PipelineParams {
        PipelineParams {
            xi: self.xi,
            write_phases: self.write_phases_deg.map(f64::to_radians),
            herald_efficiency: self.herald_efficiency,
            eta_read: self.eta_read,
            nu_read,
            v0: self.v0,
            tau_m_us: self.tau_m_us,
            tau_us: self.tau_us,
            detector_eta: self.detector_eta,
            cutoff: self.cutoff,
            beta: self.beta_phases_deg.map(|b| b.map(f64::to_radians)),
        }
    }

    pub fn bound_options(&self) -> BoundOptions {
        BoundOptions {
            restarts: self.bounds_restarts,
            mixture_rank: self.bounds_rank,
            seed: self.seed,
            tol_yc: self.bounds_tol_yc,
            tol_agree: self.bounds_tol_agree,
            ..BoundOptions::default()
        }
    }

    /// Fully resolved config in the input syntax.
    pub fn echo(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("xi", self.xi.to_string());
        kv("write_phases", join(&self.write_phases_deg));
        kv("herald_efficiency", self.herald_efficiency.to_string());
        kv("eta_read", self.eta_read.to_string());
        kv(
            "nu_read",
            match self.nu_read {
                NuRead::Fixed(v) => v.to_string(),
                NuRead::Auto => "auto".into(),
            },
        );
        kv("target_yc", self.target_yc.to_string());
        kv("v0", self.v0.to_string());
        kv("tau_m_us", self.tau_m_us.to_string());
        kv("tau_us", self.tau_us.to_string());
        kv("cutoff", self.cutoff.to_string());
        kv(
            "beta_phases",
            self.beta_phases_deg.map_or("matched".into(), |b| join(&b)),
        );
        kv("detector_eta", self.detector_eta.to_string());
        kv("crossed_yc", self.crossed_yc.to_string());
        kv("xi_sweep", self.xi_sweep.render());
        kv("beta2_sweep", self.beta2_sweep_deg.render());
        kv("tau_sweep", self.tau_sweep_us.render());
        kv("kt_sweep", self.kt_sweep.render());
        kv("h_z_over_j", self.h_z_over_j.to_string());
        kv("bounds_yc", join(&self.bounds_yc));
        kv("bounds_restarts", self.bounds_restarts.to_string());
        kv("bounds_rank", self.bounds_rank.to_string());
        kv("bounds_tol_yc", self.bounds_tol_yc.to_string());
        kv("bounds_tol_agree", self.bounds_tol_agree.to_string());
        kv("swap_z", self.swap_z.to_string());
        kv("seed", self.seed.to_string());
        s
    }
}
