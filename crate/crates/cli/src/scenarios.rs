use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use spinwave_core::analysis::{asymptotics, fidelity_report, swap_scaling};
use spinwave_core::bounds::{self, cache, certify, BoundCurve};
use spinwave_core::experiment::{
    calibrate_nu, calibrate_xi, crossing_times, decoherence_scan, measure_after_storage, prepare,
    run_pipeline, xi_sweep, PipelineOutput, PipelineParams, Preparation,
};
use spinwave_core::thermal::{thermal_curve, SpinModel};
use spinwave_core::witness::{self, WitnessPoint};

use crate::config::{ExperimentConfig, NuRead};

pub const SCENARIOS: &[&str] = &[
    "xi-sweep", "fringe", "decohere", "crossed", "bounds", "thermal", "certify", "report",
];

const SWEEP_HEADER: [&str; 12] = [
    "sweep_var", "yc", "delta", "p0", "p1", "p_ge2", "p1000", "p0100", "p0010", "p0001", "d_bar",
    "v_eff",
];
const THERMAL_HEADER: [&str; 9] = [
    "model", "kT_over_J", "h_z_over_J", "yc", "delta", "p0", "p1", "p_ge2", "Z",
];

pub struct Run<'a> {
    pub config: &'a ExperimentConfig,
    pub out: &'a Path,
    pub bounds_cache: Option<&'a Path>,
    /// Extra `key = value` lines for the manifest.
    resolved: Vec<(String, String)>,
    files: Vec<String>,
    pub log: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn new(config: &'a ExperimentConfig, out: &'a Path, bounds_cache: Option<&'a Path>) -> Self {
        Self {
            config,
            out,
            bounds_cache,
            resolved: Vec::new(),
            files: Vec::new(),
            log: Vec::new(),
        }
    }

    fn resolve(&mut self, key: &str, value: impl ToString) {
        self.resolved.push((key.to_string(), value.to_string()));
    }

    fn say(&mut self, line: String) {
        self.log.push(line);
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.out.join(name)
    }

    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    fn nu_read(&mut self) -> Result<f64> {
        let nu = match self.config.nu_read {
            NuRead::Fixed(v) => v,
            NuRead::Auto => {
                let v = calibrate_nu(&self.config.pipeline(0.0), self.config.target_yc)?;
                self.say(format!("calibrated nu_read = {v:e} for y_c = {}", self.config.target_yc));
                v
            }
        };
        self.resolve("nu_read_resolved", nu);
        Ok(nu)
    }

    fn params(&mut self) -> Result<PipelineParams> {
        let nu = self.nu_read()?;
        Ok(self.config.pipeline(nu))
    }

    fn crossed_params(&mut self, base: &PipelineParams) -> Result<PipelineParams> {
        let xi = calibrate_xi(base, Preparation::Crossed, self.config.crossed_yc)?;
        self.resolve("crossed_xi_resolved", xi);
        self.say(format!("crossed state: xi = {xi:e} for y_c = {}", self.config.crossed_yc));
        Ok(PipelineParams { xi, ..base.clone() })
    }

    fn load_bounds(&mut self) -> Result<Vec<BoundCurve>> {
        let Some(path) = self.bounds_cache else {
            bail!("no bound cache given: run `spinwave run bounds --config <path> --out <dir> --bounds-cache <file>` first, then pass --bounds-cache <file>");
        };
        if !path.exists() {
            bail!(
                "bound cache {} does not exist: run `spinwave run bounds --bounds-cache {}` first",
                path.display(),
                path.display()
            );
        }
        let curves = cache::load(path)?;
        self.resolve("bounds_cache", path.display());
        Ok(curves)
    }

    /// Cached curves if a cache is given, otherwise freshly computed ones.
    fn bounds_or_compute(&mut self) -> Result<Vec<BoundCurve>> {
        if self.bounds_cache.is_some() {
            return self.load_bounds();
        }
        self.say("no --bounds-cache given; computing bound curves".into());
        let curves = bounds::bound_curves(&self.config.bounds_yc, &self.config.bound_options())?;
        let path = self.path("bounds.csv");
        cache::save(&path, &curves)?;
        Ok(curves)
    }

    fn manifest(&mut self, scenario: &str) -> Result<()> {
        let mut s = String::from("# spinwave run manifest\n");
        let _ = writeln!(s, "scenario = {scenario}");
        let _ = writeln!(s, "spinwave_cli = {}", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.resolved {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "files = {}", self.files.join(", "));
        s.push_str("\n[config]\n");
        s.push_str(&self.config.echo());
        let path = self.out.join("manifest.txt");
        std::fs::write(&path, s).with_context(|| format!("cannot write {}", path.display()))
    }
}

fn sweep_row(x: f64, o: &PipelineOutput) -> Vec<String> {
    let m = &o.measurement;
    let p = m.outcome.p_singles;
    [
        x,
        m.point.yc,
        m.point.delta,
        m.stats.p0,
        m.stats.p1,
        m.stats.p_ge2,
        p[0],
        p[1],
        p[2],
        p[3],
        m.coherence.d_bar,
        m.coherence.v_eff,
    ]
    .iter()
    .map(|v| fmt_num(*v))
    .collect()
}

/// Shortest round-trip form, switching to exponent notation for very
/// small or large magnitudes.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt_num)
}

/// `Z` from `ln Z` without overflowing, as `m.mmmmmmmmmmmmmmme±x`.
fn format_log_value(log_z: f64) -> String {
    if !log_z.is_finite() {
        return "inf".into();
    }
    if log_z < 700.0 {
        return fmt_num(log_z.exp());
    }
    let l10 = log_z / std::f64::consts::LN_10;
    let e = l10.floor();
    format!("{:.15}e{}", 10f64.powf(l10 - e), e as i64)
}

pub fn run(name: &str, r: &mut Run) -> Result<()> {
    std::fs::create_dir_all(r.out)
        .with_context(|| format!("cannot create output directory {}", r.out.display()))?;
    match name {
        "xi-sweep" => xi_sweep_scenario(r)?,
        "fringe" => fringe(r)?,
        "decohere" => decohere(r)?,
        "crossed" => crossed(r)?,
        "bounds" => bounds_scenario(r)?,
        "thermal" => thermal(r)?,
        "certify" => certify_scenario(r)?,
        "report" => report(r)?,
        _ => bail!("unknown scenario `{name}` (expected one of {})", SCENARIOS.join(", ")),
    }
    r.manifest(name)
}

fn xi_sweep_scenario(r: &mut Run) -> Result<()> {
    let p = r.params()?;
    let xs = r.config.xi_sweep.points();
    let outs = xi_sweep(&p, &xs)?;
    let rows: Vec<_> = xs.iter().zip(&outs).map(|(x, o)| sweep_row(*x, o)).collect();
    r.write_csv("xi_sweep.csv", &SWEEP_HEADER, &rows)?;
    r.write_text("plot_xi_sweep.py", &plot_witness_plane("xi_sweep.csv", "xi"))
}

fn fringe_rows(p: &PipelineParams, prep: Preparation, grid_deg: &[f64]) -> Result<Vec<Vec<String>>> {
    let h = prepare(p, prep)?;
    let base = measure_after_storage(&h, p, p.tau_us)?;
    let m = witness::matched_phases(&base.photonic)?;
    grid_deg
        .iter()
        .map(|&b| {
            let q = PipelineParams {
                beta: Some([m[0], b.to_radians(), m[2]]),
                ..p.clone()
            };
            Ok(sweep_row(b, &measure_after_storage(&h, &q, p.tau_us)?))
        })
        .collect()
}

fn fringe(r: &mut Run) -> Result<()> {
    let p = r.params()?;
    let grid = r.config.beta2_sweep_deg.points();
    let w = fringe_rows(&p, Preparation::W, &grid)?;
    r.write_csv("fringe_w.csv", &SWEEP_HEADER, &w)?;
    let pc = r.crossed_params(&p)?;
    let x = fringe_rows(&pc, Preparation::Crossed, &grid)?;
    r.write_csv("fringe_crossed.csv", &SWEEP_HEADER, &x)?;
    r.write_text("plot_fringe.py", PLOT_FRINGE)
}

fn decohere(r: &mut Run) -> Result<()> {
    let p = r.params()?;
    let taus = r.config.tau_sweep_us.points();
    let outs = decoherence_scan(&p, &taus)?;
    let rows: Vec<_> = outs.iter().map(|o| sweep_row(o.tau_us, o)).collect();
    r.write_csv("decohere.csv", &SWEEP_HEADER, &rows)?;
    let curves = r.bounds_or_compute()?;
    let traj: Vec<(f64, WitnessPoint)> = outs.iter().map(|o| (o.tau_us, o.measurement.point.clone())).collect();
    let cross = crossing_times(&traj, &curves);
    let rows: Vec<Vec<String>> = cross
        .iter()
        .map(|(k, t)| vec![k.to_string(), fmt_opt(*t)])
        .collect();
    for (k, t) in &cross {
        let msg = match t {
            Some(t) => format!("crossing of Delta_b^({k}) at tau = {t:.2} us"),
            None => format!("no crossing of Delta_b^({k}) within the scan"),
        };
        r.say(msg);
    }
    r.write_csv("crossings.csv", &["k", "tau_us"], &rows)?;
    r.write_text("plot_decohere.py", PLOT_DECOHERE)
}

fn crossed(r: &mut Run) -> Result<()> {
    let p = r.params()?;
    let pc = r.crossed_params(&p)?;
    let (_, o) = run_pipeline(&pc, Preparation::Crossed)?;
    r.say(format!(
        "crossed state: Delta = {:.4}, y_c = {:.4}",
        o.measurement.point.delta, o.measurement.point.yc
    ));
    r.write_csv("crossed.csv", &SWEEP_HEADER, &[sweep_row(pc.xi, &o)])?;
    r.write_text("plot_crossed.py", &plot_witness_plane("crossed.csv", "xi"))
}

fn bounds_scenario(r: &mut Run) -> Result<()> {
    let opts = r.config.bound_options();
    let curves = bounds::bound_curves(&r.config.bounds_yc, &opts)?;
    let path = r.path("bounds.csv");
    cache::save(&path, &curves)?;
    if let Some(c) = r.bounds_cache {
        cache::save(c, &curves)?;
        r.resolve("bounds_cache", c.display());
        r.say(format!("bound cache written to {}", c.display()));
    }
    for c in &curves {
        let weak = c.samples.iter().filter(|s| s.agreeing < 2).count();
        if weak > 0 {
            r.say(format!(
                "k={}: {weak} sample(s) supported by a single restart; consider more restarts",
                c.k
            ));
        }
    }
    r.write_text("plot_bounds.py", PLOT_BOUNDS)
}

fn thermal(r: &mut Run) -> Result<()> {
    let mut grid = vec![0.0];
    grid.extend(r.config.kt_sweep.points());
    let hz = r.config.h_z_over_j;
    let mut rows = Vec::new();
    for model in [SpinModel::HeisenbergPrime, SpinModel::Lmg] {
        for s in thermal_curve(model, 1.0, hz, &grid)? {
            rows.push(vec![
                model.to_string(),
                fmt_num(s.kt),
                fmt_num(hz),
                fmt_num(s.point.yc),
                fmt_num(s.point.delta),
                fmt_num(s.p0),
                fmt_num(s.p1),
                fmt_num(s.p_ge2),
                format_log_value(s.log_partition),
            ]);
        }
        r.resolve(&format!("spin_scale_{model}"), model.spin_scale());
    }
    r.write_csv("thermal.csv", &THERMAL_HEADER, &rows)?;
    r.write_text("plot_thermal.py", PLOT_THERMAL)
}

fn certify_scenario(r: &mut Run) -> Result<()> {
    let curves = r.load_bounds()?;
    let p = r.params()?;
    let (_, w) = run_pipeline(&p, Preparation::W)?;
    let pc = r.crossed_params(&p)?;
    let (_, x) = run_pipeline(&pc, Preparation::Crossed)?;
    let mut header = vec!["label".to_string(), "yc".into(), "delta".into(), "order".into()];
    for c in &curves {
        header.push(format!("delta_b_k{}", c.k));
        header.push(format!("margin_k{}", c.k));
    }
    let mut rows = Vec::new();
    for (label, o) in [("w", &w), ("crossed", &x)] {
        let cert = certify(&o.measurement.point, &curves)?;
        r.say(format!(
            "{label}: (Delta, y_c) = ({:.4}, {:.4}) -> {}",
            cert.point.delta, cert.point.yc, cert.order
        ));
        let mut row = vec![
            label.to_string(),
            fmt_num(cert.point.yc),
            fmt_num(cert.point.delta),
            cert.order.to_string(),
        ];
        for (_, db, margin) in &cert.margins {
            row.push(fmt_num(*db));
            row.push(fmt_num(*margin));
        }
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    r.write_csv("certify.csv", &header, &rows)
}

fn report(r: &mut Run) -> Result<()> {
    let p = r.params()?;
    let (h, o) = run_pipeline(&p, Preparation::W)?;
    let m = &o.measurement;
    let f = fidelity_report(m, p.eta_read)?;
    let fringe = witness::coherence_from_fringe(&o.photonic, 36)?;
    let (yth, dth, fth) = asymptotics(p.xi);
    let mut s = String::new();
    let mut kv = |k: &str, v: f64| {
        let _ = writeln!(s, "{k} = {}", fmt_num(v));
    };
    kv("p_h", h.p_h);
    kv("yc", m.point.yc);
    kv("delta", m.point.delta);
    kv("p1_photonic", m.stats.p1);
    kv("v_eff", m.coherence.v_eff);
    kv("v_eff_fringe", fringe.v_eff);
    kv("f1_lower", f.f1_lower);
    kv("p1_tilde", f.p1_tilde);
    kv("f_tilde_atomic", f.f_tilde);
    kv("f_tilde_photonic", f.f_tilde_gamma);
    kv("lambda", f.lambda.unwrap_or(f64::NAN));
    kv("yc_asymptotic", yth);
    kv("delta_asymptotic", dth);
    kv("fidelity_asymptotic", fth);
    kv("hexapartite_probability", swap_scaling(r.config.swap_z, p.eta_read, h.p_h));
    r.say(format!(
        "F_A >= {:.3}, F_gamma >= {:.3}, lambda = {:.3}",
        f.f_tilde,
        f.f_tilde_gamma,
        f.lambda.unwrap_or(f64::NAN)
    ));
    r.write_text("report.txt", &s)
}

fn plot_witness_plane(csv: &str, label: &str) -> String {
    format!(
        r##"import os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
d = pd.read_csv(os.path.join(here, "{csv}"))
fig, ax = plt.subplots(figsize=(5, 4))
sc = ax.scatter(d["yc"], d["delta"], c=d["sweep_var"], cmap="viridis")
fig.colorbar(sc, label="{label}")
b = os.path.join(here, "bounds.csv")
if os.path.exists(b):
    bc = pd.read_csv(b, comment="#")
    for k, g in bc.groupby("k"):
        ax.plot(g["yc"], g["delta_b"], label=f"k={{k}}")
    ax.legend()
ax.set_xlabel("y_c")
ax.set_ylabel("Delta")
fig.tight_layout()
fig.savefig(os.path.join(here, "{stem}.png"), dpi=150)
"##,
        stem = csv.trim_end_matches(".csv")
    )
}

const PLOT_FRINGE: &str = r##"import os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
fig, ax = plt.subplots(figsize=(5, 4))
for name, style in [("fringe_w.csv", "k-o"), ("fringe_crossed.csv", "C1-s")]:
    d = pd.read_csv(os.path.join(here, name))
    ax.plot(d["sweep_var"], d["delta"], style, label=name[7:-4])
ax.set_xlabel("beta_2 (deg)")
ax.set_ylabel("Delta")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "fringe.png"), dpi=150)
"##;

const PLOT_DECOHERE: &str = r##"import os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
d = pd.read_csv(os.path.join(here, "decohere.csv"))
fig, axs = plt.subplots(1, 3, figsize=(12, 4))
for col in ["p1000", "p0100", "p0010", "p0001"]:
    axs[0].plot(d["sweep_var"], d[col], label=col)
axs[0].set_xlabel("tau (us)")
axs[0].legend()
axs[1].plot(d["sweep_var"], d["delta"], label="Delta")
axs[1].plot(d["sweep_var"], d["yc"], label="y_c")
axs[1].plot(d["sweep_var"], d["v_eff"], label="V_eff")
axs[1].set_xlabel("tau (us)")
axs[1].legend()
axs[2].plot(d["yc"], d["delta"], "k.-")
b = os.path.join(here, "bounds.csv")
if os.path.exists(b):
    bc = pd.read_csv(b, comment="#")
    for k, g in bc.groupby("k"):
        axs[2].plot(g["yc"], g["delta_b"], label=f"k={k}")
    axs[2].legend()
axs[2].set_xlabel("y_c")
axs[2].set_ylabel("Delta")
fig.tight_layout()
fig.savefig(os.path.join(here, "decohere.png"), dpi=150)
"##;

const PLOT_BOUNDS: &str = r##"import os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
bc = pd.read_csv(os.path.join(here, "bounds.csv"), comment="#")
fig, ax = plt.subplots(figsize=(5, 4))
for k, g in bc.groupby("k"):
    ax.plot(g["yc"], g["delta_b"], "o-", label=f"k={k}")
ax.set_xlabel("y_c")
ax.set_ylabel("Delta_b")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "bounds.png"), dpi=150)
"##;

const PLOT_THERMAL: &str = r##"import os
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
d = pd.read_csv(os.path.join(here, "thermal.csv"))
fig, ax = plt.subplots(figsize=(5, 4))
for model, g in d.groupby("model"):
    ax.plot(g["yc"], g["delta"], "--", label=model)
ax.set_xlabel("y_c")
ax.set_ylabel("Delta")
ax.set_xlim(0, 1)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "thermal.png"), dpi=150)
"##;
