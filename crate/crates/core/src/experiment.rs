//! End-to-end pipeline: heralded preparation, storage, readout and the
//! witness measurement, plus calibration, scans and boundary crossings.

use rayon::prelude::*;

use crate::bounds::BoundCurve;
use crate::error::{check_unit, Error, Result};
use crate::fockspace::DensityOperator;
use crate::interface::{
    herald_crossed, herald_w, store_and_read, HeraldConfig, HeraldResult, StorageConfig,
    WriteConfig,
};
use crate::witness::{self, Measurement, WitnessPoint};

/// Physical parameters of one experimental configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineParams {
    pub xi: f64,
    /// Radians.
    pub write_phases: [f64; 4],
    pub herald_efficiency: f64,
    pub eta_read: f64,
    pub nu_read: f64,
    pub v0: f64,
    pub tau_m_us: f64,
    /// Storage time of the default measurement point.
    pub tau_us: f64,
    pub detector_eta: f64,
    pub cutoff: usize,
    /// Verification phases in radians; `None` matches them to the state.
    pub beta: Option<[f64; 3]>,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            xi: 5e-3,
            write_phases: [0.0; 4],
            herald_efficiency: 0.06,
            eta_read: 0.38,
            nu_read: 1.127e-3,
            v0: 0.95,
            tau_m_us: 17.0,
            tau_us: 0.2,
            detector_eta: 1.0,
            cutoff: 2,
            beta: None,
        }
    }
}

impl PipelineParams {
    /// Same setup without background or phase noise.
    pub fn noiseless(&self) -> Self {
        Self {
            nu_read: 0.0,
            v0: 1.0,
            ..self.clone()
        }
    }

    pub fn write_config(&self) -> WriteConfig {
        WriteConfig {
            xi: self.xi,
            write_phases: self.write_phases,
            cutoff: self.cutoff,
        }
    }

    pub fn herald_config(&self) -> HeraldConfig {
        HeraldConfig {
            efficiency: self.herald_efficiency,
            phases: [0.0; 4],
        }
    }

    pub fn storage(&self, tau_us: f64) -> StorageConfig {
        StorageConfig {
            tau_us,
            tau_m_us: self.tau_m_us,
            eta_read: self.eta_read,
            nu_read: self.nu_read,
            v0: self.v0,
            detector_eta: self.detector_eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.write_config().validate()?;
        check_unit("herald_efficiency", self.herald_efficiency)?;
        check_unit("eta_read", self.eta_read)?;
        check_unit("nu_read", self.nu_read)?;
        check_unit("v0", self.v0)?;
        check_unit("detector_eta", self.detector_eta)?;
        if !(self.tau_m_us > 0.0) {
            return Err(Error::OutOfRange {
                name: "tau_m_us",
                value: self.tau_m_us,
                allowed: "(0, inf)",
            });
        }
        if !(self.tau_us >= 0.0) {
            return Err(Error::OutOfRange {
                name: "tau_us",
                value: self.tau_us,
                allowed: "[0, inf)",
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preparation {
    W,
    /// Pairs `{a,b}` and `{c,d}` heralded separately.
    Crossed,
}

pub fn prepare(params: &PipelineParams, prep: Preparation) -> Result<HeraldResult> {
    params.validate()?;
    match prep {
        Preparation::W => herald_w(&params.write_config(), &params.herald_config()),
        Preparation::Crossed => herald_crossed(&params.write_config(), &params.herald_config()),
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub tau_us: f64,
    pub photonic: DensityOperator,
    pub measurement: Measurement,
}

/// Stores and reads out an already heralded atomic state, then measures it.
pub fn measure_after_storage(
    herald: &HeraldResult,
    params: &PipelineParams,
    tau_us: f64,
) -> Result<PipelineOutput> {
    let photonic = store_and_read(&herald.rho_atomic, &params.storage(tau_us))?;
    let measurement = match params.beta {
        Some(b) => witness::measure_with_phases(&photonic, b)?,
        None => witness::measure(&photonic)?,
    };
    Ok(PipelineOutput {
        tau_us,
        photonic,
        measurement,
    })
}

pub fn run_pipeline(params: &PipelineParams, prep: Preparation) -> Result<(HeraldResult, PipelineOutput)> {
    let h = prepare(params, prep)?;
    let out = measure_after_storage(&h, params, params.tau_us)?;
    Ok((h, out))
}

/// Background probability `nu_read` for which the W pipeline reaches
/// `target_yc`, by bisection. `y_c` grows monotonically with `nu_read`.
pub fn calibrate_nu(params: &PipelineParams, target_yc: f64) -> Result<f64> {
    let h = prepare(params, Preparation::W)?;
    let yc_at = |nu: f64| -> Result<f64> {
        let p = PipelineParams {
            nu_read: nu,
            ..params.clone()
        };
        Ok(measure_after_storage(&h, &p, p.tau_us)?.measurement.point.yc)
    };
    let (mut lo, mut hi) = (0.0, 0.05);
    let (y_lo, y_hi) = (yc_at(lo)?, yc_at(hi)?);
    if !(y_lo <= target_yc && target_yc <= y_hi) {
        return Err(Error::Infeasible(format!(
            "target y_c = {target_yc} outside [{y_lo:.4}, {y_hi:.4}] reachable with nu_read in [0, {hi}]"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if yc_at(mid)? < target_yc {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Excitation probability `xi` at which `prep` reaches `target_yc`, by
/// bisection on `log xi` over `[1e-5, 0.2]`.
pub fn calibrate_xi(params: &PipelineParams, prep: Preparation, target_yc: f64) -> Result<f64> {
    let yc_at = |xi: f64| -> Result<f64> {
        let p = PipelineParams {
            xi,
            ..params.clone()
        };
        Ok(run_pipeline(&p, prep)?.1.measurement.point.yc)
    };
    let (mut lo, mut hi) = (1e-5f64.ln(), 0.2f64.ln());
    let (y_lo, y_hi) = (yc_at(lo.exp())?, yc_at(hi.exp())?);
    if !(y_lo <= target_yc && target_yc <= y_hi) {
        return Err(Error::Infeasible(format!(
            "target y_c = {target_yc} outside [{y_lo:.4}, {y_hi:.4}] reachable with xi in [1e-5, 0.2]"
        )));
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if yc_at(mid.exp())? < target_yc {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Pipeline at each `xi`, keeping the other parameters fixed.
pub fn xi_sweep(params: &PipelineParams, xis: &[f64]) -> Result<Vec<PipelineOutput>> {
    xis.par_iter()
        .map(|&xi| {
            let p = PipelineParams {
                xi,
                ..params.clone()
            };
            Ok(run_pipeline(&p, Preparation::W)?.1)
        })
        .collect()
}

/// One herald, read out after each storage time.
pub fn decoherence_scan(params: &PipelineParams, taus_us: &[f64]) -> Result<Vec<PipelineOutput>> {
    let h = prepare(params, Preparation::W)?;
    taus_us
        .par_iter()
        .map(|&t| measure_after_storage(&h, params, t))
        .collect()
}

/// First time the trajectory leaves the region below `Delta_b^(k)`, for
/// each curve. Linear interpolation of the gap `Delta - Delta_b` between
/// samples; `None` if it never crosses or leaves the curve's range first.
pub fn crossing_times(trajectory: &[(f64, WitnessPoint)], curves: &[BoundCurve]) -> Vec<(usize, Option<f64>)> {
    curves
        .iter()
        .map(|c| {
            let mut prev: Option<(f64, f64)> = None;
            for (t, p) in trajectory {
                let Ok((db, _)) = c.interpolate(p.yc) else {
                    return (c.k, None);
                };
                let gap = p.delta - db;
                if let Some((t0, g0)) = prev {
                    if g0 < 0.0 && gap >= 0.0 {
                        return (c.k, Some(t0 + (t - t0) * g0 / (g0 - gap)));
                    }
                }
                prev = Some((*t, gap));
            }
            (c.k, None)
        })
        .collect()
}

/// `n` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| match i {
                0 => lo,
                i if i == n - 1 => hi,
                _ => lo * (hi / lo).powf(i as f64 / (n - 1) as f64),
            })
            .collect(),
    }
}
