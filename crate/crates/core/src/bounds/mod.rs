//! Minimal-uncertainty bounds `Delta_b^(k)(y_c)` for states with at most
//! `k`-mode entanglement, and certification of measured points.

pub mod cache;
mod model;
mod optimize;
mod partition;

pub use model::{hadamard, yc_prefactor, Evaluation, MixtureModel};
pub use optimize::{min_delta_at_yc, BoundOptions, MinimumResult, StateDescription};
pub use partition::{enumerate_partitions, maximal_partitions, Partition};

use crate::error::{Error, Result};
use crate::witness::WitnessPoint;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundSample {
    pub yc: f64,
    pub delta_b: f64,
    /// Value found by the order-`k` search alone, before nesting.
    pub delta_raw: f64,
    pub feasible: usize,
    pub agreeing: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCurve {
    pub k: usize,
    pub samples: Vec<BoundSample>,
    pub options: BoundOptions,
}

impl BoundCurve {
    pub fn yc_range(&self) -> (f64, f64) {
        let first = self.samples.first().map_or(f64::NAN, |s| s.yc);
        let last = self.samples.last().map_or(f64::NAN, |s| s.yc);
        (first, last)
    }

    /// Linear interpolation of `Delta_b` and its local slope at `yc`.
    pub fn interpolate(&self, yc: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.yc_range();
        if !(yc >= lo && yc <= hi) {
            return Err(Error::OutOfRange {
                name: "y_c",
                value: yc,
                allowed: "the sampled range of the bound curve",
            });
        }
        if self.samples.len() == 1 {
            return Ok((self.samples[0].delta_b, 0.0));
        }
        let i = self
            .samples
            .windows(2)
            .position(|w| yc <= w[1].yc)
            .unwrap_or(self.samples.len() - 2);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let slope = (b.delta_b - a.delta_b) / (b.yc - a.yc);
        Ok((a.delta_b + slope * (yc - a.yc), slope))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("empty y_c grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("y_c grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `Delta_b^(k)` on every grid point (no nesting with other orders).
pub fn bound_curve(k: usize, yc_grid: &[f64], opts: &BoundOptions) -> Result<BoundCurve> {
    check_grid(yc_grid)?;
    let samples = yc_grid
        .iter()
        .enumerate()
        .map(|(gi, &y)| {
            let r = optimize::min_delta_at_index(k, y, gi, opts)?;
            Ok(BoundSample {
                yc: y,
                delta_b: r.delta_b,
                delta_raw: r.delta_b,
                feasible: r.feasible,
                agreeing: r.agreeing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve {
        k,
        samples,
        options: opts.clone(),
    })
}

/// Curves for `k = 1..modes-1`. Since every `(k-1)`-producible state is
/// also `k`-producible, each sample is tightened to the minimum over the
/// lower orders, which makes the curves nested by construction.
pub fn bound_curves(yc_grid: &[f64], opts: &BoundOptions) -> Result<Vec<BoundCurve>> {
    let mut curves: Vec<BoundCurve> = Vec::new();
    for k in 1..opts.modes {
        let mut c = bound_curve(k, yc_grid, opts)?;
        if let Some(prev) = curves.last() {
            for (s, p) in c.samples.iter_mut().zip(&prev.samples) {
                s.delta_b = s.delta_b.min(p.delta_b);
            }
        }
        curves.push(c);
    }
    Ok(curves)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntanglementOrder {
    FourPartite,
    ThreePartite,
    TwoPartite,
    SeparableConsistent,
}

impl EntanglementOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FourPartite => "4-partite",
            Self::ThreePartite => "3-partite",
            Self::TwoPartite => "2-partite",
            Self::SeparableConsistent => "separable-consistent",
        }
    }
}

impl std::fmt::Display for EntanglementOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certification {
    pub point: WitnessPoint,
    pub order: EntanglementOrder,
    /// `(k, Delta_b^(k)(y_c), (Delta_b - Delta) / sigma)` for each curve.
    pub margins: Vec<(usize, f64, f64)>,
}

/// Entanglement order of a measured point: it is at least `(k+1)`-partite
/// entangled for the largest `k` whose bound it violates.
pub fn certify(point: &WitnessPoint, curves: &[BoundCurve]) -> Result<Certification> {
    if curves.is_empty() {
        return Err(Error::Config("no bound curves".into()));
    }
    let mut margins = Vec::with_capacity(curves.len());
    let mut violated = 0;
    for c in curves {
        let (db, slope) = c.interpolate(point.yc)?;
        let sigma = (point.delta_err.powi(2) + (slope * point.yc_err).powi(2)).sqrt();
        let gap = db - point.delta;
        let margin = if sigma > 0.0 {
            gap / sigma
        } else if gap > 0.0 {
            f64::INFINITY
        } else if gap < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        if point.delta < db {
            violated = violated.max(c.k);
        }
        margins.push((c.k, db, margin));
    }
    let order = match violated {
        0 => EntanglementOrder::SeparableConsistent,
        1 => EntanglementOrder::TwoPartite,
        2 => EntanglementOrder::ThreePartite,
        _ => EntanglementOrder::FourPartite,
    };
    Ok(Certification {
        point: point.clone(),
        order,
        margins,
    })
}
