//! Fidelity lower bounds, entanglement transfer and scaling estimates.

use crate::error::{Error, Result};
use crate::witness::{ClickStatistics, Measurement};

/// Largest `p1 / eta_read` accepted before the inversion is flagged.
pub const P1_EXCESS_TOL: f64 = 0.05;

/// Lower bound on the W-state fidelity of the single-excitation component,
/// `sqrt((1/2 - Delta) / 2) + 1/2`, valid for `Delta <= 1/2`.
pub fn conditional_fidelity_bound(delta: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::NotApplicable(format!(
            "fidelity bound needs 0 <= Delta <= 1/2, got {delta}"
        )));
    }
    Ok((0.5 * (0.5 - delta)).sqrt() + 0.5)
}

pub fn entanglement_fidelity(p1_tilde: f64, delta: f64) -> Result<f64> {
    crate::error::check_unit("p1_tilde", p1_tilde)?;
    Ok(p1_tilde * conditional_fidelity_bound(delta)?)
}

/// Atomic single-excitation probability from the photonic one by undoing
/// the retrieval loss to first order, `p1 / eta_read`, capped at 1.
pub fn infer_p1_atomic(stats: &ClickStatistics, eta_read: f64) -> Result<f64> {
    if !(eta_read > 0.0 && eta_read <= 1.0) {
        return Err(Error::OutOfRange {
            name: "eta_read",
            value: eta_read,
            allowed: "(0, 1]",
        });
    }
    let p = stats.p1 / eta_read;
    if p > 1.0 + P1_EXCESS_TOL {
        return Err(Error::NotPhysical(format!(
            "inferred p1 = {p:.4} exceeds 1; eta_read = {eta_read} is too small for p1 = {:.4}",
            stats.p1
        )));
    }
    Ok(p.min(1.0))
}

/// `lambda = F_gamma / F_A`. Close to `eta_read` when `xi << 1`.
pub fn transfer_ratio(f_tilde_gamma: f64, f_tilde_atomic: f64) -> Result<f64> {
    if !(f_tilde_atomic > 0.0) {
        return Err(Error::NotApplicable(format!(
            "transfer ratio needs a positive atomic fidelity, got {f_tilde_atomic}"
        )));
    }
    Ok(f_tilde_gamma / f_tilde_atomic)
}

/// Leading order in `xi` of `(y_c, Delta, F_A)` for the noiseless source.
pub fn asymptotics(xi: f64) -> (f64, f64, f64) {
    (8.0 * xi, 9.0 * xi, 1.0 - 3.0 * xi)
}

/// Rate of six-mode entanglement from swapping two heralded four-mode
/// states, with a multiplexing enhancement `z`.
pub fn swap_scaling(z: f64, eta_read: f64, p_h: f64) -> f64 {
    3.0 * z * eta_read * p_h * p_h / 8.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityReport {
    pub delta: f64,
    pub f1_lower: f64,
    pub p1_tilde: f64,
    /// Atomic entanglement fidelity bound `p1_tilde * f1_lower`.
    pub f_tilde: f64,
    /// Photonic bound `p1 * f1_lower`.
    pub f_tilde_gamma: f64,
    pub lambda: Option<f64>,
}

/// Both fidelity bounds from one photonic measurement.
pub fn fidelity_report(m: &Measurement, eta_read: f64) -> Result<FidelityReport> {
    let delta = m.point.delta;
    let f1 = conditional_fidelity_bound(delta)?;
    let p1_tilde = infer_p1_atomic(&m.stats, eta_read)?;
    let f_tilde = p1_tilde * f1;
    let f_tilde_gamma = m.stats.p1 * f1;
    Ok(FidelityReport {
        delta,
        f1_lower: f1,
        p1_tilde,
        f_tilde,
        f_tilde_gamma,
        lambda: transfer_ratio(f_tilde_gamma, f_tilde).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_edges() {
        assert!((conditional_fidelity_bound(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((conditional_fidelity_bound(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(conditional_fidelity_bound(0.51).is_err());
        assert!(transfer_ratio(0.3, 0.0).is_err());
    }
}
