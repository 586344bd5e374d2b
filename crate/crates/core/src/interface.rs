//! Write, herald, storage and readout of the four-ensemble interface.
//!
//! Each ensemble `e` is one bosonic spin-wave mode paired with its write
//! field `e1`; readout maps the spin-wave onto the field `e2`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{check_unit, Error, Result};
use crate::fockspace::{
    apply_loss, apply_visibility, inject_background, DensityOperator, LinearOpticsCircuit,
    ModeRegister, PureState,
};

pub const ATOMIC_MODES: [&str; 4] = ["a_A", "b_A", "c_A", "d_A"];
pub const WRITE_MODES: [&str; 4] = ["a1", "b1", "c1", "d1"];
pub const READ_MODES: [&str; 4] = ["a2", "b2", "c2", "d2"];

#[derive(Clone, Debug, PartialEq)]
pub struct WriteConfig {
    /// Excitation probability per ensemble and write pulse.
    pub xi: f64,
    /// Phase of the write process in each ensemble (radians).
    pub write_phases: [f64; 4],
    pub cutoff: usize,
}

impl WriteConfig {
    pub fn new(xi: f64, cutoff: usize) -> Self {
        Self {
            xi,
            write_phases: [0.0; 4],
            cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.xi) {
            return Err(Error::OutOfRange {
                name: "xi",
                value: self.xi,
                allowed: "[0, 0.5)",
            });
        }
        if self.cutoff == 0 {
            return Err(Error::InvalidRegister("cutoff must be at least 1".into()));
        }
        if let Some(p) = self.write_phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::OutOfRange {
                name: "write phase",
                value: *p,
                allowed: "finite values",
            });
        }
        Ok(())
    }

    /// Truncated, renormalized amplitudes `~ xi^(n/2) e^{i n phi}` of ensemble `e`.
    fn pair_amplitudes(&self, e: usize) -> Vec<C64> {
        let raw: Vec<C64> = (0..=self.cutoff)
            .map(|n| C64::from_polar(self.xi.powf(n as f64 / 2.0), n as f64 * self.write_phases[e]))
            .collect();
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        raw.into_iter().map(|z| z / norm).collect()
    }
}

/// Heralding detector settings.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldConfig {
    /// Overall efficiency of the herald path including the detector.
    pub efficiency: f64,
    /// Phase shifts applied to the write fields before they are combined.
    pub phases: [f64; 4],
}

impl Default for HeraldConfig {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            phases: [0.0; 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeraldResult {
    pub rho_atomic: DensityOperator,
    /// Probability of a herald click per trial.
    pub p_h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageConfig {
    pub tau_us: f64,
    pub tau_m_us: f64,
    pub eta_read: f64,
    pub nu_read: f64,
    pub v0: f64,
    /// Readout detector efficiency, applied after the noise.
    pub detector_eta: f64,
}

impl StorageConfig {
    pub fn lossless() -> Self {
        Self {
            tau_us: 0.0,
            tau_m_us: 17.0,
            eta_read: 1.0,
            nu_read: 0.0,
            v0: 1.0,
            detector_eta: 1.0,
        }
    }
}

/// Two-mode state of ensemble `ensemble` and its write field:
/// `sum_n sqrt(xi^n) e^{i n phi} |n>_e |n>_{e1}`, truncated and renormalized.
pub fn write_state(cfg: &WriteConfig, ensemble: usize) -> Result<PureState> {
    cfg.validate()?;
    if ensemble >= 4 {
        return Err(Error::UnknownMode(format!("ensemble {ensemble}")));
    }
    let reg = ModeRegister::new([ATOMIC_MODES[ensemble], WRITE_MODES[ensemble]], cfg.cutoff)?;
    let amps = cfg.pair_amplitudes(ensemble);
    let mut v = vec![C64::new(0.0, 0.0); reg.dim()];
    for (n, a) in amps.into_iter().enumerate() {
        v[reg.index_of(&[n, n])?] = a;
    }
    PureState::from_amplitudes(reg, v)
}

/// Herald mode of the balanced tree `(a1 b1)(c1 d1)` is `a1`.
pub fn herald_circuit(phases: &[f64; 4]) -> LinearOpticsCircuit {
    let mut c = LinearOpticsCircuit::new();
    for (m, p) in WRITE_MODES.iter().zip(phases) {
        if *p != 0.0 {
            c = c.phase_shift(m, *p);
        }
    }
    c.balanced("a1", "b1").balanced("c1", "d1").balanced("a1", "c1")
}

/// Exact click-conditioned atomic state for a subset of ensembles.
///
/// The joint write state is `sum_n c_n |n>_A |n>_F`, so after the herald
/// optics and tracing the fields
/// `rho_A(n, m) = c_n c_m^* <psi_m| Pi_click |psi_n>` with `psi_n = U|n>_F`.
/// The field register is sized so the optics never truncate.
fn herald_subset(
    cfg: &WriteConfig,
    ensembles: &[usize],
    circuit: &LinearOpticsCircuit,
    herald_mode: &str,
    efficiency: f64,
) -> Result<(DensityOperator, f64)> {
    let k = ensembles.len();
    let atom_reg = ModeRegister::new(ensembles.iter().map(|&e| ATOMIC_MODES[e]), cfg.cutoff)?;
    let field_reg = ModeRegister::new(ensembles.iter().map(|&e| WRITE_MODES[e]), k * cfg.cutoff)?;
    let h = field_reg.mode(herald_mode)?;
    circuit.validate(&field_reg)?;
    let amps: Vec<Vec<C64>> = ensembles.iter().map(|&e| cfg.pair_amplitudes(e)).collect();
    let no_click: Vec<f64> = (0..=k * cfg.cutoff)
        .map(|n| (1.0 - efficiency).powi(n as i32))
        .collect();

    let dim = atom_reg.dim();
    let coeff: Vec<C64> = (0..dim)
        .map(|i| {
            atom_reg
                .occupations(i)
                .iter()
                .enumerate()
                .map(|(m, &n)| amps[m][n])
                .product()
        })
        .collect();
    // sparse images psi_n, tagged with their herald-mode occupation
    let images: Vec<Vec<(usize, C64)>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let occ = atom_reg.occupations(i);
            let psi = PureState::fock(field_reg.clone(), &occ)?.apply_circuit(circuit)?;
            Ok(psi
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm() > 0.0)
                .map(|(f, a)| (f, *a))
                .collect())
        })
        .collect::<Result<_>>()?;
    let totals: Vec<usize> = (0..dim).map(|i| atom_reg.total_photons(i)).collect();

    let rows: Vec<Vec<C64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![C64::new(0.0, 0.0); dim];
            if coeff[i].norm() == 0.0 {
                return row;
            }
            // sorted by index, so a merge gives the overlap
            let psi_i = &images[i];
            for j in 0..dim {
                if totals[j] != totals[i] || coeff[j].norm() == 0.0 {
                    continue;
                }
                let psi_j = &images[j];
                let (mut p, mut q) = (0, 0);
                let mut miss = C64::new(0.0, 0.0);
                while p < psi_i.len() && q < psi_j.len() {
                    match psi_i[p].0.cmp(&psi_j[q].0) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            let f = psi_i[p].0;
                            miss += psi_j[q].1.conj()
                                * psi_i[p].1
                                * no_click[field_reg.occupation(f, h)];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                let delta = if i == j { 1.0 } else { 0.0 };
                row[j] = coeff[i] * coeff[j].conj() * (C64::new(delta, 0.0) - miss);
            }
            row
        })
        .collect();
    let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    let rho = DensityOperator::from_parts_unchecked(atom_reg, m)?;
    rho.renormalized()
}

/// Heralded W state: the four write fields are combined on a balanced
/// beamsplitter tree and a click is registered on its symmetric output.
pub fn herald_w(cfg: &WriteConfig, herald: &HeraldConfig) -> Result<HeraldResult> {
    cfg.validate()?;
    check_unit("herald efficiency", herald.efficiency)?;
    if herald.efficiency == 0.0 {
        return Err(Error::NullEvent(0.0));
    }
    let circuit = herald_circuit(&herald.phases);
    let (rho_atomic, p_h) = herald_subset(cfg, &[0, 1, 2, 3], &circuit, "a1", herald.efficiency)?;
    Ok(HeraldResult { rho_atomic, p_h })
}

/// Unconditioned (thermal, truncated) state of ensemble `e`.
fn unheralded(cfg: &WriteConfig, e: usize) -> Result<DensityOperator> {
    let reg = ModeRegister::new([ATOMIC_MODES[e]], cfg.cutoff)?;
    let amps = cfg.pair_amplitudes(e);
    let d = DMatrix::from_fn(reg.dim(), reg.dim(), |i, j| {
        if i == j {
            C64::new(amps[i].norm_sqr(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    DensityOperator::from_parts_unchecked(reg, d)
}

/// Control state with which-pair information: a click heralds either the
/// `{a, b}` pair or the `{c, d}` pair, never a superposition of both.
pub fn herald_crossed(cfg: &WriteConfig, herald: &HeraldConfig) -> Result<HeraldResult> {
    cfg.validate()?;
    check_unit("herald efficiency", herald.efficiency)?;
    if herald.efficiency == 0.0 {
        return Err(Error::NullEvent(0.0));
    }
    let pair = |x: usize, y: usize| {
        let (mx, my) = (WRITE_MODES[x], WRITE_MODES[y]);
        let circuit = LinearOpticsCircuit::new()
            .phase_shift(mx, herald.phases[x])
            .phase_shift(my, herald.phases[y])
            .balanced(mx, my);
        herald_subset(cfg, &[x, y], &circuit, mx, herald.efficiency)
    };
    let (ab, p_ab) = pair(0, 1)?;
    let (cd, p_cd) = pair(2, 3)?;
    let branch1 = ab.tensor(&unheralded(cfg, 2)?)?.tensor(&unheralded(cfg, 3)?)?;
    let branch2 = unheralded(cfg, 0)?.tensor(&unheralded(cfg, 1)?)?.tensor(&cd)?;
    let total = p_ab + p_cd;
    let m = branch1.matrix() * C64::new(p_ab / total, 0.0)
        + branch2.matrix() * C64::new(p_cd / total, 0.0);
    let rho_atomic = DensityOperator::from_parts_unchecked(branch1.register().clone(), m)?;
    Ok(HeraldResult {
        rho_atomic,
        p_h: total,
    })
}

/// Retrievable fraction `exp(-tau^2 / tau_m^2)` after motional dephasing.
pub fn dephasing_efficiency(tau_us: f64, tau_m_us: f64) -> Result<f64> {
    if !(tau_m_us > 0.0) {
        return Err(Error::OutOfRange {
            name: "tau_m",
            value: tau_m_us,
            allowed: "(0, inf)",
        });
    }
    if !(tau_us >= 0.0) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau_us,
            allowed: "[0, inf)",
        });
    }
    Ok((-(tau_us / tau_m_us).powi(2)).exp())
}

/// Motional dephasing: each spin-wave leaks into an unreadable subradiant
/// mode, modeled as loss with retention `exp(-tau^2 / tau_m^2)`.
pub fn dephase(rho: &DensityOperator, tau_us: f64, tau_m_us: f64) -> Result<DensityOperator> {
    let eta = dephasing_efficiency(tau_us, tau_m_us)?;
    let mut out = rho.clone();
    for m in rho.register().labels().to_vec() {
        out = apply_loss(&out, &m, eta)?;
    }
    Ok(out)
}

/// Maps the four spin-waves onto the read fields `a2..d2`: retrieval loss,
/// background, static phase noise, then detector loss.
pub fn readout(rho_atomic: &DensityOperator, cfg: &StorageConfig) -> Result<DensityOperator> {
    check_unit("eta_read", cfg.eta_read)?;
    check_unit("v0", cfg.v0)?;
    check_unit("detector_eta", cfg.detector_eta)?;
    if rho_atomic.register().num_modes() != 4 {
        return Err(Error::Dimension("readout expects four atomic modes".into()));
    }
    let mut rho = rho_atomic.relabel(READ_MODES)?;
    for m in READ_MODES {
        rho = apply_loss(&rho, m, cfg.eta_read)?;
        rho = inject_background(&rho, m, cfg.nu_read)?;
    }
    rho = apply_visibility(&rho, &READ_MODES, cfg.v0)?;
    for m in READ_MODES {
        rho = apply_loss(&rho, m, cfg.detector_eta)?;
    }
    Ok(rho)
}

/// Dephasing for `cfg.tau_us` followed by [`readout`].
pub fn store_and_read(rho_atomic: &DensityOperator, cfg: &StorageConfig) -> Result<DensityOperator> {
    readout(&dephase(rho_atomic, cfg.tau_us, cfg.tau_m_us)?, cfg)
}

/// `lambda / (4 pi sin(theta/2) v_d)` in microseconds, for `lambda` in
/// micrometres, `theta` in degrees and `v_d` in m/s.
pub fn motional_tau(theta_deg: f64, v_d: f64, lambda_um: f64) -> Result<f64> {
    for (name, v) in [("theta", theta_deg), ("v_d", v_d), ("lambda", lambda_um)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::OutOfRange {
                name,
                value: v,
                allowed: "(0, inf)",
            });
        }
    }
    Ok(lambda_um / (4.0 * std::f64::consts::PI * (theta_deg.to_radians() / 2.0).sin() * v_d))
}

/// `|W> = (1/2) sum_j e^{i phi_j} |e_j>` on the given register.
pub fn w_state(register: &ModeRegister, phases: &[f64; 4]) -> Result<PureState> {
    if register.num_modes() != 4 {
        return Err(Error::Dimension("W state needs four modes".into()));
    }
    let mut v = vec![C64::new(0.0, 0.0); register.dim()];
    for (j, p) in phases.iter().enumerate() {
        let mut occ = [0usize; 4];
        occ[j] = 1;
        v[register.index_of(&occ)?] = C64::from_polar(0.5, *p);
    }
    PureState::from_amplitudes(register.clone(), v)
}

/// Relative phases `arg rho(e_j, e_0)` of the single-excitation block.
pub fn single_excitation_phases(rho: &DensityOperator) -> Result<[f64; 4]> {
    if rho.register().num_modes() != 4 {
        return Err(Error::Dimension("expected four modes".into()));
    }
    let e = |j: usize| {
        let mut o = [0usize; 4];
        o[j] = 1;
        o
    };
    let mut out = [0.0; 4];
    for (j, o) in out.iter_mut().enumerate().skip(1) {
        *o = rho.element(&e(j), &e(0))?.arg();
    }
    Ok(out)
}
