//! Non-unitary maps on density operators: loss, background, phase noise,
//! partial trace and on/off detection.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{DensityOperator, ModeRegister};
use crate::error::{check_unit, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClickOutcome {
    Click,
    NoClick,
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

/// `loss_coeffs[n][k] = sqrt(C(n,k) eta^(n-k) (1-eta)^k)`
fn loss_coeffs(cutoff: usize, eta: f64) -> Vec<Vec<f64>> {
    (0..=cutoff)
        .map(|n| {
            let b = binomial_row(n);
            (0..=n)
                .map(|k| (b[k] * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt())
                .collect()
        })
        .collect()
}

/// Pure loss: the mode meets a beamsplitter of transmissivity `eta` whose
/// other output is discarded.
pub fn apply_loss(rho: &DensityOperator, mode: &str, eta: f64) -> Result<DensityOperator> {
    check_unit("eta", eta)?;
    let reg = rho.register();
    let m = reg.mode(mode)?;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let s = reg.stride(m);
    let coeffs = loss_coeffs(reg.cutoff(), eta);
    let d = reg.dim();
    let src = rho.matrix();
    let occ: Vec<usize> = (0..d).map(|i| reg.occupation(i, m)).collect();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for j in 0..d {
        let nj = occ[j];
        for i in 0..d {
            let z = src[(i, j)];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let ni = occ[i];
            for k in 0..=ni.min(nj) {
                out[(i - k * s, j - k * s)] += z * (coeffs[ni][k] * coeffs[nj][k]);
            }
        }
    }
    DensityOperator::from_parts_unchecked(reg.clone(), out)
}

/// Weak incoherent background: with probability `nu` the mode gains one
/// photon (`|n> -> |n+1>`); a mode already at the cutoff is left alone so
/// the map stays trace preserving.
pub fn inject_background(rho: &DensityOperator, mode: &str, nu: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::OutOfRange {
            name: "nu",
            value: nu,
            allowed: "[0, 1]",
        });
    }
    let reg = rho.register();
    let m = reg.mode(mode)?;
    if nu == 0.0 {
        return Ok(rho.clone());
    }
    let c = reg.cutoff();
    let s = reg.stride(m);
    let d = reg.dim();
    let src = rho.matrix();
    let occ: Vec<usize> = (0..d).map(|i| reg.occupation(i, m)).collect();
    let k0 = |n: usize| if n < c { (1.0 - nu).sqrt() } else { 1.0 };
    let mut out = DMatrix::<C64>::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            let z = src[(i, j)];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            out[(i, j)] += z * (k0(occ[i]) * k0(occ[j]));
            if occ[i] < c && occ[j] < c {
                out[(i + s, j + s)] += z * nu;
            }
        }
    }
    DensityOperator::from_parts_unchecked(reg.clone(), out)
}

/// Independent Gaussian phase noise on each listed mode, scaled so that a
/// coherence between single excitations in two different modes is
/// multiplied by `v0`: `rho(n, m) *= v0^(sum_i (n_i - m_i)^2 / 2)`.
pub fn apply_visibility(rho: &DensityOperator, modes: &[&str], v0: f64) -> Result<DensityOperator> {
    check_unit("v0", v0)?;
    let reg = rho.register();
    let idx = modes.iter().map(|m| reg.mode(m)).collect::<Result<Vec<_>>>()?;
    if v0 == 1.0 {
        return Ok(rho.clone());
    }
    let d = reg.dim();
    let occ: Vec<Vec<usize>> = (0..d)
        .map(|i| idx.iter().map(|&m| reg.occupation(i, m)).collect())
        .collect();
    let mut out = rho.matrix().clone();
    for j in 0..d {
        for i in 0..d {
            let q: usize = occ[i]
                .iter()
                .zip(&occ[j])
                .map(|(&a, &b)| a.abs_diff(b).pow(2))
                .sum();
            if q > 0 {
                out[(i, j)] *= v0.powf(q as f64 / 2.0);
            }
        }
    }
    DensityOperator::from_parts_unchecked(reg.clone(), out)
}

/// Reduced state on `keep`, in the order given.
pub fn partial_trace(rho: &DensityOperator, keep: &[&str]) -> Result<DensityOperator> {
    let reg = rho.register();
    if keep.is_empty() {
        return Err(Error::InvalidRegister("nothing to keep".into()));
    }
    let kept = keep.iter().map(|m| reg.mode(m)).collect::<Result<Vec<_>>>()?;
    let traced: Vec<usize> = (0..reg.num_modes()).filter(|m| !kept.contains(m)).collect();
    let out_reg = reg.subset(&kept)?;
    let levels = reg.cutoff() + 1;
    let d = reg.dim();
    let index_over = |i: usize, modes: &[usize]| {
        modes
            .iter()
            .fold(0usize, |acc, &m| acc * levels + reg.occupation(i, m))
    };
    let n_env = levels.pow(traced.len() as u32);
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_env];
    for i in 0..d {
        groups[index_over(i, &traced)].push((i, index_over(i, &kept)));
    }
    let src = rho.matrix();
    let dk = out_reg.dim();
    let mut out = DMatrix::<C64>::zeros(dk, dk);
    for g in &groups {
        for &(i, ki) in g {
            for &(j, kj) in g {
                out[(ki, kj)] += src[(i, j)];
            }
        }
    }
    DensityOperator::from_parts_unchecked(out_reg, out)
}

/// Ideal on/off detection of `mode`; see [`condition_on_click_with_efficiency`].
pub fn condition_on_click(
    rho: &DensityOperator,
    mode: &str,
    outcome: ClickOutcome,
) -> Result<(DensityOperator, f64)> {
    condition_on_click_with_efficiency(rho, mode, outcome, 1.0)
}

/// On/off detection with efficiency `eta`: the no-click element is
/// `sum_n (1-eta)^n |n><n|`, the click element its complement. Returns the
/// normalized state of the remaining modes and the outcome probability.
pub fn condition_on_click_with_efficiency(
    rho: &DensityOperator,
    mode: &str,
    outcome: ClickOutcome,
    eta: f64,
) -> Result<(DensityOperator, f64)> {
    check_unit("detector efficiency", eta)?;
    let reg = rho.register();
    let m = reg.mode(mode)?;
    if reg.num_modes() == 1 {
        return Err(Error::InvalidRegister(
            "conditioning would leave no modes".into(),
        ));
    }
    let rest: Vec<usize> = (0..reg.num_modes()).filter(|&k| k != m).collect();
    let rest_reg: ModeRegister = reg.subset(&rest)?;
    let weights: Vec<f64> = (0..=reg.cutoff())
        .map(|n| {
            let miss = (1.0 - eta).powi(n as i32);
            match outcome {
                ClickOutcome::Click => 1.0 - miss,
                ClickOutcome::NoClick => miss,
            }
        })
        .collect();
    let s = reg.stride(m);
    let dr = rest_reg.dim();
    let src = rho.matrix();
    let full_index = |r: usize, n: usize| {
        // rest index -> full index with occupation n on mode m
        let occ = rest_reg.occupations(r);
        let mut idx = 0;
        let mut it = occ.into_iter();
        for k in 0..reg.num_modes() {
            let v = if k == m { n } else { it.next().unwrap_or(0) };
            idx = idx * (reg.cutoff() + 1) + v;
        }
        idx
    };
    let base: Vec<usize> = (0..dr).map(|r| full_index(r, 0)).collect();
    let mut out = DMatrix::<C64>::zeros(dr, dr);
    for (n, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for b in 0..dr {
            for a in 0..dr {
                out[(a, b)] += src[(base[a] + n * s, base[b] + n * s)] * w;
            }
        }
    }
    let cond = DensityOperator::from_parts_unchecked(rest_reg, out)?;
    cond.renormalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{vacuum, PureState};
    use approx::assert_relative_eq;

    fn one_mode(n: usize) -> DensityOperator {
        let reg = ModeRegister::new(["a"], 2).unwrap();
        PureState::fock(reg, &[n]).unwrap().to_density()
    }

    #[test]
    fn loss_of_single_photon() {
        let rho = apply_loss(&one_mode(1), "a", 0.38).unwrap();
        assert_relative_eq!(rho.matrix()[(0, 0)].re, 0.62, epsilon = 1e-14);
        assert_relative_eq!(rho.matrix()[(1, 1)].re, 0.38, epsilon = 1e-14);
        let dark = apply_loss(&one_mode(2), "a", 0.0).unwrap();
        assert_relative_eq!(dark.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert!(apply_loss(&one_mode(1), "a", 1.2).is_err());
    }

    #[test]
    fn background_on_vacuum() {
        let reg = ModeRegister::new(["a"], 2).unwrap();
        let rho = inject_background(&vacuum(&reg).to_density(), "a", 1e-3).unwrap();
        assert_relative_eq!(rho.matrix()[(1, 1)].re, 1e-3, epsilon = 1e-15);
        assert!(inject_background(&rho, "a", -1.0).is_err());
    }

    #[test]
    fn click_on_two_photons_is_certain() {
        let reg = ModeRegister::new(["a", "b"], 2).unwrap();
        let rho = PureState::fock(reg, &[0, 2]).unwrap().to_density();
        let (_, p) = condition_on_click(&rho, "b", ClickOutcome::Click).unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-15);
        let (_, p) = condition_on_click(&rho, "a", ClickOutcome::NoClick).unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-15);
        assert!(matches!(
            condition_on_click(&rho, "a", ClickOutcome::Click),
            Err(Error::NullEvent(_))
        ));
    }
}
