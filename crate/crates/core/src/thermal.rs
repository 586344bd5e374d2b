//! Gibbs states of four-spin tetrahedral clusters mapped onto the
//! four-mode witness with `|down> -> |0>`, `|up> -> |1>`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::{DensityOperator, ModeRegister};
use crate::witness::{self, WitnessPoint};

pub const SITES: usize = 4;
const DIM: usize = 1 << SITES;
/// Relative gap below which eigenvalues count as one degenerate level.
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinModel {
    /// Isotropic Heisenberg coupling plus a projector penalty on all-down.
    HeisenbergPrime,
    /// Collective XY coupling in a transverse field.
    Lmg,
}

impl SpinModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::HeisenbergPrime => "heisenberg-prime",
            Self::Lmg => "lmg",
        }
    }

    /// Spin operator is `scale * sigma`. Chosen per model so that the
    /// ground state at `h_z = J/2` is the symmetric W state.
    pub fn spin_scale(&self) -> f64 {
        match self {
            Self::HeisenbergPrime => 0.5,
            Self::Lmg => 1.0,
        }
    }
}

impl std::str::FromStr for SpinModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg-prime" | "heisenberg" => Ok(Self::HeisenbergPrime),
            "lmg" => Ok(Self::Lmg),
            _ => Err(Error::Config(format!(
                "unknown spin model `{s}` (expected heisenberg-prime or lmg)"
            ))),
        }
    }
}

impl std::fmt::Display for SpinModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian {
    pub matrix: DMatrix<C64>,
    pub model: SpinModel,
    pub j: f64,
    pub h_z: f64,
}

#[derive(Clone, Debug)]
pub struct GibbsState {
    pub rho: DMatrix<C64>,
    /// `k_B T / J`; zero for the ground-space limit.
    pub temperature: f64,
    /// `ln Z`. `Z` itself overflows `f64` once `-E_0 / kT` exceeds ~709.
    pub log_partition: f64,
}

impl GibbsState {
    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }
}

fn pauli(axis: usize) -> [[C64; 2]; 2] {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match axis {
        0 => [[o, l], [l, o]],
        // basis order (down, up), so sigma_y carries the opposite sign
        1 => [[o, i], [-i, o]],
        _ => [[-l, o], [o, l]],
    }
}

/// `sigma_axis` acting on `site`; site 0 is the most significant bit.
fn site_operator(axis: usize, site: usize) -> DMatrix<C64> {
    let p = pauli(axis);
    let shift = SITES - 1 - site;
    DMatrix::from_fn(DIM, DIM, |r, c| {
        if (r ^ c) & !(1 << shift) != 0 {
            return C64::new(0.0, 0.0);
        }
        p[(r >> shift) & 1][(c >> shift) & 1]
    })
}

/// Hamiltonian in units of `J` on the complete graph of four sites.
pub fn build_hamiltonian(model: SpinModel, j: f64, h_z: f64) -> Result<SpinHamiltonian> {
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::OutOfRange {
            name: "J",
            value: j,
            allowed: "(0, inf)",
        });
    }
    if !h_z.is_finite() {
        return Err(Error::OutOfRange {
            name: "h_z",
            value: h_z,
            allowed: "finite",
        });
    }
    let s = model.spin_scale();
    let ops: Vec<Vec<DMatrix<C64>>> = (0..3)
        .map(|a| (0..SITES).map(|i| site_operator(a, i) * C64::from(s)).collect())
        .collect();
    let coupled_axes = match model {
        SpinModel::HeisenbergPrime => 3,
        SpinModel::Lmg => 2,
    };
    let mut h = DMatrix::<C64>::zeros(DIM, DIM);
    for i in 0..SITES {
        for k in i + 1..SITES {
            for axis in ops.iter().take(coupled_axes) {
                h -= &axis[i] * &axis[k] * C64::from(j / 4.0);
            }
        }
        h += &ops[2][i] * C64::from(h_z);
    }
    if model == SpinModel::HeisenbergPrime {
        h[(0, 0)] += C64::from(2.0 * h_z);
    }
    Ok(SpinHamiltonian {
        matrix: h,
        model,
        j,
        h_z,
    })
}

impl SpinHamiltonian {
    /// Ascending eigenvalues with matching eigenvector columns.
    pub fn spectrum(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..DIM).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(DIM, DIM, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn ground_degeneracy(&self) -> usize {
        let (e, _) = self.spectrum();
        let tol = DEGENERACY_TOL * e[0].abs().max(1.0);
        e.iter().take_while(|&&x| x - e[0] <= tol).count()
    }
}

fn mixture(vectors: &DMatrix<C64>, weights: &[f64]) -> DMatrix<C64> {
    let mut rho = DMatrix::<C64>::zeros(DIM, DIM);
    for (c, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(c);
        rho += (&v * v.adjoint()) * C64::from(w);
    }
    rho
}

/// `exp(-H / kT) / Z`. Accepts `kT = inf` (maximally mixed).
pub fn gibbs(h: &SpinHamiltonian, kt: f64) -> Result<GibbsState> {
    if !(kt > 0.0) {
        return Err(Error::OutOfRange {
            name: "kT",
            value: kt,
            allowed: "(0, inf]; use ground_state for T -> 0",
        });
    }
    let (e, v) = h.spectrum();
    let boltz: Vec<f64> = e.iter().map(|&x| (-(x - e[0]) / kt).exp()).collect();
    let sum: f64 = boltz.iter().sum();
    let weights: Vec<f64> = boltz.iter().map(|b| b / sum).collect();
    Ok(GibbsState {
        rho: mixture(&v, &weights),
        temperature: kt,
        log_partition: sum.ln() - e[0] / kt,
    })
}

/// `T -> 0` limit: equal mixture over the ground space.
pub fn ground_state(h: &SpinHamiltonian) -> GibbsState {
    let (_, v) = h.spectrum();
    let g = h.ground_degeneracy();
    let weights: Vec<f64> = (0..DIM).map(|i| if i < g { 1.0 / g as f64 } else { 0.0 }).collect();
    GibbsState {
        rho: mixture(&v, &weights),
        temperature: 0.0,
        log_partition: f64::INFINITY,
    }
}

pub fn energy(h: &SpinHamiltonian, g: &GibbsState) -> f64 {
    (&h.matrix * &g.rho).trace().re
}

/// Four-mode register at cutoff 1, whose basis order coincides with the spin basis.
pub fn spin_register() -> ModeRegister {
    ModeRegister::new(["s0", "s1", "s2", "s3"], 1).expect("valid labels")
}

/// Witness coordinates of a spin density matrix in the symmetric W basis.
pub fn spin_witness_point(rho: &DMatrix<C64>) -> Result<WitnessPoint> {
    if rho.shape() != (DIM, DIM) {
        return Err(Error::Dimension(format!(
            "spin state must be {DIM}x{DIM}, got {:?}",
            rho.shape()
        )));
    }
    let rho = DensityOperator::from_matrix(spin_register(), rho.clone())?;
    let stats = witness::click_statistics(&rho)?;
    if stats.p1 <= 0.0 {
        return Err(Error::ZeroSingles("spin state has no one-up weight"));
    }
    let yc = witness::yc(&stats)?;
    let outcome = witness::verification_measurement(&rho, [0.0; 3])?;
    Ok(WitnessPoint::new(witness::delta(&outcome), yc))
}

pub fn thermal_witness_point(g: &GibbsState) -> Result<WitnessPoint> {
    spin_witness_point(&g.rho)
}

#[derive(Clone, Debug)]
pub struct ThermalSample {
    pub kt: f64,
    pub point: WitnessPoint,
    pub p0: f64,
    pub p1: f64,
    pub p_ge2: f64,
    pub log_partition: f64,
}

/// One sample per temperature; `kT = 0` takes the ground-space limit.
pub fn thermal_curve(model: SpinModel, j: f64, h_z: f64, kt_grid: &[f64]) -> Result<Vec<ThermalSample>> {
    if kt_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("kT grid must be strictly increasing".into()));
    }
    if kt_grid.first().is_some_and(|&k| !(k >= 0.0)) {
        return Err(Error::OutOfRange {
            name: "kT",
            value: kt_grid[0],
            allowed: "[0, inf]",
        });
    }
    let h = build_hamiltonian(model, j, h_z)?;
    kt_grid
        .par_iter()
        .map(|&kt| {
            let g = if kt == 0.0 { ground_state(&h) } else { gibbs(&h, kt)? };
            let rho = DensityOperator::from_matrix(spin_register(), g.rho.clone())?;
            let stats = witness::click_statistics(&rho)?;
            Ok(ThermalSample {
                kt,
                point: thermal_witness_point(&g)?,
                p0: stats.p0,
                p1: stats.p1,
                p_ge2: stats.p_ge2,
                log_partition: g.log_partition,
            })
        })
        .collect()
}
