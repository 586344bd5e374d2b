use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::ModeRegister;
use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    register: ModeRegister,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn from_amplitudes(register: ModeRegister, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != register.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a {}-dimensional register",
                amplitudes.len(),
                register.dim()
            )));
        }
        let s = Self {
            register,
            amplitudes: DVector::from_vec(amplitudes),
        };
        let n = s.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(s)
    }

    /// Normalizes `amplitudes` before wrapping them.
    pub fn normalized(register: ModeRegister, amplitudes: Vec<C64>) -> Result<Self> {
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        let s = 1.0 / n.sqrt();
        Self::from_amplitudes(register, amplitudes.into_iter().map(|a| a * s).collect())
    }

    pub(crate) fn from_parts_unchecked(register: ModeRegister, amplitudes: DVector<C64>) -> Self {
        Self {
            register,
            amplitudes,
        }
    }

    pub fn fock(register: ModeRegister, occupations: &[usize]) -> Result<Self> {
        let idx = register.index_of(occupations)?;
        let mut amps = DVector::zeros(register.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self {
            register,
            amplitudes: amps,
        })
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.register.index_of(occupations)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.register != other.register {
            return Err(Error::Dimension("inner product across registers".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Tensor product with the modes of `other` appended after ours.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let register = self.register.join(&other.register)?;
        let amps = self.amplitudes.kronecker(&other.amplitudes);
        Ok(Self {
            register,
            amplitudes: amps,
        })
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            register: self.register.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Probability of every total photon number `0..=M*cutoff`.
    pub fn photon_number_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.register.num_modes() * self.register.cutoff() + 1];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[self.register.total_photons(i)] += a.norm_sqr();
        }
        out
    }
}

/// The all-zero Fock state.
pub fn vacuum(register: &ModeRegister) -> PureState {
    let mut amps = DVector::zeros(register.dim());
    amps[0] = C64::new(1.0, 0.0);
    PureState {
        register: register.clone(),
        amplitudes: amps,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    register: ModeRegister,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates hermiticity, unit trace and positivity.
    pub fn from_matrix(register: ModeRegister, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_parts_unchecked(register, matrix)?;
        rho.check_physical()?;
        Ok(rho)
    }

    pub(crate) fn from_parts_unchecked(register: ModeRegister, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != register.dim() || matrix.ncols() != register.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for a {}-dimensional register",
                matrix.nrows(),
                matrix.ncols(),
                register.dim()
            )));
        }
        Ok(Self { register, matrix })
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn element(&self, row: &[usize], col: &[usize]) -> Result<C64> {
        Ok(self.matrix[(self.register.index_of(row)?, self.register.index_of(col)?)])
    }

    pub fn population(&self, occupations: &[usize]) -> Result<f64> {
        Ok(self.element(occupations, occupations)?.re)
    }

    /// `<psi|rho|psi>`
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        if psi.register() != &self.register {
            return Err(Error::Dimension("state and operator registers differ".into()));
        }
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)).re)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    pub fn check_physical(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::NotPhysical(format!("hermiticity error {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotPhysical(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::NotPhysical(format!("eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Rescales to unit trace, returning the previous trace.
    pub(crate) fn renormalized(mut self) -> Result<(Self, f64)> {
        let tr = self.trace();
        if tr < 1e-15 {
            return Err(Error::NullEvent(tr));
        }
        self.matrix /= C64::new(tr, 0.0);
        Ok((self, tr))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let register = self.register.join(&other.register)?;
        Ok(Self {
            register,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn relabel<I, S>(&self, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Ok(Self {
            register: self.register.relabel(labels)?,
            matrix: self.matrix.clone(),
        })
    }

    /// Total photon-number distribution from the diagonal.
    pub fn photon_number_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.register.num_modes() * self.register.cutoff() + 1];
        for i in 0..self.register.dim() {
            out[self.register.total_photons(i)] += self.matrix[(i, i)].re;
        }
        out
    }
}

impl From<&PureState> for DensityOperator {
    fn from(psi: &PureState) -> Self {
        psi.to_density()
    }
}
