//! Passive linear optics on truncated Fock registers.
//!
//! Convention: a beamsplitter on modes `(1, 2)` with transmissivity `t` and
//! phase `theta` has the single-photon matrix
//!
//! ```text
//! U = [[ sqrt(t),                     i sqrt(1-t) e^{+i theta} ],
//!      [ i sqrt(1-t) e^{-i theta},    sqrt(t)                  ]]
//! ```
//!
//! and creation operators transform as `a_j^† -> sum_i U_ij a_i^†`.
//! A phase shift multiplies `|n>` by `e^{i n phi}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{DensityOperator, ModeRegister, PureState};
use crate::error::{check_unit, Error, Result};

/// Amplitudes below this magnitude are allowed to fall off the cutoff.
const OVERFLOW_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum OpticalElement {
    Beamsplitter {
        modes: (String, String),
        transmissivity: f64,
        phase: f64,
    },
    PhaseShift {
        mode: String,
        phase: f64,
    },
}

impl OpticalElement {
    pub fn inverse(&self) -> Self {
        match self {
            Self::Beamsplitter {
                modes,
                transmissivity,
                phase,
            } => Self::Beamsplitter {
                modes: modes.clone(),
                transmissivity: *transmissivity,
                phase: phase + std::f64::consts::PI,
            },
            Self::PhaseShift { mode, phase } => Self::PhaseShift {
                mode: mode.clone(),
                phase: -phase,
            },
        }
    }
}

/// What to do with amplitude pushed above the cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Overflow {
    Error,
    Clip,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearOpticsCircuit {
    elements: Vec<OpticalElement>,
}

impl LinearOpticsCircuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn beamsplitter(mut self, m1: &str, m2: &str, transmissivity: f64, phase: f64) -> Self {
        self.elements.push(OpticalElement::Beamsplitter {
            modes: (m1.to_string(), m2.to_string()),
            transmissivity,
            phase,
        });
        self
    }

    /// 50/50 beamsplitter whose first output is `(a_1 + a_2)/sqrt(2)`.
    pub fn balanced(self, m1: &str, m2: &str) -> Self {
        self.beamsplitter(m1, m2, 0.5, -std::f64::consts::FRAC_PI_2)
    }

    pub fn phase_shift(mut self, mode: &str, phase: f64) -> Self {
        self.elements.push(OpticalElement::PhaseShift {
            mode: mode.to_string(),
            phase,
        });
        self
    }

    pub fn then(mut self, other: &Self) -> Self {
        self.elements.extend(other.elements.iter().cloned());
        self
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn inverse(&self) -> Self {
        Self {
            elements: self.elements.iter().rev().map(OpticalElement::inverse).collect(),
        }
    }

    pub fn validate(&self, register: &ModeRegister) -> Result<()> {
        for e in &self.elements {
            match e {
                OpticalElement::Beamsplitter {
                    modes,
                    transmissivity,
                    phase,
                } => {
                    let (i, j) = (register.mode(&modes.0)?, register.mode(&modes.1)?);
                    if i == j {
                        return Err(Error::InvalidRegister(format!(
                            "beamsplitter acts twice on `{}`",
                            modes.0
                        )));
                    }
                    check_unit("transmissivity", *transmissivity)?;
                    check_finite("beamsplitter phase", *phase)?;
                }
                OpticalElement::PhaseShift { mode, phase } => {
                    register.mode(mode)?;
                    check_finite("phase shift", *phase)?;
                }
            }
        }
        Ok(())
    }

    /// Single-photon (mode) matrix: column `j` is the image of `a_j^†`.
    pub fn mode_unitary(&self, register: &ModeRegister) -> Result<DMatrix<C64>> {
        self.validate(register)?;
        let m = register.num_modes();
        let mut u = DMatrix::<C64>::identity(m, m);
        for e in &self.elements {
            let mut step = DMatrix::<C64>::identity(m, m);
            match e {
                OpticalElement::Beamsplitter {
                    modes,
                    transmissivity,
                    phase,
                } => {
                    let (i, j) = (register.mode(&modes.0)?, register.mode(&modes.1)?);
                    let b = bs_matrix(*transmissivity, *phase);
                    step[(i, i)] = b[0][0];
                    step[(i, j)] = b[0][1];
                    step[(j, i)] = b[1][0];
                    step[(j, j)] = b[1][1];
                }
                OpticalElement::PhaseShift { mode, phase } => {
                    let i = register.mode(mode)?;
                    step[(i, i)] = C64::from_polar(1.0, *phase);
                }
            }
            u = step * u;
        }
        Ok(u)
    }
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value: v,
            allowed: "finite values",
        })
    }
}

fn bs_matrix(t: f64, theta: f64) -> [[C64; 2]; 2] {
    let tt = C64::new(t.sqrt(), 0.0);
    let r = (1.0 - t).max(0.0).sqrt();
    let i = C64::i();
    [
        [tt, i * r * C64::from_polar(1.0, theta)],
        [i * r * C64::from_polar(1.0, -theta), tt],
    ]
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

fn binom(f: &[f64], n: usize, k: usize) -> f64 {
    f[n] / (f[k] * f[n - k])
}

/// `blocks[N][k][n1]`: amplitude of output `|k, N-k>` from input `|n1, N-n1>`.
fn two_mode_blocks(u: [[C64; 2]; 2], cutoff: usize) -> Vec<Vec<Vec<C64>>> {
    let nmax = 2 * cutoff;
    let f = factorials(nmax);
    let pow = |z: C64, e: usize| z.powu(e as u32);
    (0..=nmax)
        .map(|n| {
            (0..=n)
                .map(|k| {
                    (0..=n)
                        .map(|n1| {
                            let n2 = n - n1;
                            let mut s = C64::new(0.0, 0.0);
                            // j photons of a1 and k-j photons of a2 leave through port 1
                            for j in k.saturating_sub(n2)..=n1.min(k) {
                                s += pow(u[0][0], j)
                                    * pow(u[1][0], n1 - j)
                                    * pow(u[0][1], k - j)
                                    * pow(u[1][1], n2 + j - k)
                                    * (binom(&f, n1, j) * binom(&f, n2, k - j));
                            }
                            s * (f[k] * f[n - k] / (f[n1] * f[n2])).sqrt()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

enum Step {
    Two {
        i: usize,
        j: usize,
        blocks: Vec<Vec<Vec<C64>>>,
        bases: Vec<usize>,
    },
    Phase {
        i: usize,
        factors: Vec<C64>,
    },
}

fn compile(circuit: &LinearOpticsCircuit, register: &ModeRegister) -> Result<Vec<Step>> {
    circuit.validate(register)?;
    let c = register.cutoff();
    circuit
        .elements
        .iter()
        .map(|e| {
            Ok(match e {
                OpticalElement::Beamsplitter {
                    modes,
                    transmissivity,
                    phase,
                } => {
                    let (i, j) = (register.mode(&modes.0)?, register.mode(&modes.1)?);
                    Step::Two {
                        i,
                        j,
                        blocks: two_mode_blocks(bs_matrix(*transmissivity, *phase), c),
                        bases: register.base_indices(&[i, j]),
                    }
                }
                OpticalElement::PhaseShift { mode, phase } => Step::Phase {
                    i: register.mode(mode)?,
                    factors: (0..=c).map(|n| C64::from_polar(1.0, n as f64 * phase)).collect(),
                },
            })
        })
        .collect()
}

fn apply_steps(
    steps: &[Step],
    register: &ModeRegister,
    v: &mut [C64],
    overflow: Overflow,
) -> Result<()> {
    let c = register.cutoff();
    let mut local_in = vec![C64::new(0.0, 0.0); c + 1];
    for step in steps {
        match step {
            Step::Phase { i, factors } => {
                for (idx, a) in v.iter_mut().enumerate() {
                    *a *= factors[register.occupation(idx, *i)];
                }
            }
            Step::Two {
                i,
                j,
                blocks,
                bases,
            } => {
                let (si, sj) = (register.stride(*i), register.stride(*j));
                for &base in bases {
                    for n in 0..=2 * c {
                        let lo = n.saturating_sub(c);
                        let hi = n.min(c);
                        let mut any = false;
                        for n1 in lo..=hi {
                            let a = v[base + n1 * si + (n - n1) * sj];
                            local_in[n1] = a;
                            any |= a != C64::new(0.0, 0.0);
                        }
                        if !any {
                            continue;
                        }
                        let block = &blocks[n];
                        for k in 0..=n {
                            let mut s = C64::new(0.0, 0.0);
                            for n1 in lo..=hi {
                                s += block[k][n1] * local_in[n1];
                            }
                            if k > c || n - k > c {
                                if overflow == Overflow::Error && s.norm() > OVERFLOW_TOL {
                                    let m = if k > c { *i } else { *j };
                                    return Err(Error::CutoffOverflow {
                                        mode: register.labels()[m].clone(),
                                        cutoff: c,
                                    });
                                }
                            } else {
                                v[base + k * si + (n - k) * sj] = s;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

impl PureState {
    /// Unitary evolution; errors if amplitude would leave the truncated space.
    pub fn apply_circuit(&self, circuit: &LinearOpticsCircuit) -> Result<Self> {
        self.apply_circuit_with(circuit, Overflow::Error)
    }

    /// Like [`PureState::apply_circuit`] but silently drops overflowing
    /// amplitude; the result may be subnormalized.
    pub fn apply_circuit_clipped(&self, circuit: &LinearOpticsCircuit) -> Result<Self> {
        self.apply_circuit_with(circuit, Overflow::Clip)
    }

    fn apply_circuit_with(&self, circuit: &LinearOpticsCircuit, overflow: Overflow) -> Result<Self> {
        let reg = self.register();
        let steps = compile(circuit, reg)?;
        let mut v: Vec<C64> = self.amplitudes().iter().copied().collect();
        apply_steps(&steps, reg, &mut v, overflow)?;
        Ok(Self::from_parts_unchecked(reg.clone(), DVector::from_vec(v)))
    }
}

impl DensityOperator {
    /// `U rho U^†`
    pub fn apply_circuit(&self, circuit: &LinearOpticsCircuit) -> Result<Self> {
        self.apply_circuit_with(circuit, Overflow::Error)
    }

    pub fn apply_circuit_clipped(&self, circuit: &LinearOpticsCircuit) -> Result<Self> {
        self.apply_circuit_with(circuit, Overflow::Clip)
    }

    fn apply_circuit_with(&self, circuit: &LinearOpticsCircuit, overflow: Overflow) -> Result<Self> {
        let reg = self.register();
        let steps = compile(circuit, reg)?;
        let d = reg.dim();
        // columns first (U rho), then rows of the conjugate (U rho U^†)
        let mut m = self.matrix().clone();
        for col in 0..d {
            let mut v: Vec<C64> = m.column(col).iter().copied().collect();
            apply_steps(&steps, reg, &mut v, overflow)?;
            m.set_column(col, &DVector::from_vec(v));
        }
        let mut m = m.adjoint();
        for col in 0..d {
            let mut v: Vec<C64> = m.column(col).iter().copied().collect();
            apply_steps(&steps, reg, &mut v, overflow)?;
            m.set_column(col, &DVector::from_vec(v));
        }
        Self::from_parts_unchecked(reg.clone(), m.adjoint())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn balanced_splitter_first_output_is_symmetric_sum() {
        let reg = ModeRegister::new(["a", "b"], 1).unwrap();
        let u = LinearOpticsCircuit::new().balanced("a", "b").mode_unitary(&reg).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(u[(0, 0)].re, h, epsilon = 1e-15);
        assert_relative_eq!(u[(0, 1)].re, h, epsilon = 1e-15);
        assert_relative_eq!(u[(1, 0)].re, -h, epsilon = 1e-15);
        assert_relative_eq!(u[(1, 1)].re, h, epsilon = 1e-15);
    }

    #[test]
    fn overflow_is_reported() {
        let reg = ModeRegister::new(["a", "b"], 1).unwrap();
        let psi = PureState::fock(reg, &[1, 1]).unwrap();
        let c = LinearOpticsCircuit::new().balanced("a", "b");
        assert!(matches!(
            psi.apply_circuit(&c),
            Err(Error::CutoffOverflow { .. })
        ));
        let clipped = psi.apply_circuit_clipped(&c).unwrap();
        assert!(clipped.norm_sqr() < 1e-20);
    }
}
