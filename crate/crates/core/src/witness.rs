//! Witness coordinates `{Delta, y_c}` of four-mode photonic states.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fockspace::{DensityOperator, LinearOpticsCircuit, ModeRegister};

/// On/off outcome probabilities. `q[b]` is indexed by the bit pattern
/// `b = i<<3 | j<<2 | k<<1 | l` (bit set = at least one photon).
#[derive(Clone, Debug, PartialEq)]
pub struct ClickStatistics {
    pub q: [f64; 16],
    pub p0: f64,
    pub p1: f64,
    pub p_ge2: f64,
}

impl ClickStatistics {
    pub fn from_q(q: [f64; 16]) -> Self {
        let p0 = q[0];
        let p1 = q[8] + q[4] + q[2] + q[1];
        let p_ge2 = q.iter().sum::<f64>() - p0 - p1;
        Self { q, p0, p1, p_ge2 }
    }

    /// `(q_1000, q_0100, q_0010, q_0001)`
    pub fn singles(&self) -> [f64; 4] {
        [self.q[8], self.q[4], self.q[2], self.q[1]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationOutcome {
    /// Projector expectations normalized over the single-excitation event.
    pub p_singles: [f64; 4],
    /// `(beta_1, beta_2, beta_3)` in radians.
    pub phases: [f64; 3],
    /// Sum of the unnormalized expectations: the single-excitation population.
    pub single_click_probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceSummary {
    pub d_bar: f64,
    pub v_eff: f64,
    /// `(3/4)(1 - 16 d_bar^2)`
    pub delta_bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WitnessPoint {
    pub delta: f64,
    pub yc: f64,
    pub delta_err: f64,
    pub yc_err: f64,
    pub d_bar: Option<f64>,
    pub v_eff: Option<f64>,
}

impl WitnessPoint {
    pub fn new(delta: f64, yc: f64) -> Self {
        Self {
            delta,
            yc,
            ..Default::default()
        }
    }

    pub fn with_errors(mut self, delta_err: f64, yc_err: f64) -> Self {
        self.delta_err = delta_err;
        self.yc_err = yc_err;
        self
    }
}

fn check_four(rho: &DensityOperator) -> Result<()> {
    if rho.register().num_modes() == 4 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "witness needs 4 modes, got {}",
            rho.register().num_modes()
        )))
    }
}

pub fn click_statistics(rho: &DensityOperator) -> Result<ClickStatistics> {
    check_four(rho)?;
    let reg = rho.register();
    let mut q = [0.0; 16];
    for i in 0..reg.dim() {
        let bits = reg
            .occupations(i)
            .iter()
            .fold(0usize, |acc, &n| (acc << 1) | usize::from(n > 0));
        q[bits] += rho.matrix()[(i, i)].re;
    }
    Ok(ClickStatistics::from_q(q))
}

/// `y_c = (8/3) p_{>=2} p_0 / p_1^2`
pub fn yc(stats: &ClickStatistics) -> Result<f64> {
    if stats.p1 <= 0.0 {
        return Err(Error::ZeroSingles("y_c"));
    }
    Ok(8.0 / 3.0 * stats.p_ge2 * stats.p0 / (stats.p1 * stats.p1))
}

fn port_labels(reg: &ModeRegister) -> [&str; 4] {
    let l = reg.labels();
    [&l[0], &l[1], &l[2], &l[3]]
}

/// Verification interferometer on the four modes of `reg`. Output port `i`
/// projects onto `|W_i> = (1/2) sum_j H_ij e^{i theta_j} |e_j>` with
/// `theta = (0, b1, b2, b2 + b3)` and `H` the 4x4 Sylvester-Hadamard matrix.
pub fn verification_circuit(reg: &ModeRegister, beta: [f64; 3]) -> Result<LinearOpticsCircuit> {
    if reg.num_modes() != 4 {
        return Err(Error::Dimension("verification needs 4 modes".into()));
    }
    let [a, b, c, d] = port_labels(reg);
    let pi = std::f64::consts::PI;
    Ok(LinearOpticsCircuit::new()
        .phase_shift(b, -beta[0])
        .phase_shift(c, -beta[1])
        .phase_shift(d, -beta[1] - beta[2])
        .balanced(a, b)
        .balanced(c, d)
        .balanced(a, c)
        .balanced(b, d)
        .phase_shift(b, pi)
        .phase_shift(c, pi))
}

/// Rows are the conjugated projector states: `U[(i, j)] = <W_i|e_j>`.
pub fn verification_unitary(reg: &ModeRegister, beta: [f64; 3]) -> Result<DMatrix<C64>> {
    verification_circuit(reg, beta)?.mode_unitary(reg)
}

/// The four projector states `|W_i>` as amplitude vectors over `e_j`.
pub fn verification_projectors(beta: [f64; 3]) -> [[C64; 4]; 4] {
    let reg = ModeRegister::new(["a", "b", "c", "d"], 1).expect("static register");
    let u = verification_unitary(&reg, beta).expect("static circuit");
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, z) in row.iter_mut().enumerate() {
            *z = u[(i, j)].conj();
        }
    }
    out
}

/// Expectations `<W_i| rho |W_i>` of the output-port projectors, where
/// `|W_i> = sum_j U_ij |e_j>` lives in the single-excitation sector.
///
/// Terms with two or more excitations never contribute, even when they
/// would bunch into one detector.
pub fn projector_expectations(rho: &DensityOperator, u: &DMatrix<C64>) -> Result<[f64; 4]> {
    check_four(rho)?;
    let idx: Vec<usize> = (0..4)
        .map(|j| rho.register().index_of(&unit(j)))
        .collect::<Result<_>>()?;
    let m = rho.matrix();
    let mut out = [0.0; 4];
    for (port, slot) in out.iter_mut().enumerate() {
        let mut s = C64::new(0.0, 0.0);
        for (j, &a) in idx.iter().enumerate() {
            for (k, &b) in idx.iter().enumerate() {
                s += u[(port, j)] * m[(a, b)] * u[(port, k)].conj();
            }
        }
        *slot = s.re;
    }
    Ok(out)
}

pub fn verification_measurement(rho: &DensityOperator, beta: [f64; 3]) -> Result<VerificationOutcome> {
    check_four(rho)?;
    let u = verification_unitary(rho.register(), beta)?;
    let p = projector_expectations(rho, &u)?;
    let s: f64 = p.iter().sum();
    if s < 1e-15 {
        return Err(Error::NullEvent(s));
    }
    Ok(VerificationOutcome {
        p_singles: p.map(|x| x / s),
        phases: beta,
        single_click_probability: s,
    })
}

/// `Delta = sum_i p_i (1 - p_i) = 1 - sum_i p_i^2`
pub fn delta(outcome: &VerificationOutcome) -> f64 {
    delta_from_probabilities(&outcome.p_singles)
}

pub fn delta_from_probabilities(p: &[f64; 4]) -> f64 {
    1.0 - p.iter().map(|x| x * x).sum::<f64>()
}

/// Verification phases matched to the state's single-excitation phases.
pub fn matched_phases(rho: &DensityOperator) -> Result<[f64; 3]> {
    let th = crate::interface::single_excitation_phases(rho)?;
    Ok([th[1], th[2], th[3] - th[2]])
}

fn unit(j: usize) -> [usize; 4] {
    let mut o = [0usize; 4];
    o[j] = 1;
    o
}

/// Mean single-excitation coherence `d_bar = avg |rho(e_a, e_b)| / p_1`.
pub fn coherence_summary(rho: &DensityOperator) -> Result<CoherenceSummary> {
    let stats = click_statistics(rho)?;
    if stats.p1 <= 0.0 {
        return Err(Error::ZeroSingles("d_bar"));
    }
    let mut sum = 0.0;
    for a in 0..4 {
        for b in a + 1..4 {
            sum += rho.element(&unit(a), &unit(b))?.norm();
        }
    }
    let d_bar = sum / 6.0 / stats.p1;
    Ok(CoherenceSummary {
        d_bar,
        v_eff: 4.0 * d_bar,
        delta_bound: 0.75 * (1.0 - 16.0 * d_bar * d_bar),
    })
}

/// `Delta` over a grid of `beta_2`, with `beta_1` and `beta_3` matched.
pub fn fringe_scan(rho: &DensityOperator, beta2_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if beta2_grid.is_empty() {
        return Err(Error::Dimension("empty beta_2 grid".into()));
    }
    let m = matched_phases(rho)?;
    beta2_grid
        .iter()
        .map(|&b2| Ok((b2, delta(&verification_measurement(rho, [m[0], b2, m[2]])?))))
        .collect()
}

/// `d_bar` inferred from the port-0 fringe over `beta_2`, as an experiment would.
///
/// With `beta_1`, `beta_3` matched, `p_0(beta_2)` is a constant plus one harmonic:
/// the constant carries the two in-pair coherences and the harmonic amplitude
/// the four cross-pair ones. The estimate equals [`coherence_summary`] when the
/// cross-pair phases are mutually consistent and lies below it otherwise.
pub fn coherence_from_fringe(rho: &DensityOperator, points: usize) -> Result<CoherenceSummary> {
    if points < 3 {
        return Err(Error::Dimension("fringe needs at least 3 points".into()));
    }
    let m = matched_phases(rho)?;
    let (mut mean, mut harm) = (0.0, C64::new(0.0, 0.0));
    for k in 0..points {
        let b2 = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
        let p0 = verification_measurement(rho, [m[0], b2, m[2]])?.p_singles[0];
        mean += p0;
        harm += C64::from_polar(p0, -b2);
    }
    mean /= points as f64;
    let amp = 2.0 * harm.norm() / points as f64;
    // p0 = (1 + 2(d_ab + d_cd) + 2 |sum_cross| cos(..)) / 4
    let in_pair = 2.0 * mean - 0.5;
    let cross = 2.0 * amp;
    let d_bar = ((in_pair + cross) / 6.0).max(0.0);
    Ok(CoherenceSummary {
        d_bar,
        v_eff: 4.0 * d_bar,
        delta_bound: 0.75 * (1.0 - 16.0 * d_bar * d_bar),
    })
}

/// Full measurement record of a photonic state at matched phases.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub stats: ClickStatistics,
    pub outcome: VerificationOutcome,
    pub coherence: CoherenceSummary,
    pub point: WitnessPoint,
}

pub fn measure(rho: &DensityOperator) -> Result<Measurement> {
    measure_with_phases(rho, matched_phases(rho)?)
}

pub fn measure_with_phases(rho: &DensityOperator, beta: [f64; 3]) -> Result<Measurement> {
    let stats = click_statistics(rho)?;
    let y = yc(&stats)?;
    let outcome = verification_measurement(rho, beta)?;
    let coherence = coherence_summary(rho)?;
    let point = WitnessPoint {
        delta: delta(&outcome),
        yc: y,
        d_bar: Some(coherence.d_bar),
        v_eff: Some(coherence.v_eff),
        ..Default::default()
    };
    Ok(Measurement {
        stats,
        outcome,
        coherence,
        point,
    })
}
