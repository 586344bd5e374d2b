use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::model::{Evaluation, MixtureModel};
use super::{maximal_partitions, Partition};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BoundOptions {
    /// Number of modes (2 or 4).
    pub modes: usize,
    /// Mixture components per candidate state.
    pub mixture_rank: usize,
    pub restarts: usize,
    pub seed: u64,
    pub tol_yc: f64,
    pub tol_agree: f64,
    /// Penalty weights on `(y_c - target)^2`, applied in order.
    pub penalties: Vec<f64>,
    /// L-BFGS iterations per penalty stage.
    pub max_iters: u64,
    pub lbfgs_memory: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            modes: 4,
            mixture_rank: 8,
            restarts: 64,
            seed: 2015,
            tol_yc: 2e-3,
            tol_agree: 1e-3,
            penalties: vec![1e1, 1e3, 1e5, 1e7],
            max_iters: 400,
            lbfgs_memory: 10,
        }
    }
}

/// Mixture that attains a bound sample.
#[derive(Clone, Debug, PartialEq)]
pub struct StateDescription {
    pub weights: Vec<f64>,
    pub partitions: Vec<Partition>,
    /// Per component: vacuum amplitude then single-excitation amplitudes.
    pub amplitudes: Vec<Vec<C64>>,
    pub evaluation: Evaluation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimumResult {
    pub delta_b: f64,
    pub yc: f64,
    /// Restarts ending within `tol_yc` of the target.
    pub feasible: usize,
    /// Feasible restarts within `tol_agree` of the best value.
    pub agreeing: usize,
    pub best_restart: usize,
    pub witness: StateDescription,
}

struct Problem<'a> {
    model: &'a MixtureModel,
    target: f64,
    mu: f64,
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let mut g = vec![0.0; x.len()];
        Ok(self.model.objective(x, self.target, self.mu, &mut g))
    }
}

impl Gradient for Problem<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let mut g = vec![0.0; x.len()];
        self.model.objective(x, self.target, self.mu, &mut g);
        Ok(g)
    }
}

/// Stream of independent seeds, one per `(seed, k, grid point, restart)`.
pub(crate) fn restart_seed(seed: u64, k: usize, grid_index: usize, restart: usize) -> u64 {
    let mut z = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [k as u64, grid_index as u64, restart as u64] {
        z = z.wrapping_add(v.wrapping_mul(0xBF58_476D_1CE4_E5B9));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn local_descent(model: &MixtureModel, mut x: Vec<f64>, target: f64, opts: &BoundOptions) -> Vec<f64> {
    for &mu in &opts.penalties {
        let problem = Problem { model, target, mu };
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), opts.lbfgs_memory)
            .with_tolerance_grad(1e-10)
            .and_then(|s| s.with_tolerance_cost(1e-14));
        let Ok(solver) = solver else { return x };
        let run = Executor::new(problem, solver)
            .configure(|s| s.param(x.clone()).max_iters(opts.max_iters))
            .timer(false)
            .run();
        // a failed line search keeps the last good point of the previous stage
        if let Ok(res) = run {
            if let Some(best) = res.state().get_best_param() {
                if best.iter().all(|v| v.is_finite()) {
                    x = best.clone();
                }
            }
        }
    }
    x
}

fn describe(model: &MixtureModel, x: &[f64]) -> StateDescription {
    let states = model.block_states(x);
    let n = model.num_modes();
    let amplitudes = model
        .partitions()
        .iter()
        .zip(&states)
        .map(|(p, v)| {
            let owner = p.block_of();
            let vac: C64 = v.iter().map(|b| b[0]).product();
            let mut out = vec![vac];
            for m in 0..n {
                let bi = owner[m];
                let pos = p.blocks()[bi].iter().position(|&q| q == m).unwrap_or(0);
                let rest: C64 = v
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != bi)
                    .map(|(_, b)| b[0])
                    .product();
                out.push(v[bi][1 + pos] * rest);
            }
            out
        })
        .collect();
    StateDescription {
        weights: model.weights(x),
        partitions: model.partitions().to_vec(),
        amplitudes,
        evaluation: model.evaluate(x),
    }
}

/// One restart: random partition per component, random start, penalty stages.
fn single_restart(
    k: usize,
    target: f64,
    opts: &BoundOptions,
    grid_index: usize,
    restart: usize,
    candidates: &[Partition],
) -> (MixtureModel, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts.seed, k, grid_index, restart));
    let parts: Vec<Partition> = (0..opts.mixture_rank)
        .map(|_| candidates[rng.random_range(0..candidates.len())].clone())
        .collect();
    let model = MixtureModel::new(parts);
    let x0: Vec<f64> = (0..model.num_params())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let x = local_descent(&model, x0, target, opts);
    (model, x)
}

/// Smallest `Delta` over mixtures of states with at most `k`-mode
/// entanglement whose `y_c` is within `tol_yc` of `yc_target`.
pub fn min_delta_at_yc(k: usize, yc_target: f64, opts: &BoundOptions) -> Result<MinimumResult> {
    min_delta_at_index(k, yc_target, 0, opts)
}

pub(crate) fn min_delta_at_index(
    k: usize,
    yc_target: f64,
    grid_index: usize,
    opts: &BoundOptions,
) -> Result<MinimumResult> {
    if !(1..opts.modes).contains(&k) {
        return Err(Error::OutOfRange {
            name: "k",
            value: k as f64,
            allowed: "1..modes-1",
        });
    }
    if !(yc_target >= 0.0) || !yc_target.is_finite() {
        return Err(Error::OutOfRange {
            name: "yc_target",
            value: yc_target,
            allowed: "[0, inf)",
        });
    }
    if opts.restarts == 0 || opts.mixture_rank == 0 || opts.penalties.is_empty() {
        return Err(Error::Config("bound optimizer needs restarts, rank and penalties".into()));
    }
    let candidates = maximal_partitions(opts.modes, k);
    let runs: Vec<(usize, MixtureModel, Vec<f64>, Evaluation)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let (model, x) = single_restart(k, yc_target, opts, grid_index, r, &candidates);
            let e = model.evaluate(&x);
            (r, model, x, e)
        })
        .collect();
    let feasible: Vec<&(usize, MixtureModel, Vec<f64>, Evaluation)> = runs
        .iter()
        .filter(|(_, _, _, e)| (e.yc - yc_target).abs() <= opts.tol_yc && e.delta.is_finite())
        .collect();
    let best = feasible
        .iter()
        .min_by(|a, b| a.3.delta.total_cmp(&b.3.delta).then(a.0.cmp(&b.0)))
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no {k}-producible candidate reached y_c = {yc_target} within {}",
                opts.tol_yc
            ))
        })?;
    let agreeing = feasible
        .iter()
        .filter(|r| r.3.delta <= best.3.delta + opts.tol_agree)
        .count();
    Ok(MinimumResult {
        delta_b: best.3.delta,
        yc: best.3.yc,
        feasible: feasible.len(),
        agreeing,
        best_restart: best.0,
        witness: describe(&best.1, &best.2),
    })
}
