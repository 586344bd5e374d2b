use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use spinwave_core::fockspace::{DensityOperator, ModeRegister, PureState};
use spinwave_core::interface::{w_state, READ_MODES};
use spinwave_core::witness::*;

fn reg(cutoff: usize) -> ModeRegister {
    ModeRegister::new(READ_MODES, cutoff).unwrap()
}

fn unit(j: usize) -> [usize; 4] {
    let mut o = [0usize; 4];
    o[j] = 1;
    o
}

fn coherent(alpha: [C64; 4], cutoff: usize) -> DensityOperator {
    let r = reg(cutoff);
    let amp = |a: C64, n: usize| -> C64 {
        let f: f64 = (1..=n).map(|k| k as f64).product();
        a.powu(n as u32) / f.sqrt()
    };
    let v: Vec<C64> = (0..r.dim())
        .map(|i| {
            r.occupations(i)
                .iter()
                .zip(alpha)
                .map(|(&n, a)| amp(a, n))
                .product()
        })
        .collect();
    PureState::normalized(r, v).unwrap().to_density()
}

/// Uniform single-excitation populations with non-negative real coherences,
/// plus a vacuum admixture.
fn uniform_state(r: [f64; 6], vacuum: f64) -> DensityOperator {
    let rg = reg(1);
    let mut m = DMatrix::<C64>::zeros(16, 16);
    let s = (1.0 - vacuum) / 4.0;
    let mut k = 0;
    for a in 0..4 {
        m[(rg.index_of(&unit(a)).unwrap(), rg.index_of(&unit(a)).unwrap())] = C64::new(s, 0.0);
        for b in a + 1..4 {
            let (i, j) = (rg.index_of(&unit(a)).unwrap(), rg.index_of(&unit(b)).unwrap());
            m[(i, j)] = C64::new(s * r[k], 0.0);
            m[(j, i)] = C64::new(s * r[k], 0.0);
            k += 1;
        }
    }
    m[(0, 0)] = C64::new(vacuum, 0.0);
    DensityOperator::from_matrix(rg, m).unwrap()
}

#[test]
fn ideal_w_has_zero_uncertainty() {
    for phases in [[0.0; 4], [0.0, 0.7, -1.2, 2.9]] {
        let rho = w_state(&reg(1), &phases).unwrap().to_density();
        let m = measure(&rho).unwrap();
        assert!(m.point.delta.abs() < 1e-12);
        assert_eq!(m.point.yc, 0.0);
        assert_relative_eq!(m.coherence.d_bar, 0.25, max_relative = 1e-12);
        assert_relative_eq!(m.coherence.v_eff, 1.0, max_relative = 1e-12);
        assert!(m.coherence.delta_bound.abs() < 1e-12);
    }
}

#[test]
fn phase_randomized_single_excitation() {
    let rg = reg(1);
    let mut m = DMatrix::<C64>::zeros(16, 16);
    for j in 0..4 {
        let i = rg.index_of(&unit(j)).unwrap();
        m[(i, i)] = C64::new(0.25, 0.0);
    }
    let rho = DensityOperator::from_matrix(rg, m).unwrap();
    for beta in [[0.0; 3], [1.0, 2.0, 3.0]] {
        let o = verification_measurement(&rho, beta).unwrap();
        for p in o.p_singles {
            assert_relative_eq!(p, 0.25, max_relative = 1e-12);
        }
        assert_relative_eq!(delta(&o), 0.75, max_relative = 1e-12);
    }
}

#[test]
fn weak_coherent_states_score_one() {
    for mean in [1e-2, 1e-3] {
        let a = C64::new(f64::sqrt(mean), 0.0);
        let rho = coherent([a, a * C64::from_polar(1.0, 0.3), a, a], 3);
        let s = click_statistics(&rho).unwrap();
        let c = 1.0 - (-mean).exp();
        let (p0, p1) = ((1.0 - c).powi(4), 4.0 * c * (1.0 - c).powi(3));
        let expected = 8.0 / 3.0 * (1.0 - p0 - p1) * p0 / (p1 * p1);
        assert_relative_eq!(yc(&s).unwrap(), expected, max_relative = 1e-6);
        assert!((yc(&s).unwrap() - 1.0).abs() < 2.0 * mean);
        // a product of coherent states is perfectly phase coherent
        assert!(measure(&rho).unwrap().point.delta < 1e-9);
    }
}

#[test]
fn click_statistics_partition_the_trace() {
    let a = C64::new(0.3, 0.1);
    let rho = coherent([a, a, a * 0.5, a * 2.0], 3);
    let s = click_statistics(&rho).unwrap();
    assert_relative_eq!(s.p0 + s.p1 + s.p_ge2, rho.trace(), max_relative = 1e-12);
    assert_relative_eq!(s.singles().iter().sum::<f64>(), s.p1, max_relative = 1e-12);
    assert_relative_eq!(s.q.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    // independent modes: q factorizes
    let click = |x: C64| 1.0 - rho_vac(x, 3);
    fn rho_vac(x: C64, cutoff: usize) -> f64 {
        let n: f64 = (0..=cutoff)
            .map(|k| x.norm_sqr().powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>())
            .sum();
        1.0 / n
    }
    let c = [click(a), click(a), click(a * 0.5), click(a * 2.0)];
    assert_relative_eq!(s.q[8], c[0] * (1.0 - c[1]) * (1.0 - c[2]) * (1.0 - c[3]), max_relative = 1e-10);
    assert_relative_eq!(s.q[0b0101], (1.0 - c[0]) * c[1] * (1.0 - c[2]) * c[3], max_relative = 1e-10);
    assert!(yc(&ClickStatistics::from_q([0.0; 16])).is_err());
}

#[test]
fn projectors_are_orthonormal() {
    for beta in [[0.0; 3], [0.4, -2.0, 1.3]] {
        let p = verification_projectors(beta);
        for i in 0..4 {
            for j in 0..4 {
                let ip: C64 = (0..4).map(|k| p[i][k].conj() * p[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-12);
            }
        }
        let u = verification_unitary(&reg(1), beta).unwrap();
        let id = &u * u.adjoint();
        assert!((0..4).all(|i| (0..4).all(|j| (id[(i, j)] - if i == j { 1.0 } else { 0.0 }).norm() < 1e-12)));
    }
}

#[test]
fn fringe_is_periodic_and_minimal_at_matched_phase() {
    let phases = [0.0, 0.5, 1.7, -0.4];
    let w = w_state(&reg(1), &phases).unwrap().to_density();
    let rho = uniform_state([0.0; 6], 0.3);
    let mixed = DensityOperator::from_matrix(
        reg(1),
        w.matrix() * C64::new(0.7, 0.0) + rho.matrix() * C64::new(0.3, 0.0),
    )
    .unwrap();
    let m = matched_phases(&mixed).unwrap();
    let grid: Vec<f64> = (0..25).map(|i| m[1] + i as f64 * std::f64::consts::PI / 12.0).collect();
    let f = fringe_scan(&mixed, &grid).unwrap();
    let d0 = f[0].1;
    assert_relative_eq!(f[24].1, d0, epsilon = 1e-12);
    assert!(f.iter().all(|(_, d)| *d >= d0 - 1e-12));
    assert!(f[6].1 > d0 + 0.1);
    // a shift of pi sends the W component to another Hadamard port
    assert_relative_eq!(f[12].1, d0, epsilon = 1e-12);
    assert!(fringe_scan(&mixed, &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn yc_of_weak_coherent_light_ignores_uniform_loss(
        nu in 1e-5f64..1e-2,
        eta in 0.05f64..1.0,
        ph in prop::array::uniform4(0.0f64..6.3),
    ) {
        let alpha = ph.map(|p| C64::from_polar(nu.sqrt(), p));
        let rho = coherent(alpha, 3);
        let mut lossy = rho.clone();
        for m in READ_MODES {
            lossy = spinwave_core::fockspace::apply_loss(&lossy, m, eta).unwrap();
        }
        let (a, b) = (yc(&click_statistics(&rho).unwrap()).unwrap(), yc(&click_statistics(&lossy).unwrap()).unwrap());
        prop_assert!((a - b).abs() / a < 0.05, "{a} {b}");
    }

    #[test]
    fn fringe_inference_recovers_consistent_coherences(
        r in prop::array::uniform6(0.0f64..0.33),
        vac in 0.0f64..0.9,
    ) {
        let rho = uniform_state(r, vac);
        let direct = coherence_summary(&rho).unwrap();
        let fringe = coherence_from_fringe(&rho, 12).unwrap();
        prop_assert!((direct.d_bar - fringe.d_bar).abs() < 1e-12);
    }

    #[test]
    fn fringe_inference_never_exceeds_the_state_value(
        re in prop::array::uniform16(-1.0f64..1.0),
        im in prop::array::uniform16(-1.0f64..1.0),
    ) {
        let g = DMatrix::from_fn(4, 4, |i, j| C64::new(re[4 * i + j], im[4 * i + j]));
        let s = &g * g.adjoint();
        let s = &s / s.trace();
        let rg = reg(1);
        let idx: Vec<usize> = (0..4).map(|j| rg.index_of(&unit(j)).unwrap()).collect();
        let mut m = DMatrix::<C64>::zeros(16, 16);
        for a in 0..4 { for b in 0..4 { m[(idx[a], idx[b])] = s[(a, b)]; } }
        let rho = DensityOperator::from_matrix(rg, m).unwrap();
        let direct = coherence_summary(&rho).unwrap();
        let fringe = coherence_from_fringe(&rho, 9).unwrap();
        prop_assert!(fringe.d_bar <= direct.d_bar + 1e-12);
    }

    #[test]
    fn delta_is_bounded_by_mean_coherence(
        r in prop::array::uniform6(0.0f64..0.33),
        vac in 0.0f64..0.9,
    ) {
        let rho = uniform_state(r, vac);
        let m = measure(&rho).unwrap();
        prop_assert!(m.point.delta <= m.coherence.delta_bound + 1e-9);
        let equal = uniform_state([r[0]; 6], vac);
        let me = measure(&equal).unwrap();
        prop_assert!((me.point.delta - me.coherence.delta_bound).abs() < 1e-12);
    }

    #[test]
    fn delta_matches_direct_projection(
        seed in prop::array::uniform32(-1.0f64..1.0),
        phases in prop::array::uniform4(-3.0f64..3.0),
    ) {
        // random full-rank state from a Gram matrix
        let rg = reg(1);
        let g = DMatrix::from_fn(16, 16, |i, j| C64::new(seed[(i + 3 * j) % 32], seed[(7 * i + j + 5) % 32]));
        let m = &g * g.adjoint();
        let tr = m.trace();
        let rho = DensityOperator::from_matrix(rg.clone(), m / tr).unwrap();
        // phases matched to |W(phases)>, whose port-0 projector is that state
        let beta = [phases[1] - phases[0], phases[2] - phases[0], phases[3] - phases[2]];
        let o = verification_measurement(&rho, beta).unwrap();
        let w = w_state(&rg, &phases).unwrap();
        let p1 = click_statistics(&rho).unwrap().p1;
        prop_assert!((o.p_singles[0] - rho.expectation(&w).unwrap() / p1).abs() < 1e-10);
        prop_assert!((o.single_click_probability - p1).abs() < 1e-12);
        prop_assert!((o.p_singles.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((delta(&o) - delta_from_probabilities(&o.p_singles)).abs() < 1e-15);
    }
}
