use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use spinwave_core::fockspace::ModeRegister;
use spinwave_core::interface::w_state;
use spinwave_core::thermal::*;

const MODELS: [SpinModel; 2] = [SpinModel::HeisenbergPrime, SpinModel::Lmg];

/// Levels from total spin `(S, M)` with multiplicities 1, 3, 2 for S = 2, 1, 0.
fn analytic_spectrum(model: SpinModel, j: f64, h: f64) -> Vec<f64> {
    let mut e = Vec::new();
    for (s, mult) in [(2i32, 1), (1, 3), (0, 2)] {
        for m in -s..=s {
            let (sf, mf) = (s as f64, m as f64);
            let level = match model {
                SpinModel::HeisenbergPrime => {
                    let extra = if s == 2 && m == -2 { 2.0 * h } else { 0.0 };
                    -j / 4.0 * (sf * (sf + 1.0) - 3.0) / 2.0 + h * mf + extra
                }
                SpinModel::Lmg => -j / 2.0 * (sf * (sf + 1.0) - mf * mf - 2.0) + 2.0 * h * mf,
            };
            e.extend(std::iter::repeat_n(level, mult));
        }
    }
    e.sort_by(f64::total_cmp);
    e
}

fn total_sz() -> DMatrix<C64> {
    DMatrix::from_fn(16, 16, |r, c| {
        if r == c {
            C64::from((r as u32).count_ones() as f64 - 2.0)
        } else {
            C64::from(0.0)
        }
    })
}

fn swap_sites(a: usize, b: usize) -> DMatrix<C64> {
    let bit = |s: usize| 1usize << (3 - s);
    DMatrix::from_fn(16, 16, |r, c| {
        let (ba, bb) = ((c & bit(a)) != 0, (c & bit(b)) != 0);
        let mut t = c & !(bit(a) | bit(b));
        if ba {
            t |= bit(b);
        }
        if bb {
            t |= bit(a);
        }
        C64::from(if r == t { 1.0 } else { 0.0 })
    })
}

#[test]
fn spectra_match_total_spin_formula() {
    for model in MODELS {
        for (j, h) in [(1.0, 0.5), (2.0, 0.3), (1.0, 0.0), (0.7, -0.4)] {
            let ham = build_hamiltonian(model, j, h).unwrap();
            let (e, _) = ham.spectrum();
            for (a, b) in e.iter().zip(analytic_spectrum(model, j, h)) {
                assert!((a - b).abs() < 1e-12, "{model} J {j} h {h}: {e:?}");
            }
        }
    }
}

#[test]
fn hamiltonians_are_symmetric_and_conserve_sz() {
    let sz = total_sz();
    for model in MODELS {
        let h = build_hamiltonian(model, 1.0, 0.5).unwrap().matrix;
        assert!((&h - h.adjoint()).norm() < 1e-14);
        assert!((&h * &sz - &sz * &h).norm() < 1e-13);
        for (a, b) in [(0, 1), (1, 3), (0, 2)] {
            let p = swap_sites(a, b);
            assert!((&p * &h * &p - &h).norm() < 1e-13);
        }
    }
}

#[test]
fn ground_state_is_w() {
    let reg = ModeRegister::new(["s0", "s1", "s2", "s3"], 1).unwrap();
    let w = w_state(&reg, &[0.0; 4]).unwrap();
    for model in MODELS {
        let h = build_hamiltonian(model, 1.0, 0.5).unwrap();
        assert_eq!(h.ground_degeneracy(), 1);
        let g = ground_state(&h);
        let v = w.amplitudes();
        let f = (v.adjoint() * &g.rho * v)[(0, 0)].re;
        assert_relative_eq!(f, 1.0, epsilon = 1e-12);
        let p = thermal_witness_point(&g).unwrap();
        assert!(p.delta.abs() < 1e-12 && p.yc.abs() < 1e-12);
        let low = gibbs(&h, 1e-3).unwrap();
        assert!((&low.rho - &g.rho).norm() < 1e-12);
    }
}

#[test]
fn infinite_temperature_limit() {
    for model in MODELS {
        let h = build_hamiltonian(model, 1.0, 0.5).unwrap();
        let g = gibbs(&h, f64::INFINITY).unwrap();
        assert!((&g.rho - DMatrix::<C64>::identity(16, 16) / C64::from(16.0)).norm() < 1e-12);
        let p = thermal_witness_point(&g).unwrap();
        // p0 = 1/16, p1 = 4/16, p_ge2 = 11/16
        assert_relative_eq!(p.yc, 11.0 / 6.0, max_relative = 1e-12);
        assert_relative_eq!(p.delta, 0.75, max_relative = 1e-12);
    }
}

#[test]
fn partition_function_matches_levels() {
    for model in MODELS {
        let h = build_hamiltonian(model, 1.0, 0.5).unwrap();
        let levels = analytic_spectrum(model, 1.0, 0.5);
        for kt in [0.05, 0.3, 1.0, 7.0] {
            let z: f64 = levels.iter().map(|e| (-e / kt).exp()).sum();
            let g = gibbs(&h, kt).unwrap();
            assert_relative_eq!(g.log_partition, z.ln(), max_relative = 1e-12);
            assert_relative_eq!(g.partition_function(), z, max_relative = 1e-11);
            assert!((&g.rho * &h.matrix - &h.matrix * &g.rho).norm() < 1e-12);
            assert_relative_eq!(g.rho.trace().re, 1.0, max_relative = 1e-12);
        }
        // far below the gap Z itself overflows but ln Z stays exact
        let g = gibbs(&h, 1e-4).unwrap();
        assert_relative_eq!(g.log_partition, -levels[0] / 1e-4, max_relative = 1e-12);
    }
}

#[test]
fn models_give_different_curves() {
    let grid = [0.0, 0.1, 0.3, 1.0, 3.0];
    let a = thermal_curve(SpinModel::HeisenbergPrime, 1.0, 0.5, &grid).unwrap();
    let b = thermal_curve(SpinModel::Lmg, 1.0, 0.5, &grid).unwrap();
    assert!(a.iter().zip(&b).skip(1).any(|(x, y)| (x.point.delta - y.point.delta).abs() > 1e-3));
    for s in a.iter().chain(&b) {
        assert_relative_eq!(s.p0 + s.p1 + s.p_ge2, 1.0, max_relative = 1e-12);
    }
    assert_eq!(a[0].log_partition, f64::INFINITY);
}

#[test]
fn rejects_bad_inputs() {
    assert!(build_hamiltonian(SpinModel::Lmg, 0.0, 0.5).is_err());
    assert!(build_hamiltonian(SpinModel::Lmg, 1.0, f64::NAN).is_err());
    let h = build_hamiltonian(SpinModel::Lmg, 1.0, 0.5).unwrap();
    assert!(gibbs(&h, 0.0).is_err());
    assert!(thermal_curve(SpinModel::Lmg, 1.0, 0.5, &[0.2, 0.1]).is_err());
    assert!(thermal_curve(SpinModel::Lmg, 1.0, 0.5, &[-1.0, 0.1]).is_err());
    assert!(spin_witness_point(&DMatrix::zeros(4, 4)).is_err());
    assert_eq!("heisenberg".parse::<SpinModel>().unwrap(), SpinModel::HeisenbergPrime);
    assert!("ising".parse::<SpinModel>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_grows_with_temperature(kt in 0.01f64..20.0, f in 1.01f64..3.0, lmg in any::<bool>()) {
        let model = if lmg { SpinModel::Lmg } else { SpinModel::HeisenbergPrime };
        let h = build_hamiltonian(model, 1.0, 0.5).unwrap();
        let e1 = energy(&h, &gibbs(&h, kt).unwrap());
        let e2 = energy(&h, &gibbs(&h, kt * f).unwrap());
        prop_assert!(e2 >= e1 - 1e-12);
    }
}
