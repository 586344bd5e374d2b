use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use spinwave_core::fockspace::{DensityOperator, ModeRegister, PureState};
use spinwave_core::interface::*;
use spinwave_core::witness;

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All `r` with `sum r = k` and `r <= n` componentwise.
fn compositions(n: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(n: &[usize], k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n.len() {
            if k == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for r in 0..=n[cur.len()].min(k) {
            cur.push(r);
            go(n, k - r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, &mut Vec::new(), &mut out);
    out
}

/// `<m| (1-eta)^{b^dag b} |n>` for `b = sum_j u_j a_j`, expanded in normal
/// order: `(1-eta)^{b^dag b} = sum_k (-eta)^k / k! (b^dag)^k b^k`.
fn no_click_element(u: &[C64], n: &[usize], m: &[usize], eta: f64) -> C64 {
    let kmax = n.iter().sum::<usize>().min(m.iter().sum());
    let mut total = C64::new(0.0, 0.0);
    for k in 0..=kmax {
        let mut s = C64::new(0.0, 0.0);
        for r in compositions(n, k) {
            let rest: Vec<usize> = n.iter().zip(&r).map(|(a, b)| a - b).collect();
            // b^k |n> and b^k |m> must land on the same Fock state
            let sv: Vec<i64> = m.iter().zip(&rest).map(|(a, b)| *a as i64 - *b as i64).collect();
            if sv.iter().any(|&x| x < 0) || sv.iter().sum::<i64>() != k as i64 {
                continue;
            }
            let sv: Vec<usize> = sv.into_iter().map(|x| x as usize).collect();
            let amp = |occ: &[usize], take: &[usize]| -> C64 {
                let mut a = C64::new(fact(k), 0.0);
                for j in 0..occ.len() {
                    a *= u[j].powu(take[j] as u32) / fact(take[j]);
                    a *= (fact(occ[j]) / fact(occ[j] - take[j])).sqrt();
                }
                a
            };
            s += amp(n, &r) * amp(m, &sv).conj();
        }
        total += s * (-eta).powi(k as i32) / fact(k);
    }
    total
}

/// Heralded atomic state from the closed-form no-click operator.
fn herald_oracle(xi: f64, cutoff: usize, eta: f64, u: &[C64]) -> (DMatrix<C64>, f64) {
    let norm: f64 = (0..=cutoff).map(|n| xi.powi(n as i32)).sum();
    let reg = ModeRegister::new(ATOMIC_MODES, cutoff).unwrap();
    let d = reg.dim();
    let c: Vec<f64> = (0..d)
        .map(|i| {
            reg.occupations(i)
                .iter()
                .map(|&n| (xi.powi(n as i32) / norm).sqrt())
                .product()
        })
        .collect();
    let mut rho = DMatrix::from_fn(d, d, |i, j| {
        let (n, m) = (reg.occupations(i), reg.occupations(j));
        let delta = if i == j { 1.0 } else { 0.0 };
        (C64::new(delta, 0.0) - no_click_element(u, &n, &m, eta)) * c[i] * c[j]
    });
    let p = rho.trace().re;
    rho /= C64::new(p, 0.0);
    (rho, p)
}

fn herald_row(phases: &[f64; 4]) -> Vec<C64> {
    let reg = ModeRegister::new(WRITE_MODES, 1).unwrap();
    let u = herald_circuit(phases).mode_unitary(&reg).unwrap();
    (0..4).map(|j| u[(0, j)]).collect()
}

#[test]
fn herald_matches_normal_ordered_oracle() {
    for (xi, cutoff, eta) in [(0.05, 1, 1.0), (0.05, 1, 0.3), (0.02, 2, 0.06), (0.1, 2, 0.7)] {
        let cfg = WriteConfig::new(xi, cutoff);
        let h = herald_w(&cfg, &HeraldConfig { efficiency: eta, phases: [0.0; 4] }).unwrap();
        let (rho, p) = herald_oracle(xi, cutoff, eta, &herald_row(&[0.0; 4]));
        assert!(max_abs(&(h.rho_atomic.matrix() - &rho)) < 1e-12, "xi {xi} cutoff {cutoff} eta {eta}");
        assert_relative_eq!(h.p_h, p, max_relative = 1e-12);
    }
}

#[test]
fn herald_with_phases_matches_oracle() {
    let phases = [0.3, -1.1, 2.0, 0.7];
    let cfg = WriteConfig::new(0.03, 2);
    let h = herald_w(&cfg, &HeraldConfig { efficiency: 0.5, phases }).unwrap();
    let (rho, _) = herald_oracle(0.03, 2, 0.5, &herald_row(&phases));
    assert!(max_abs(&(h.rho_atomic.matrix() - &rho)) < 1e-12);
}

#[test]
fn herald_with_unit_efficiency_matches_literal_projection() {
    // eight-mode pure state, beamsplitter tree, then (1 - |0><0|) on a1
    let xi: f64 = 0.04;
    let regs: Vec<ModeRegister> = (0..4)
        .map(|e| ModeRegister::new([ATOMIC_MODES[e], WRITE_MODES[e]], 1).unwrap())
        .collect();
    let mut joint: Option<PureState> = None;
    for (e, reg) in regs.iter().enumerate() {
        let mut v = vec![C64::new(0.0, 0.0); reg.dim()];
        let z = (1.0 + xi).sqrt();
        v[reg.index_of(&[0, 0]).unwrap()] = C64::new(1.0 / z, 0.0);
        v[reg.index_of(&[1, 1]).unwrap()] = C64::new(xi.sqrt() / z, 0.0);
        let s = PureState::from_amplitudes(reg.clone(), v).unwrap();
        let _ = e;
        joint = Some(match joint {
            None => s,
            Some(j) => j.tensor(&s).unwrap(),
        });
    }
    let joint = joint.unwrap();
    // widen to cutoff 4 so the tree cannot truncate
    let labels: Vec<String> = joint.register().labels().to_vec();
    let wide = ModeRegister::new(labels.iter().map(String::as_str), 4).unwrap();
    let mut v = vec![C64::new(0.0, 0.0); wide.dim()];
    for i in 0..joint.register().dim() {
        let occ = joint.register().occupations(i);
        v[wide.index_of(&occ).unwrap()] = joint.amplitudes()[i];
    }
    let psi = PureState::from_amplitudes(wide.clone(), v)
        .unwrap()
        .apply_circuit(&herald_circuit(&[0.0; 4]))
        .unwrap();
    let atoms: Vec<usize> = ATOMIC_MODES.iter().map(|m| wide.mode(m).unwrap()).collect();
    let fields: Vec<usize> = WRITE_MODES.iter().map(|m| wide.mode(m).unwrap()).collect();
    let h = wide.mode("a1").unwrap();
    let areg = ModeRegister::new(ATOMIC_MODES, 1).unwrap();
    let mut rho = DMatrix::<C64>::zeros(16, 16);
    // group amplitudes by field configuration
    let mut by_field: std::collections::BTreeMap<Vec<usize>, Vec<(usize, C64)>> = Default::default();
    for i in 0..wide.dim() {
        let a = psi.amplitudes()[i];
        if a.norm() == 0.0 {
            continue;
        }
        let occ = wide.occupations(i);
        if occ[h] == 0 {
            continue;
        }
        let at: Vec<usize> = atoms.iter().map(|&m| occ[m]).collect();
        let f: Vec<usize> = fields.iter().map(|&m| occ[m]).collect();
        by_field.entry(f).or_default().push((areg.index_of(&at).unwrap(), a));
    }
    for terms in by_field.values() {
        for &(i, a) in terms {
            for &(j, b) in terms {
                rho[(i, j)] += a * b.conj();
            }
        }
    }
    let p = rho.trace().re;
    rho /= C64::new(p, 0.0);
    let got = herald_w(&WriteConfig::new(xi, 1), &HeraldConfig::default()).unwrap();
    assert!(max_abs(&(got.rho_atomic.matrix() - &rho)) < 1e-12);
    assert_relative_eq!(got.p_h, p, max_relative = 1e-12);
}

#[test]
fn weak_herald_excitation_structure() {
    // first order in xi with a weak herald: the conditional state is
    // W with weight ~ 1 - 5 xi, pairs over distinct ensembles ~ 3 xi and
    // doubly excited single ensembles ~ 2 xi
    let xi = 1e-4;
    let h = herald_w(&WriteConfig::new(xi, 2), &HeraldConfig { efficiency: 1e-4, phases: [0.0; 4] }).unwrap();
    let rho = &h.rho_atomic;
    let reg = rho.register().clone();
    let (mut distinct, mut same) = (0.0, 0.0);
    for i in 0..reg.dim() {
        let occ = reg.occupations(i);
        if occ.iter().sum::<usize>() != 2 {
            continue;
        }
        let p = rho.matrix()[(i, i)].re;
        if occ.contains(&2) {
            same += p;
        } else {
            distinct += p;
        }
    }
    assert_relative_eq!(distinct / xi, 3.0, max_relative = 2e-3);
    assert_relative_eq!(same / xi, 2.0, max_relative = 2e-3);
    let w = w_state(&reg, &[0.0; 4]).unwrap();
    assert_relative_eq!((1.0 - rho.expectation(&w).unwrap()) / xi, 5.0, max_relative = 2e-3);
}

#[test]
fn write_state_examples() {
    let s = write_state(&WriteConfig::new(0.0, 2), 0).unwrap();
    assert_relative_eq!(s.amplitude(&[0, 0]).unwrap().norm(), 1.0, epsilon = 1e-15);

    let xi = 0.01;
    let s = write_state(&WriteConfig::new(xi, 2), 1).unwrap();
    let p = |n: usize| s.amplitude(&[n, n]).unwrap().norm_sqr();
    let z = 1.0 + xi + xi * xi;
    assert_relative_eq!(p(1), xi / z, max_relative = 1e-12);
    assert_relative_eq!(p(2) / p(1), xi, max_relative = 1e-12);
    let off: f64 = (0..s.register().dim())
        .filter(|&i| {
            let o = s.register().occupations(i);
            o[0] != o[1]
        })
        .map(|i| s.amplitudes()[i].norm_sqr())
        .sum();
    assert_eq!(off, 0.0);

    let mut cfg = WriteConfig::new(0.1, 2);
    cfg.write_phases[2] = 0.4;
    let s = write_state(&cfg, 2).unwrap();
    assert_relative_eq!(s.amplitude(&[2, 2]).unwrap().arg(), 0.8, epsilon = 1e-12);
    assert!(write_state(&WriteConfig::new(0.5, 2), 0).is_err());
    assert!(write_state(&WriteConfig::new(0.1, 2), 4).is_err());
}

fn lossless_photonic(rho: &DensityOperator) -> DensityOperator {
    readout(rho, &StorageConfig::lossless()).unwrap()
}

#[test]
fn crossed_state_ideal_limit() {
    let cfg = WriteConfig::new(1e-7, 1);
    let x = herald_crossed(&cfg, &HeraldConfig::default()).unwrap();
    let photonic = lossless_photonic(&x.rho_atomic);
    let m = witness::matched_phases(&photonic).unwrap();
    for delta_phase in [0.0, 0.9, 2.5] {
        let beta = [m[0], m[1] + delta_phase, m[2]];
        let o = witness::verification_measurement(&photonic, beta).unwrap();
        // beta_2 only mixes the two incoherent pairs
        let want = [0.5, 0.0, 0.5, 0.0];
        for i in 0..4 {
            assert!((o.p_singles[i] - want[i]).abs() < 1e-5, "{:?} vs {want:?}", o.p_singles);
        }
    }
    let grid: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
    let f = witness::fringe_scan(&photonic, &grid).unwrap();
    for (_, d) in f {
        assert!((d - 0.5).abs() < 1e-5);
    }
}

#[test]
fn ideal_herald_approaches_w() {
    let h = herald_w(&WriteConfig::new(1e-8, 2), &HeraldConfig::default()).unwrap();
    let w = w_state(h.rho_atomic.register(), &[0.0; 4]).unwrap();
    assert!(h.rho_atomic.expectation(&w).unwrap() > 1.0 - 1e-7);
    let photonic = lossless_photonic(&h.rho_atomic);
    let pw = w_state(photonic.register(), &[0.0; 4]).unwrap();
    assert!(photonic.expectation(&pw).unwrap() > 1.0 - 1e-7);
    assert_eq!(photonic.register().labels(), READ_MODES);
}

#[test]
fn dephasing_examples() {
    let reg = ModeRegister::new(ATOMIC_MODES, 1).unwrap();
    let w = w_state(&reg, &[0.0; 4]).unwrap().to_density();
    let same = dephase(&w, 0.0, 17.0).unwrap();
    assert!(max_abs(&(same.matrix() - w.matrix())) < 1e-15);

    let d = dephase(&w, 17.0, 17.0).unwrap();
    let single: f64 = (0..4)
        .map(|j| {
            let mut o = [0usize; 4];
            o[j] = 1;
            d.population(&o).unwrap()
        })
        .sum();
    assert_relative_eq!(single, (-1.0f64).exp(), max_relative = 1e-12);
    // coherences between ensembles survive in proportion
    let e = |j: usize| {
        let mut o = [0usize; 4];
        o[j] = 1;
        o
    };
    assert_relative_eq!(d.element(&e(0), &e(1)).unwrap().re, 0.25 * (-1.0f64).exp(), max_relative = 1e-12);

    let gone = dephase(&w, 1e3, 17.0).unwrap();
    assert_relative_eq!(gone.population(&[0, 0, 0, 0]).unwrap(), 1.0, epsilon = 1e-12);
    assert!(dephase(&w, 1.0, 0.0).is_err());
}

#[test]
fn readout_examples() {
    let reg = ModeRegister::new(ATOMIC_MODES, 1).unwrap();
    let w = w_state(&reg, &[0.0, 0.4, 1.0, -2.0]).unwrap().to_density();
    let out = lossless_photonic(&w);
    assert!(max_abs(&(out.matrix() - w.matrix())) < 1e-15);

    let cfg = StorageConfig {
        eta_read: 0.38,
        ..StorageConfig::lossless()
    };
    let out = readout(&w, &cfg).unwrap();
    let stats = witness::click_statistics(&out).unwrap();
    assert_relative_eq!(stats.p1, 0.38, max_relative = 1e-12);
    assert_relative_eq!(stats.p0, 0.62, max_relative = 1e-12);

    // V0 scales every inter-mode coherence of the single-excitation block
    let cfg = StorageConfig {
        v0: 0.8,
        ..StorageConfig::lossless()
    };
    let out = readout(&w, &cfg).unwrap();
    let e = |j: usize| {
        let mut o = [0usize; 4];
        o[j] = 1;
        o
    };
    for (a, b) in [(0, 1), (1, 3), (2, 0)] {
        let r = out.element(&e(a), &e(b)).unwrap() / w.element(&e(a), &e(b)).unwrap();
        assert_relative_eq!(r.re, 0.8, max_relative = 1e-12);
        assert!(r.im.abs() < 1e-12);
    }
    let mut bad = StorageConfig::lossless();
    bad.eta_read = 1.2;
    assert!(readout(&w, &bad).is_err());
}

#[test]
fn motional_dephasing_time() {
    assert_relative_eq!(motional_tau(2.5, 0.14, 0.85).unwrap(), 22.148, max_relative = 1e-4);
    let a = motional_tau(2.5, 0.14, 0.85).unwrap();
    let b = motional_tau(2.5, 0.28, 0.85).unwrap();
    assert_relative_eq!(a / b, 2.0, max_relative = 1e-12);
    assert!(motional_tau(1e-9, 0.14, 0.85).unwrap() > 1e9);
}

#[test]
fn crossed_probability_is_the_sum_of_pair_heralds() {
    let cfg = WriteConfig::new(0.02, 2);
    let herald = HeraldConfig { efficiency: 0.2, phases: [0.0; 4] };
    let x = herald_crossed(&cfg, &herald).unwrap();
    x.rho_atomic.check_physical().unwrap();
    // no coherence across the {a,b} | {c,d} split in the single-excitation block
    let e = |j: usize| {
        let mut o = [0usize; 4];
        o[j] = 1;
        o
    };
    assert!(x.rho_atomic.element(&e(0), &e(2)).unwrap().norm() < 1e-15);
    assert!(x.rho_atomic.element(&e(1), &e(3)).unwrap().norm() < 1e-15);
    assert!(x.rho_atomic.element(&e(0), &e(1)).unwrap().norm() > 1e-3);
    let w = herald_w(&cfg, &herald).unwrap();
    assert!(x.p_h > w.p_h);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn storage_is_monotone_in_time(t1 in 0.0f64..40.0, dt in 0.1f64..10.0) {
        let h = herald_w(&WriteConfig::new(5e-3, 1), &HeraldConfig { efficiency: 0.06, phases: [0.0; 4] }).unwrap();
        let cfg = |t: f64| StorageConfig { tau_us: t, tau_m_us: 17.0, eta_read: 0.38, nu_read: 1e-3, v0: 0.95, detector_eta: 1.0 };
        let a = witness::measure(&store_and_read(&h.rho_atomic, &cfg(t1)).unwrap()).unwrap();
        let b = witness::measure(&store_and_read(&h.rho_atomic, &cfg(t1 + dt)).unwrap()).unwrap();
        prop_assert!(b.point.yc >= a.point.yc - 1e-12);
        prop_assert!(b.point.delta >= a.point.delta - 1e-12);
    }

    #[test]
    fn heralded_states_are_physical(xi in 0.0f64..0.3, eta in 0.01f64..1.0, p in prop::array::uniform4(-3.0f64..3.0)) {
        let mut cfg = WriteConfig::new(xi, 1);
        cfg.write_phases = p;
        let h = herald_w(&cfg, &HeraldConfig { efficiency: eta, phases: [0.0; 4] }).unwrap();
        h.rho_atomic.check_physical().unwrap();
        prop_assert!(h.p_h > 0.0 && h.p_h < 1.0);
        prop_assert!((h.rho_atomic.trace() - 1.0).abs() < 1e-12);
    }
}
