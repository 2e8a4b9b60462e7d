use cavity_search::hamiltonians::{build_full, build_h1, SystemParams};
use cavity_search::propagator::propagate;
use cavity_search::pulsedesign::{ratio_from_rho, PulseSchedule};
use cavity_search::statespace::{
    full_to_collective, uniform_superposition, CollectiveTransform, Level, StateVector,
};
use cavity_search::Complex64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

mod common;
use common::random_mixing;

fn random_state(dim: usize, raw: &[f64]) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |i, _| Complex64::new(raw[2 * i], raw[2 * i + 1]));
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

fn constant_schedule(n: usize, omega: f64, omega_prime: f64, duration: f64) -> PulseSchedule {
    let grid: Vec<f64> = (0..11).map(|k| k as f64 * duration / 10.0).collect();
    PulseSchedule::from_samples(n, 0.05, grid, vec![omega; 11], vec![omega_prime; 11]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn collective_block_does_not_depend_on_mixing(
        n in 2usize..12,
        omega in 0.0f64..5.0,
        omega_prime in 0.0f64..5.0,
        g in 0.1f64..10.0,
        delta in 0.1f64..20.0,
        t in -10.0f64..10.0,
        rwa in any::<bool>(),
        entries in proptest::collection::vec(-1.0f64..1.0, 2 * 11 * 11),
    ) {
        let params = SystemParams::new(n, g, delta, rwa).unwrap();
        let h1 = build_h1(&params, omega, omega_prime, t).unwrap();
        let full = build_full(&params, omega, omega_prime, t).unwrap();
        for transform in [
            CollectiveTransform::standard(n).unwrap(),
            CollectiveTransform::new(random_mixing(n - 1, &entries)).unwrap(),
        ] {
            let w = transform.w_matrix();
            let rotated = w.adjoint() * full.matrix() * &w;
            let idx = transform.coupled_indices();
            let block = DMatrix::from_fn(5, 5, |r, c| rotated[(idx[r], idx[c])]);
            let err = (block - h1.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12, "block differs by {err}");
            let coupled: Vec<usize> = idx.to_vec();
            for r in 0..2 * n + 1 {
                for c in 0..2 * n + 1 {
                    if coupled.contains(&r) != coupled.contains(&c) {
                        prop_assert!(rotated[(r, c)].norm() < 1e-12);
                    }
                }
            }
            let d = full_to_collective(&uniform_superposition(n).unwrap(), &transform).unwrap();
            prop_assert!(d.residual < 1e-12);
            let nn = n as f64;
            prop_assert!((d.amplitudes[0].norm_sqr() - (1.0 - 1.0 / nn)).abs() < 1e-12);
            prop_assert!((d.amplitudes[1].norm_sqr() - 1.0 / nn).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_decreases_from_one_to_zero(
        n in 2usize..5000,
        eps in 0.001f64..0.2,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let end = ((n - 1) as f64).sqrt() / eps;
        let (lo, hi) = if a <= b { (a * end, b * end) } else { (b * end, a * end) };
        let r_lo = ratio_from_rho(n, eps, lo).unwrap().value;
        let r_hi = ratio_from_rho(n, eps, hi).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&r_lo) && (0.0..=1.0).contains(&r_hi));
        prop_assert!(r_hi <= r_lo);
        prop_assert!(ratio_from_rho(n, eps, end * (1.0 + a)).unwrap().value == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn midpoint_steps_preserve_norm(
        n in 2usize..20,
        omega in 0.0f64..4.0,
        omega_prime in 0.0f64..4.0,
        g in 0.1f64..5.0,
        raw in proptest::collection::vec(-1.0f64..1.0, 10),
    ) {
        prop_assume!(raw.iter().any(|x| x.abs() > 0.1));
        let params = SystemParams::new(n, g, 0.7, false).unwrap();
        let s = constant_schedule(n, omega, omega_prime, 5.0);
        let psi0 = StateVector::new(Level::Collective5, n, random_state(5, &raw)).unwrap();
        let steps = cavity_search::propagator::minimum_steps(Level::Collective5, &params, &s).unwrap().max(200);
        let tr = propagate(Level::Collective5, &params, &s, &psi0, steps).unwrap();
        prop_assert!(tr.norm_drift <= 1e-12, "drift {}", tr.norm_drift);
        for p in &tr.populations {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn global_phase_does_not_change_populations(
        n in 2usize..20,
        omega in 0.0f64..4.0,
        omega_prime in 0.0f64..4.0,
        phase in -3.2f64..3.2,
        raw in proptest::collection::vec(-1.0f64..1.0, 6),
    ) {
        prop_assume!(raw.iter().any(|x| x.abs() > 0.1));
        let params = SystemParams::resonant(n, 1.0).unwrap();
        let s = constant_schedule(n, omega, omega_prime, 5.0);
        let psi0 = StateVector::new(Level::Effective3, n, random_state(3, &raw)).unwrap();
        let a = propagate(Level::Effective3, &params, &s, &psi0, 500).unwrap();
        let b = propagate(Level::Effective3, &params, &s, &psi0.with_global_phase(phase), 500).unwrap();
        for (p, q) in a.populations.iter().zip(&b.populations) {
            for (x, y) in p.iter().zip(q) {
                prop_assert!((x - y).abs() < 1e-13);
            }
        }
    }
}
