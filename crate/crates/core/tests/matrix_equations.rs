mod common;

use common::*;
use nalgebra::{dmatrix, DMatrix};
use proptest::prelude::*;
use sparsewac::linalg::{riccati_residual, solve_care, solve_lyapunov, spectrum};
use sparsewac::Error;

#[test]
fn diagonal_spectrum() {
    let r = spectrum(&dmatrix![-1.0, 0.0; 0.0, -2.0]).unwrap();
    let mut re: Vec<f64> = r.eigenvalues.iter().map(|l| l.re).collect();
    re.sort_by(f64::total_cmp);
    assert_eq!(re, vec![-2.0, -1.0]);
    assert!(r.is_hurwitz);
}

#[test]
fn rotation_is_not_hurwitz() {
    let r = spectrum(&dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap();
    assert!(!r.is_hurwitz);
    for l in &r.eigenvalues {
        assert!(l.re.abs() < 1e-14);
        assert!((l.im.abs() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn companion_matrix_reproduces_mode_one() {
    // s² + 1.2694 s + 14.594
    let r = spectrum(&dmatrix![0.0, 1.0; -14.594, -1.2694]).unwrap();
    for l in &r.eigenvalues {
        assert!((l.re + 0.6347).abs() < 1e-4);
        assert!((l.im.abs() - 3.7672).abs() < 1e-4);
    }
}

#[test]
fn scalar_lyapunov() {
    let p = solve_lyapunov(&dmatrix![-1.0], &dmatrix![2.0]).unwrap();
    assert!((p[(0, 0)] - 1.0).abs() < 1e-15);
}

#[test]
fn upper_triangular_lyapunov_matches_kronecker() {
    let a = dmatrix![-1.0, 1.0; 0.0, -2.0];
    let w = DMatrix::identity(2, 2);
    let p = solve_lyapunov(&a, &w).unwrap();
    assert!((p - kron_lyapunov(&a, &w)).amax() < 1e-10);
}

#[test]
fn unstable_lyapunov_is_rejected() {
    let err = solve_lyapunov(&dmatrix![1.0], &dmatrix![1.0]).unwrap_err();
    assert!(matches!(err, Error::Unstable { .. }));
    assert!(err.to_string().contains("unstable coefficient"));
}

#[test]
fn scalar_care() {
    let s = solve_care(&dmatrix![0.0], &dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0]).unwrap();
    assert!((s.p[(0, 0)] - 1.0).abs() < 1e-12);
    assert!((s.k[(0, 0)] - 1.0).abs() < 1e-12);
    let s = solve_care(&dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0], &dmatrix![1.0]).unwrap();
    let root = 1.0 + 2f64.sqrt();
    assert!((s.p[(0, 0)] - root).abs() < 1e-12);
    assert!((s.k[(0, 0)] - root).abs() < 1e-12);
}

#[test]
fn care_without_stabilizing_solution_fails() {
    // Unstable mode that the input cannot reach.
    let a = dmatrix![1.0, 0.0; 0.0, -1.0];
    let b = dmatrix![0.0; 1.0];
    assert!(solve_care(&a, &b, &DMatrix::identity(2, 2), &dmatrix![1.0]).is_err());
}

#[test]
fn random_six_state_care() {
    let mut rng = rng(6);
    let plant = random_plant(&mut rng, 6, 2);
    let (q, r) = (DMatrix::identity(6, 6), DMatrix::identity(2, 2));
    let s = solve_care(&plant.a, &plant.b2, &q, &r).unwrap();
    assert!(spectrum(&(&plant.a - &plant.b2 * &s.k)).unwrap().is_hurwitz);
    let g = &plant.b2 * r.try_inverse().unwrap() * plant.b2.transpose();
    assert!(riccati_residual(&plant.a, &g, &q, &s.p) <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lyapunov_agrees_with_kronecker(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = rng(seed);
        let a = random_hurwitz(&mut rng, n);
        let c = randn(&mut rng, n, n);
        let w = c.transpose() * &c;
        let p = solve_lyapunov(&a, &w).unwrap();
        let oracle = kron_lyapunov(&a, &w);
        prop_assert!((&p - &oracle).amax() <= 1e-8 * oracle.amax().max(1.0));
        // Symmetric and PSD.
        prop_assert_eq!(&p, &p.transpose());
        let min = p.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-10 * p.norm());
        let res = a.transpose() * &p + &p * &a + &w;
        prop_assert!(res.norm() / w.norm().max(1.0) <= 1e-8);
    }

    #[test]
    fn eigenvalues_sum_to_trace(seed in any::<u64>(), n in 1usize..=10) {
        let mut rng = rng(seed);
        let m = randn(&mut rng, n, n);
        let r = spectrum(&m).unwrap();
        prop_assert_eq!(r.eigenvalues.len(), n);
        let sum: f64 = r.eigenvalues.iter().map(|l| l.re).sum();
        let tr = m.trace();
        prop_assert!((sum - tr).abs() <= 1e-8 * tr.abs().max(m.norm()));
        prop_assert_eq!(r.is_hurwitz, r.max_real_part < 0.0);
    }

    #[test]
    fn care_is_stabilizing(seed in any::<u64>(), n in 2usize..=8, p in 1usize..=3) {
        let mut rng = rng(seed);
        let plant = random_plant(&mut rng, n, p.min(n));
        let p = plant.p();
        let (q, r) = (DMatrix::identity(n, n), DMatrix::identity(p, p));
        let s = solve_care(&plant.a, &plant.b2, &q, &r).unwrap();
        prop_assert!(spectrum(&(&plant.a - &plant.b2 * &s.k)).unwrap().is_hurwitz);
        let g = &plant.b2 * plant.b2.transpose();
        prop_assert!(riccati_residual(&plant.a, &g, &q, &s.p) <= 1e-8);
        prop_assert_eq!(&s.p, &s.p.transpose());
    }
}
