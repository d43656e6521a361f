mod common;

use cautious_core::lifted::{bregman, grad_psi, hessian_check, oftrl_lifted_solve, psi};
use cautious_core::numerics::softmax_scaled;
use cautious_core::rate::{solve_rate, RateParams};
use cautious_core::rng::seeded_rng;
use cautious_core::Error;
use rand::Rng;

fn params(eta: f64, d: usize) -> RateParams {
    RateParams::new(eta, 70.0, d).unwrap()
}

// Written out again here so the finite differences do not lean on the
// library's own ψ.
fn psi_oracle(y: &[f64], p: &RateParams) -> f64 {
    let s: f64 = y.iter().sum();
    let e: f64 = y.iter().map(|v| v * v.ln()).sum();
    (-p.alpha * s.ln() + e / s) / p.eta
}

fn interior(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    let mass = rng.random_range(0.05..0.95);
    w.iter().map(|v| mass * v / s).collect()
}

#[test]
fn psi_at_uniform_two_point() {
    let p = params(0.02, 2);
    assert!((psi(&[0.5, 0.5], &p).unwrap() - (-(2f64.ln()) / 0.02)).abs() < 1e-12);
    assert!(matches!(psi(&[0.0, 0.5], &p), Err(Error::Domain(_))));
    assert!(matches!(psi(&[0.7, 0.5], &p), Err(Error::Domain(_))));
}

#[test]
fn scaling_identity() {
    let p = params(0.02, 3);
    let y = [0.2, 0.3, 0.1];
    for c in [0.1, 0.5, 1.5] {
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let got = psi(&y, &p).unwrap() - psi(&cy, &p).unwrap();
        let want = (p.alpha - 1.0) * f64::ln(c) / p.eta;
        assert!((got - want).abs() <= 1e-10 * want.abs());
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = seeded_rng(21);
    for d in [2, 3, 5] {
        let p = params(0.02, d);
        for _ in 0..50 {
            let y = interior(&mut rng, d);
            let g = grad_psi(&y, &p).unwrap();
            for k in 0..d {
                let h = 1e-5 * y[k].max(1e-3);
                let mut a = y.clone();
                let mut b = y.clone();
                a[k] += h;
                b[k] -= h;
                let fd = (psi_oracle(&a, &p) - psi_oracle(&b, &p)) / (2.0 * h);
                assert!((g[k] - fd).abs() <= 1e-6 * g[k].abs().max(1.0), "{} vs {}", g[k], fd);
            }
        }
    }
}

#[test]
fn bregman_example_and_identity() {
    let p = params(0.02, 2);
    let v = bregman(&[0.3, 0.2], &[0.25, 0.25], &p).unwrap();
    assert!(v.direct > 0.0);
    assert!((v.direct - v.representation).abs() <= 1e-10 * v.direct.abs());
    let same = bregman(&[0.3, 0.2], &[0.3, 0.2], &p).unwrap();
    assert!(same.direct.abs() < 1e-9 && same.representation.abs() < 1e-12);
    assert!(bregman(&[0.3, 0.2], &[0.3, 0.2, 0.1], &p).is_err());
}

#[test]
fn bregman_dominates_lifted_l1() {
    let mut rng = seeded_rng(5);
    for d in [2, 3, 5] {
        let p = params(0.02, d);
        for _ in 0..200 {
            let y = interior(&mut rng, d);
            let z = interior(&mut rng, d);
            let v = bregman(&y, &z, &p).unwrap();
            assert!(v.relative_gap() <= 1e-9);
            let l1: f64 = y.iter().zip(&z).map(|(a, b)| (a - b).abs()).sum();
            assert!(v.representation >= l1 * l1 / (2.0 * p.eta) * (1.0 - 1e-9));
        }
    }
}

#[test]
fn hessian_lower_bound_holds() {
    let p = params(0.02, 3);
    let zero = hessian_check(&[0.2, 0.2, 0.2], &[0.0; 3], &p, 1e-4).unwrap();
    assert_eq!((zero.quadratic, zero.lower_bound), (0.0, 0.0));
    assert!(zero.passed);

    let axis = hessian_check(&[0.2, 0.2, 0.2], &[1.0, 0.0, 0.0], &p, 1e-4).unwrap();
    assert!(axis.passed && axis.quadratic > axis.lower_bound);

    let mut rng = seeded_rng(8);
    for d in [2, 3, 5] {
        let p = params(0.02, d);
        for _ in 0..300 {
            let y = interior(&mut rng, d);
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(hessian_check(&y, &v, &p, 1e-4).unwrap().passed);
        }
    }
}

#[test]
fn oracle_closed_forms() {
    let p = params(0.02, 4);
    let zero = oftrl_lifted_solve(&[0.0; 4], &p).unwrap();
    assert_eq!(zero.lambda, 0.02);
    assert!(zero.y.iter().all(|v| (v - 0.005).abs() < 1e-15));

    let c = 5000.0;
    let sym = oftrl_lifted_solve(&[-c; 4], &p).unwrap();
    let lam = f64::min(0.02, (p.alpha - 1.0) / c);
    assert!(sym.y.iter().all(|v| (v - lam / 4.0).abs() < 1e-15));
    assert!(oftrl_lifted_solve(&[f64::NAN, 0.0], &p).is_err());
}

#[test]
fn oracle_agrees_with_rate_solver() {
    let mut rng = seeded_rng(13);
    for i in 0..100 {
        let d = [2, 3, 5][i % 3];
        let p = params(0.02, d);
        let top = rng.random_range(-8000.0..0.0);
        let r: Vec<f64> = (0..d).map(|_| top - rng.random_range(0.0..400.0)).collect();
        let lam = solve_rate(&r, &p).unwrap().lambda;
        let x = softmax_scaled(&r, lam);
        let oracle = oftrl_lifted_solve(&r, &p).unwrap();
        let gap: f64 = x.iter().zip(&oracle.y).map(|(a, b)| (lam * a - b).abs()).sum();
        assert!(gap <= 1e-6, "{gap}");
        assert!((lam - common::rate_by_bisection(&r, 0.02, p.alpha)).abs() <= 1e-9 * lam);
    }
}
