mod common;

use cautious_core::kernel::{
    kernel, kernel_demo, kernel_rate_derivatives, moment1, moment2, scripted_utility, KernelEvaluator, KernelLearner,
    Polytope,
};
use cautious_core::learner::{Algorithm, Learner};
use cautious_core::rate::{objective_derivatives, RateBranch, RateParams};
use cautious_core::rng::seeded_rng;
use cautious_core::Error;
use rand::Rng;

fn explicit_of(vertices: &[Vec<u8>]) -> Polytope {
    Polytope::explicit(vertices.to_vec()).unwrap()
}

fn enum_kernel(vertices: &[Vec<u8>], x1: &[f64], x2: &[f64]) -> f64 {
    vertices
        .iter()
        .map(|v| {
            (0..v.len())
                .filter(|&k| v[k] == 1)
                .map(|k| x1[k] * x2[k])
                .product::<f64>()
        })
        .sum()
}

/// Vertex weights `Π_{k∈v} b[k]`, normalized.
fn vertex_dist(vertices: &[Vec<u8>], b: &[f64]) -> Vec<f64> {
    let ones = vec![1.0; b.len()];
    let w: Vec<f64> = vertices
        .iter()
        .map(|v| enum_kernel(std::slice::from_ref(v), b, &ones))
        .collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

fn enum_moments(vertices: &[Vec<u8>], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = b.len();
    let p = vertex_dist(vertices, b);
    let mut m1 = vec![0.0; d];
    let mut m2 = vec![0.0; d * d];
    for (v, w) in vertices.iter().zip(&p) {
        for i in 0..d {
            m1[i] += w * v[i] as f64;
            for j in 0..d {
                m2[i * d + j] += w * (v[i] * v[j]) as f64;
            }
        }
    }
    (m1, m2)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn closed_forms_match_enumeration() {
    let mut rng = seeded_rng(1);
    for d in 2..=10 {
        let cases = [
            (Polytope::simplex(d).unwrap(), common::simplex_vertices(d)),
            (Polytope::hypercube(d).unwrap(), common::cube_vertices(d, None)),
            (Polytope::mset(d, d / 2).unwrap(), common::cube_vertices(d, Some(d / 2))),
        ];
        for (poly, verts) in &cases {
            for _ in 0..5 {
                let x1: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..2.0)).collect();
                let x2: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..2.0)).collect();
                let want = enum_kernel(verts, &x1, &x2);
                assert!(rel(kernel(poly, &x1, &x2).unwrap(), want) <= 1e-9, "{}", poly.name());
                assert!(rel(kernel(&explicit_of(verts), &x1, &x2).unwrap(), want) <= 1e-12);
            }
        }
    }
    assert!(matches!(
        kernel(&Polytope::Hypercube(2), &[1.0], &[1.0, 1.0]),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn moment_examples() {
    let m2 = moment2(&Polytope::Hypercube(2), &[1.0, 1.0]).unwrap();
    assert!((m2[1] - 0.25).abs() < 1e-15 && (m2[0] - 0.5).abs() < 1e-15);
    let s = moment2(&Polytope::Simplex(3), &[1.0, 2.0, 3.0]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert!(s[i * 3 + j].abs() < 1e-15);
            }
        }
    }
}

#[test]
fn moments_match_enumeration() {
    let mut rng = seeded_rng(2);
    for d in [3, 4, 6] {
        let cases = [
            (Polytope::hypercube(d).unwrap(), common::cube_vertices(d, None)),
            (Polytope::mset(d, 2).unwrap(), common::cube_vertices(d, Some(2))),
            (Polytope::simplex(d).unwrap(), common::simplex_vertices(d)),
        ];
        for (poly, verts) in &cases {
            for _ in 0..10 {
                let b: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0f64..3.0).exp()).collect();
                let (w1, w2) = enum_moments(verts, &b);
                let m1 = moment1(poly, &b).unwrap();
                let m2 = moment2(poly, &b).unwrap();
                for (a, b) in m1.iter().zip(&w1) {
                    assert!((a - b).abs() <= 1e-12);
                }
                for (a, b) in m2.iter().zip(&w2) {
                    assert!((a - b).abs() <= 1e-12);
                }
                for i in 0..d {
                    assert!((m2[i * d + i] - m1[i]).abs() <= 1e-15);
                    for j in 0..d {
                        assert!((m2[i * d + j] - m2[j * d + i]).abs() <= 1e-15);
                        assert!(m2[i * d + j] >= -1e-15 && m2[i * d + j] <= 1.0 + 1e-15);
                    }
                }
            }
        }
    }
}

#[test]
fn derivatives_match_vertex_space() {
    let mut rng = seeded_rng(3);
    let verts = common::cube_vertices(3, None);
    let poly = Polytope::Hypercube(3);
    let p = RateParams::from_log_actions(0.02, 70.0, 8f64.ln()).unwrap();
    for _ in 0..20 {
        let mu: Vec<f64> = (0..3).map(|_| rng.random_range(-300.0..50.0)).collect();
        let sigma = rng.random_range(-100.0..100.0);
        let lambda = rng.random_range(1e-3..0.02);
        let r: Vec<f64> = verts
            .iter()
            .map(|v| (0..3).map(|k| mu[k] * v[k] as f64).sum::<f64>() + sigma)
            .collect();
        let w = common::softmax(&r.iter().map(|x| lambda * x).collect::<Vec<_>>());
        let mean: f64 = r.iter().zip(&w).map(|(a, b)| a * b).sum();
        let var: f64 = r.iter().zip(&w).map(|(a, b)| b * (a - mean) * (a - mean)).sum();
        let (f1, f2) = kernel_rate_derivatives(lambda, &mu, sigma, &poly, &p).unwrap();
        assert!(rel(f1, mean + (p.alpha - 1.0) / lambda) <= 1e-9);
        assert!(rel(f2, var - (p.alpha - 1.0) / (lambda * lambda)) <= 1e-9);
    }

    let (f1, f2) = kernel_rate_derivatives(0.01, &[0.0; 3], 4.0, &poly, &p).unwrap();
    assert!((f1 - (4.0 + (p.alpha - 1.0) / 0.01)).abs() < 1e-9);
    assert!((f2 + (p.alpha - 1.0) / 1e-4).abs() < 1e-6);
}

#[test]
fn simplex_derivatives_equal_rate_control() {
    let p = RateParams::new(0.02, 70.0, 4).unwrap();
    let mu = [-900.0, -1200.0, -1000.0, -2000.0];
    let sigma = -150.0;
    let r: Vec<f64> = mu.iter().map(|m| m + sigma).collect();
    for lambda in [1e-3, 5e-3, 0.02] {
        let (f1, f2) = kernel_rate_derivatives(lambda, &mu, sigma, &Polytope::Simplex(4), &p).unwrap();
        let want = objective_derivatives(lambda, &r, &p).unwrap();
        assert!(rel(f1, want.f1) <= 1e-9 && rel(f2, want.f2) <= 1e-9);
    }
}

#[test]
fn first_round_plays_centroid() {
    let mut l = KernelLearner::new(Polytope::mset(4, 2).unwrap(), 0.02, 70.0).unwrap();
    let (x, stats) = l.next_point().unwrap();
    assert!(x.iter().all(|v| (v - 0.5).abs() < 1e-15));
    assert_eq!(stats.kernel_calls, 5);
    assert_eq!(stats.branch, RateBranch::Threshold);
    assert_eq!(l.lambda(), 0.02);
}

#[test]
fn simplex_trace_equals_dlrc() {
    for d in [3, 4] {
        let r = kernel_demo(&Polytope::Simplex(d), 100, 1e4, 0.02, 70.0).unwrap();
        assert_eq!(r.reference, Some("dlrc"));
        assert!(r.newton_rounds > 0);
        assert!(r.max_deviation.unwrap() <= 1e-12, "{:?}", r);
        assert!(r.budget_ok);
    }
}

#[test]
fn hypercube_matches_explicit_and_vertex_dlrc() {
    let verts = common::cube_vertices(3, None);
    let mut cube = KernelLearner::new(Polytope::Hypercube(3), 0.02, 70.0).unwrap();
    let mut listed = KernelLearner::new(explicit_of(&verts), 0.02, 70.0).unwrap();
    let mut vertex_dlrc = Learner::new(Algorithm::Dlrc, RateParams::new(0.02, 70.0, 8).unwrap(), 8);
    let mut rng = seeded_rng(4);
    let mut newton = 0;
    for t in 1..=100 {
        let nu: Vec<f64> = scripted_utility(3, t, 1e4)
            .iter()
            .map(|v| v * rng.random_range(0.9..1.1))
            .collect();
        let (a, stats) = cube.step(&nu).unwrap();
        let b = listed.step(&nu).unwrap().0;
        newton += usize::from(stats.branch == RateBranch::Newton);
        assert_eq!(stats.kernel_calls, 4 + 10 * stats.derivative_evals);

        let probs = vertex_dlrc.next_strategy().unwrap().to_vec();
        let mut c = [0.0; 3];
        for (v, p) in verts.iter().zip(&probs) {
            for k in 0..3 {
                c[k] += p * v[k] as f64;
            }
        }
        let vnu: Vec<f64> = verts
            .iter()
            .map(|v| (0..3).map(|k| nu[k] * v[k] as f64).sum())
            .collect();
        vertex_dlrc.observe(&vnu).unwrap();

        assert!(Polytope::Hypercube(3).contains(&a, 1e-12));
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 1e-10, "round {t}");
            assert!((a[k] - c[k]).abs() <= 1e-8, "round {t}: {} vs {}", a[k], c[k]);
        }
    }
    assert!(newton > 0);
}

#[test]
fn mset_demo_matches_explicit() {
    let r = kernel_demo(&Polytope::mset(5, 2).unwrap(), 60, 1e3, 0.02, 70.0).unwrap();
    assert_eq!(r.reference, Some("explicit"));
    assert!(r.max_deviation.unwrap() <= 1e-10);
    assert!(r.budget_ok);
    let h = kernel_demo(&Polytope::Hypercube(3), 50, 1e3, 0.02, 70.0).unwrap();
    assert!(h.max_deviation.unwrap() <= 1e-10 && h.budget_ok);
}

#[test]
fn evaluator_counts_calls() {
    let poly = Polytope::Hypercube(5);
    let mut ev = KernelEvaluator::new(&poly);
    ev.first_moment(&[0.1; 5]);
    assert_eq!(ev.calls(), 6);
    ev.second_moment(&[0.1; 5]);
    assert_eq!(ev.calls(), 6 + 26);
}

#[test]
fn demo_rejects_zero_rounds() {
    assert!(kernel_demo(&Polytope::Simplex(3), 0, 1.0, 0.02, 70.0).is_err());
}
