//! Sampled property suites over the rate-control problem, the lifted
//! geometry and the polytope kernels.
//!
//! Every suite draws from a [`crate::rng::StreamRng`] seeded by the caller,
//! reduces each sample to a nonnegative violation, and reports the largest.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{kernel, KernelEvaluator, Polytope};
use crate::lifted::{bregman, hessian_check, hessian_psi, hessian_quadratic_fd, oftrl_lifted_solve};
use crate::numerics::{dot, entropy, kl_divergence, l1_dist, linf_dist, log_sum_exp, max_entry, softmax_scaled};
use crate::rate::{objective_derivatives, solve_rate, RateBranch, RateParams};
use crate::rng::{seeded_rng, StreamRng};

pub const SUITES: [&str; 8] = [
    "stability",
    "concavity",
    "spectral",
    "bregman",
    "viewpoint",
    "kernel",
    "solver",
    "lemmas",
];

/// Sampling controls shared by all suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    /// Restricts dimension-swept suites to one dimension.
    pub d: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            d: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

/// Running maximum of per-sample violations.
struct Tally {
    name: &'static str,
    samples: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            samples: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn add(&mut self, violation: f64) {
        self.samples += 1;
        // NaN must surface as a failure
        if violation.is_nan() {
            self.worst = f64::INFINITY;
        } else {
            self.worst = self.worst.max(violation);
        }
    }

    /// Violation of `lhs <= rhs`, relative to `scale`.
    fn le(&mut self, lhs: f64, rhs: f64, scale: f64) {
        self.add(((lhs - rhs) / scale.max(f64::MIN_POSITIVE)).max(0.0));
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            samples: self.samples,
            max_violation: self.worst,
            tolerance: self.tolerance,
        }
    }
}

fn dims(cfg: &VerifyConfig, default: &[usize]) -> Vec<usize> {
    cfg.d.map_or_else(|| default.to_vec(), |d| vec![d])
}

fn log_uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// A regret vector from one of four regimes: near zero, straddling the
/// threshold, far below it, or widely spread.
pub fn sample_regrets(rng: &mut StreamRng, params: &RateParams, d: usize) -> Vec<f64> {
    let thr = params.threshold();
    let top = match rng.random_range(0..4) {
        0 => rng.random_range(-5.0..=5.0),
        1 => thr + rng.random_range(-10.0..=10.0),
        2 => thr * log_uniform(rng, 1.0, 1e3),
        _ => -log_uniform(rng, 1e-2, 1e5),
    };
    let spread = log_uniform(rng, 1e-2, 1e3);
    let hot = rng.random_range(0..d);
    (0..d)
        .map(|k| {
            if k == hot {
                top
            } else {
                top - spread * rng.random_range(0.0..=1.0)
            }
        })
        .collect()
}

/// A point of the lifted simplex with entries bounded away from zero.
pub fn sample_lifted(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..=2.0)).collect();
    let x = softmax_scaled(&w, 1.0);
    let s = rng.random_range(0.05..=1.0);
    x.iter().map(|v| s * v).collect()
}

fn sample_simplex(rng: &mut StreamRng, d: usize, scale: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(-scale..=scale)).collect();
    softmax_scaled(&w, 1.0)
}

fn params_for(rng: &mut StreamRng, d: usize) -> Result<RateParams> {
    let eta = if rng.random_bool(0.5) { 1.0 / 50.0 } else { 1.0 };
    RateParams::new(eta, 70.0, d)
}

/// `λ̂(r) / λ̂(r')` within `[7/10, 7/5]` whenever `‖r - r'‖_∞ <= 2`, `β = 70`.
pub fn stability(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("stability", 0.0);
    let ds = dims(cfg, &[2, 3, 5, 10]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        let p = params_for(&mut rng, d)?;
        let r = sample_regrets(&mut rng, &p, d);
        let r2: Vec<f64> = r.iter().map(|v| v + rng.random_range(-2.0..=2.0)).collect();
        let ratio = solve_rate(&r, &p)?.lambda / solve_rate(&r2, &p)?.lambda;
        tally.add((0.7 - ratio).max(ratio - 1.4).max(0.0));
    }
    Ok(tally.finish())
}

/// Strong concavity and self-concordance of `f(·; r)`, plus agreement of
/// `f''`, `f'''` with central differences of `f'`, `f''`.
pub fn concavity(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("concavity", 0.0);
    let ds = dims(cfg, &[2, 3, 5, 20]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        let p = params_for(&mut rng, d)?;
        let width = log_uniform(&mut rng, 1e-2, 1e4);
        let r: Vec<f64> = (0..d).map(|_| rng.random_range(-width..=width)).collect();
        let lambda = log_uniform(&mut rng, 1e-4, 1.0);
        let f = objective_derivatives(lambda, &r, &p)?;
        let ln2 = p.log_actions * p.log_actions;
        tally.le(
            f.f2,
            -(p.alpha - ln2 - 1.0) / (lambda * lambda) + 1e-9 * f.f2.abs(),
            f.f2.abs(),
        );
        tally.le(f.f3 * f.f3, -4.0 * f.f2.powi(3) * (1.0 + 1e-6), f.f3 * f.f3);

        let h = 1e-4 * lambda;
        let lo = objective_derivatives(lambda - h, &r, &p)?;
        let hi = objective_derivatives(lambda + h, &r, &p)?;
        let fd2 = (hi.f1 - lo.f1) / (2.0 * h);
        let fd3 = (hi.f2 - lo.f2) / (2.0 * h);
        tally.add(((fd2 - f.f2).abs() / f.f2.abs() - 1e-6).max(0.0));
        tally.add(((fd3 - f.f3).abs() / f.f3.abs().max(f64::MIN_POSITIVE) - 1e-4).max(0.0));
    }
    Ok(tally.finish())
}

/// `ψ` Hessian: lower bound `(1/2η) Σ v²/(y Σy)`, analytic vs central
/// differences; lifted curvature `D_ψ(y‖z) >= (1/2η)‖y - z‖₁²`; simplex
/// curvature `η D_ψ(z‖y) >= ¼(1-ε)‖θ - x‖₁²` for `Σz/Σy ∈ [1-ε, 1+ε]`,
/// `ε <= 2/5`.
pub fn spectral(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("spectral", 0.0);
    let ds = dims(cfg, &[2, 3, 5]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        let p = params_for(&mut rng, d)?;
        let y = sample_lifted(&mut rng, d);
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();

        let hc = hessian_check(&y, &v, &p, 1e-4)?;
        tally.le(hc.lower_bound * (1.0 - 1e-4), hc.quadratic, hc.lower_bound);
        let h = hessian_psi(&y, &p)?;
        let mut exact = 0.0;
        for i in 0..d {
            for j in 0..d {
                exact += v[i] * h[i * d + j] * v[j];
            }
        }
        let fd = hessian_quadratic_fd(&y, &v, &p)?;
        tally.add(((fd - exact).abs() / exact.abs() - 1e-4).max(0.0));

        let z = sample_lifted(&mut rng, d);
        let dz = bregman(&y, &z, &p)?.direct;
        let lifted = l1_dist(&y, &z).powi(2) / (2.0 * p.eta);
        tally.le(lifted, dz + 1e-9 * dz.abs(), lifted);

        let eps = rng.random_range(0.0..=0.4);
        let sy: f64 = y.iter().sum();
        let omega = rng.random_range(1.0 - eps..=1.0 + eps);
        let theta = sample_simplex(&mut rng, d, 2.0);
        let sz = (omega * sy).min(1.0);
        let eps = eps.max((sz / sy - 1.0).abs());
        let z: Vec<f64> = theta.iter().map(|t| sz * t).collect();
        let x: Vec<f64> = y.iter().map(|v| v / sy).collect();
        let dzy = p.eta * bregman(&z, &y, &p)?.direct;
        let simplex = 0.25 * (1.0 - eps) * l1_dist(&theta, &x).powi(2);
        tally.le(simplex, dzy + 1e-9 * dzy.abs(), simplex);
    }
    Ok(tally.finish())
}

/// `D_ψ` by definition vs by its `D_log` + KL + entropy representation.
pub fn bregman_paths(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("bregman", 1e-8);
    let ds = dims(cfg, &[2, 3, 5, 10]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        let p = params_for(&mut rng, d)?;
        let y = sample_lifted(&mut rng, d);
        let z = sample_lifted(&mut rng, d);
        tally.add(bregman(&y, &z, &p)?.relative_gap());
        tally.add(bregman(&y, &y, &p)?.direct.abs());
    }
    Ok(tally.finish())
}

/// `λ̂ softmax(λ̂ r)` against the block-coordinate lifted OFTRL maximizer.
pub fn viewpoint(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("viewpoint", 1e-6);
    let ds = dims(cfg, &[2, 3, 5, 10]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        let p = RateParams::new(1.0 / 50.0, 70.0, d)?;
        let r = sample_regrets(&mut rng, &p, d);
        let lambda = solve_rate(&r, &p)?.lambda;
        let y: Vec<f64> = softmax_scaled(&r, lambda).iter().map(|v| lambda * v).collect();
        let oracle = oftrl_lifted_solve(&r, &p)?;
        tally.add(l1_dist(&y, &oracle.y));
    }
    Ok(tally.finish())
}

/// Closed-form kernels against vertex sums, and kernel moments against
/// direct expectations over the vertex distribution.
pub fn kernel_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("kernel", 0.0);
    let ds = dims(cfg, &[2, 3, 5, 8, 10]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        if d > 12 {
            return Err(Error::InvalidInput(format!(
                "kernel suite enumerates vertices; d = {d} > 12"
            )));
        }
        let polytope = match s % 3 {
            0 => Polytope::hypercube(d)?,
            1 if d >= 2 => Polytope::mset(d, 1 + rng.random_range(0..d - 1))?,
            _ => Polytope::simplex(d.max(2))?,
        };
        let d = polytope.dim();
        let verts = polytope.vertices()?;
        let x1: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..=1.5)).collect();
        let x2: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..=1.5)).collect();
        let mut brute = 0.0;
        let mut abs = 0.0;
        for v in &verts {
            let t: f64 = (0..d).filter(|&k| v[k]).map(|k| x1[k] * x2[k]).product();
            brute += t;
            abs += t.abs();
        }
        let closed = kernel(&polytope, &x1, &x2)?;
        tally.add(((closed - brute).abs() / abs.max(1.0) - 1e-9).max(0.0));

        let log_b: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..=3.0)).collect();
        let weights: Vec<f64> = verts
            .iter()
            .map(|v| (0..d).filter(|&k| v[k]).map(|k| log_b[k]).sum())
            .collect();
        let probs = softmax_scaled(&weights, 1.0);
        let (first, second) = KernelEvaluator::new(&polytope).second_moment(&log_b);
        for i in 0..d {
            let e: f64 = verts.iter().zip(&probs).filter(|(v, _)| v[i]).map(|(_, p)| p).sum();
            tally.add(((first[i] - e).abs() - 1e-12).max(0.0));
            for j in 0..d {
                let e: f64 = verts
                    .iter()
                    .zip(&probs)
                    .filter(|(v, _)| v[i] && v[j])
                    .map(|(_, p)| p)
                    .sum();
                tally.add(((second[i * d + j] - e).abs() - 1e-12).max(0.0));
            }
        }
    }
    Ok(tally.finish())
}

/// Geometric bisection on `f'` over `(0, η]`.
fn bisection_rate(r: &[f64], p: &RateParams) -> Result<f64> {
    let f1 = |l: f64| objective_derivatives(l, r, p).map(|d| d.f1);
    if f1(p.eta)? >= 0.0 {
        return Ok(p.eta);
    }
    let (mut lo, mut hi) = (p.eta, p.eta);
    while f1(lo)? < 0.0 {
        hi = lo;
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if f1(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton rates against bisection, and the 30-iteration budget.
pub fn solver(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("solver", 0.0);
    let ds = dims(cfg, &[2, 5, 20, 100]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        let p = RateParams::new(1.0 / 50.0, 70.0, d)?;
        let r = sample_regrets(&mut rng, &p, d);
        let sol = solve_rate(&r, &p)?;
        let want = bisection_rate(&r, &p)?;
        tally.add(((sol.lambda - want).abs() / want - 1e-8).max(0.0));
        if sol.branch == RateBranch::Newton {
            tally.add(sol.iterations.saturating_sub(30) as f64);
        }
    }
    Ok(tally.finish())
}

/// Pinsker, the Fannes-Audenaert entropy continuity bound, the
/// log-sum-exp sandwich and the corrected reward variation bound.
///
/// The weaker-looking `|H(p) - H(q)| <= ln d · √(2 KL(p‖q))` is false
/// (`p = (1, 0)`, `q = (0.8, 0.2)`), so continuity is checked in
/// total-variation form.
pub fn lemmas(cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mut rng = seeded_rng(cfg.seed);
    let mut tally = Tally::new("lemmas", 0.0);
    let ds = dims(cfg, &[2, 3, 5, 10]);
    for s in 0..cfg.samples {
        let d = ds[s % ds.len()];
        let scale = log_uniform(&mut rng, 0.1, 10.0);
        let p = sample_simplex(&mut rng, d, scale);
        let q = sample_simplex(&mut rng, d, scale);
        let kl = kl_divergence(&p, &q);
        let l1 = l1_dist(&p, &q).powi(2);
        tally.le(l1, 2.0 * kl * (1.0 + 1e-12), l1);
        let dh = (entropy(&p) - entropy(&q)).abs();
        let tv = 0.5 * l1_dist(&p, &q);
        let fannes = tv * ((d - 1) as f64).ln() + entropy(&[tv, 1.0 - tv]);
        tally.le(dh, fannes * (1.0 + 1e-12) + 1e-15, dh);

        let lambda = log_uniform(&mut rng, 1e-3, 10.0);
        let r: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..=50.0)).collect();
        let scaled: Vec<f64> = r.iter().map(|v| lambda * v).collect();
        let mid = log_sum_exp(&scaled) / lambda;
        let m = max_entry(&r);
        tally.le(m, mid + 1e-12 * m.abs(), m.abs().max(1.0));
        tally.le(
            mid,
            m + (d as f64).ln() / lambda + 1e-12 * mid.abs(),
            mid.abs().max(1.0),
        );

        let nu0: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let nu1: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let u0: Vec<f64> = nu0.iter().map(|v| v - dot(&nu0, &q)).collect();
        let u1: Vec<f64> = nu1.iter().map(|v| v - dot(&nu1, &p)).collect();
        let lhs = linf_dist(&u1, &u0).powi(2);
        let rhs = 6.0 * linf_dist(&nu1, &nu0).powi(2) + 4.0 * l1_dist(&p, &q).powi(2);
        tally.le(lhs, rhs * (1.0 + 1e-12), lhs);
    }
    Ok(tally.finish())
}

/// Runs one suite by name, or all of them for `"all"`.
pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<Vec<SuiteReport>> {
    let one = |n: &str| -> Result<SuiteReport> {
        match n {
            "stability" => stability(cfg),
            "concavity" => concavity(cfg),
            "spectral" => spectral(cfg),
            "bregman" => bregman_paths(cfg),
            "viewpoint" => viewpoint(cfg),
            "kernel" => kernel_suite(cfg),
            "solver" => solver(cfg),
            "lemmas" => lemmas(cfg),
            other => Err(Error::InvalidInput(format!(
                "unknown suite `{other}` (expected all, {})",
                SUITES.join(", ")
            ))),
        }
    };
    if name == "all" {
        SUITES.iter().map(|n| one(n)).collect()
    } else {
        Ok(vec![one(name)?])
    }
}
