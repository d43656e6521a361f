//! Geometry of the lifted simplex `(0,1]Δ^d = {y > 0 : Σ y <= 1}`.
//!
//! Writing `y = λ x` with `x` on the simplex, the learner's iterates are the
//! OFTRL iterates of the regularizer
//!
//! ```text
//! ψ(y) = (1/η) ( -α ln Σy + (1/Σy) Σ_k y[k] ln y[k] ).
//! ```
//!
//! This module evaluates `ψ`, its derivatives and Bregman divergence, and
//! solves the joint `(λ, x)` problem by block-coordinate ascent as a check
//! that is independent of the Newton solver in [`crate::rate`].

use crate::error::{Error, Result};
use crate::numerics::{dot, kl_divergence, neg_entropy, softmax_scaled};
use crate::rate::RateParams;

/// Sum tolerance when testing `Σ y <= 1`.
const SUM_SLACK: f64 = 1e-12;

fn check_interior(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Domain("empty point".into()));
    }
    if let Some(v) = y.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!(
            "lifted point needs strictly positive entries, found {v}"
        )));
    }
    let s: f64 = y.iter().sum();
    if s > 1.0 + SUM_SLACK {
        return Err(Error::Domain(format!("lifted point has total mass {s} > 1")));
    }
    Ok(s)
}

/// `ψ(y)`.
pub fn psi(y: &[f64], params: &RateParams) -> Result<f64> {
    let s = check_interior(y)?;
    let ent: f64 = y.iter().map(|v| v * v.ln()).sum();
    Ok((-params.alpha * s.ln() + ent / s) / params.eta)
}

/// `∇ψ(y)[i] = (1/η)( -(α-1)/Σy - (1/Σy) Σ x ln x + ln x[i] / Σy )`
/// with `x = y / Σy`.
pub fn grad_psi(y: &[f64], params: &RateParams) -> Result<Vec<f64>> {
    let s = check_interior(y)?;
    let x: Vec<f64> = y.iter().map(|v| v / s).collect();
    let ne = neg_entropy(&x);
    let base = -(params.alpha - 1.0) / s - ne / s;
    Ok(x.iter().map(|xi| (base + xi.ln() / s) / params.eta).collect())
}

/// Closed-form Hessian of `ψ`, row-major `d × d`.
pub fn hessian_psi(y: &[f64], params: &RateParams) -> Result<Vec<f64>> {
    let s = check_interior(y)?;
    let d = y.len();
    let ent: f64 = y.iter().map(|v| v * v.ln()).sum();
    let s2 = s * s;
    let common = params.alpha / s2 + 2.0 * ent / (s2 * s);
    let mut h = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut v = common - (2.0 + y[i].ln() + y[j].ln()) / s2;
            if i == j {
                v += 1.0 / (s * y[i]);
            }
            h[i * d + j] = v / params.eta;
        }
    }
    Ok(h)
}

/// `vᵀ ∇²ψ(y) v` by central differences of the gradient along `v`.
///
/// The step is `1e-5 · min_k max(y[k], 1e-3)` relative to `‖v‖_∞`.
pub fn hessian_quadratic_fd(y: &[f64], v: &[f64], params: &RateParams) -> Result<f64> {
    check_interior(y)?;
    if v.len() != y.len() {
        return Err(Error::InvalidInput("direction length mismatch".into()));
    }
    let vmax = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if vmax == 0.0 {
        return Ok(0.0);
    }
    let floor = y.iter().fold(f64::INFINITY, |a, &b| a.min(b.max(1e-3)));
    let h = 1e-5 * floor / vmax;
    let step = |sign: f64| -> Vec<f64> { y.iter().zip(v).map(|(a, b)| a + sign * h * b).collect() };
    // Stepping out of the simplex cap only matters for ψ's domain check,
    // the formula itself is smooth across Σy = 1.
    let plus = grad_unchecked(&step(1.0), params);
    let minus = grad_unchecked(&step(-1.0), params);
    Ok(v.iter()
        .zip(plus.iter().zip(&minus))
        .map(|(vi, (p, m))| vi * (p - m) / (2.0 * h))
        .sum())
}

fn grad_unchecked(y: &[f64], params: &RateParams) -> Vec<f64> {
    let s: f64 = y.iter().sum();
    let ne: f64 = y.iter().map(|v| (v / s) * (v / s).ln()).sum();
    let base = -(params.alpha - 1.0) / s - ne / s;
    y.iter().map(|v| (base + (v / s).ln() / s) / params.eta).collect()
}

/// `(1/2η) Σ_k v[k]² / (y[k] Σy)`, the diagonal lower bound on `∇²ψ`.
pub fn hessian_lower_bound(y: &[f64], v: &[f64], params: &RateParams) -> f64 {
    let s: f64 = y.iter().sum();
    y.iter().zip(v).map(|(yk, vk)| vk * vk / (yk * s)).sum::<f64>() / (2.0 * params.eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianCheck {
    /// Finite-difference `vᵀ∇²ψ v`.
    pub quadratic: f64,
    pub lower_bound: f64,
    pub passed: bool,
}

/// Checks `vᵀ∇²ψ(y)v >= (1/2η) Σ v²/(y Σy)` up to `rel_tol` of the bound.
pub fn hessian_check(y: &[f64], v: &[f64], params: &RateParams, rel_tol: f64) -> Result<HessianCheck> {
    let quadratic = hessian_quadratic_fd(y, v, params)?;
    let lower_bound = hessian_lower_bound(y, v, params);
    Ok(HessianCheck {
        quadratic,
        lower_bound,
        passed: quadratic >= lower_bound - rel_tol * lower_bound.abs(),
    })
}

/// `D_log(a‖b) = a/b - 1 - ln(a/b)`, the Bregman divergence of `-ln`.
pub fn log_bregman(a: f64, b: f64) -> f64 {
    let w = a / b;
    w - 1.0 - w.ln()
}

/// `D_ψ(y‖z)` evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanValue {
    /// `ψ(y) - ψ(z) - ⟨∇ψ(z), y - z⟩`.
    pub direct: f64,
    /// `(1/η)[(α-1) D_log(Σy‖Σz) + ω KL(x‖θ) + (1-ω)(Σ x ln x - Σ θ ln θ)]`,
    /// `ω = Σy/Σz`, `x = y/Σy`, `θ = z/Σz`.
    pub representation: f64,
}

impl BregmanValue {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.direct.abs().max(self.representation.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.direct - self.representation).abs() / scale
        }
    }
}

pub fn bregman(y: &[f64], z: &[f64], params: &RateParams) -> Result<BregmanValue> {
    if y.len() != z.len() {
        return Err(Error::InvalidInput("points of different dimension".into()));
    }
    let sy = check_interior(y)?;
    let sz = check_interior(z)?;
    let grad = grad_psi(z, params)?;
    let diff: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
    let direct = psi(y, params)? - psi(z, params)? - dot(&grad, &diff);

    let x: Vec<f64> = y.iter().map(|v| v / sy).collect();
    let theta: Vec<f64> = z.iter().map(|v| v / sz).collect();
    let omega = sy / sz;
    let representation = ((params.alpha - 1.0) * log_bregman(sy, sz)
        + omega * kl_divergence(&x, &theta)
        + (1.0 - omega) * (neg_entropy(&x) - neg_entropy(&theta)))
        / params.eta;
    Ok(BregmanValue { direct, representation })
}

/// Result of the block-coordinate solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSolution {
    /// `y = λ x`.
    pub y: Vec<f64>,
    pub lambda: f64,
    pub x: Vec<f64>,
    pub sweeps: usize,
}

const ORACLE_TOL: f64 = 1e-12;
const ORACLE_MAX_SWEEPS: usize = 10_000;

/// Maximizes `λ⟨r, x⟩ + (α-1) ln λ - Σ x ln x` over `λ ∈ (0, η]`,
/// `x ∈ Δ^d` by alternating the two closed-form block maximizers:
/// `x = softmax(λ r)` and `λ = min(η, (α-1)/(-⟨r, x⟩))` (or `η` when
/// `⟨r, x⟩ >= 0`).
pub fn oftrl_lifted_solve(r: &[f64], params: &RateParams) -> Result<LiftedSolution> {
    if r.is_empty() || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("regret vector must be finite and nonempty".into()));
    }
    let eta = params.eta;
    let mut lambda = eta;
    for sweep in 1..=ORACLE_MAX_SWEEPS {
        let x = softmax_scaled(r, lambda);
        let score = dot(r, &x);
        let next = if score < 0.0 {
            eta.min((params.alpha - 1.0) / -score)
        } else {
            eta
        };
        if (next - lambda).abs() <= ORACLE_TOL * lambda {
            let x = softmax_scaled(r, next);
            return Ok(LiftedSolution {
                y: x.iter().map(|v| next * v).collect(),
                lambda: next,
                x,
                sweeps: sweep,
            });
        }
        lambda = next;
    }
    Err(Error::NoConvergence(format!(
        "alternating maximization did not settle within {ORACLE_MAX_SWEEPS} sweeps"
    )))
}
