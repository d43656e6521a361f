//! The learning-rate control problem
//!
//! ```text
//! λ̂(r) = argmax_{λ ∈ (0, η]}  f(λ; r),   f(λ; r) = (α - 1) ln λ + ln Σ_k exp(λ r[k])
//! ```
//!
//! `f` is strongly concave and self-concordant in `λ` once
//! `α = 2 + 2 ln d + β ln² d`, so the maximizer is the root of `f'` clamped
//! to `η`. Roots are found by Newton's method started from the analytic
//! estimate `(α - 1) / (-max r)` and kept inside a sign bracket.

use crate::error::{Error, Result};
use crate::numerics::max_entry;

/// Largest `η` for which the self-play theorems are stated.
pub const THEOREM_MAX_ETA: f64 = 1.0 / 50.0;
/// Smallest `β` for which multiplicative stability is guaranteed.
pub const THEOREM_MIN_BETA: f64 = 70.0;
pub const DEFAULT_BETA: f64 = 70.0;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;

/// `min{1/50, 1/(12 √2 L n)}`, the rate used by the regret bound.
pub fn default_eta(smoothness: f64, players: usize) -> f64 {
    THEOREM_MAX_ETA.min(1.0 / (12.0 * 2f64.sqrt() * smoothness * players as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Cap on the learning rate.
    pub eta: f64,
    pub beta: f64,
    /// `ln d` for the number of actions `d` the learner mixes over.
    pub log_actions: f64,
    /// `2 + 2 ln d + β ln² d`.
    pub alpha: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl RateParams {
    pub fn new(eta: f64, beta: f64, actions: usize) -> Result<Self> {
        if actions < 2 {
            return Err(Error::InvalidInput(format!(
                "learning-rate control needs at least 2 actions, got {actions}"
            )));
        }
        Self::from_log_actions(eta, beta, (actions as f64).ln())
    }

    /// Same as [`RateParams::new`] for action sets too large to count in a
    /// `usize` (vertex sets of polytopes).
    pub fn from_log_actions(eta: f64, beta: f64, log_actions: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        if !(log_actions.is_finite() && log_actions >= 2f64.ln() - 1e-12) {
            return Err(Error::InvalidInput(format!(
                "need at least 2 actions (ln d = {log_actions})"
            )));
        }
        let alpha = 2.0 + 2.0 * log_actions + beta * log_actions * log_actions;
        Ok(Self {
            eta,
            beta,
            log_actions,
            alpha,
            rel_tol: DEFAULT_REL_TOL,
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Regret level `-β ln² d` below which the learner slows down.
    pub fn threshold(&self) -> f64 {
        -self.beta * self.log_actions * self.log_actions
    }

    /// Whether `max r >= threshold` implies `λ̂ = η`.
    ///
    /// `f'(η) >= (α - 1 - ln d)/η + max r`, so the shortcut is exact iff
    /// `η β ln² d <= α - 1 - ln d`, which holds for every `η <= 1`.
    pub fn threshold_shortcut_valid(&self) -> bool {
        self.eta * self.beta * self.log_actions * self.log_actions <= self.alpha - 1.0 - self.log_actions
    }

    /// Rejects constants outside the regime covered by the theorems.
    pub fn check_theorem_mode(&self) -> Result<()> {
        if self.eta > THEOREM_MAX_ETA {
            return Err(Error::InvalidInput(format!(
                "eta = {} exceeds the theorem limit eta <= 1/50",
                self.eta
            )));
        }
        if self.beta < THEOREM_MIN_BETA {
            return Err(Error::InvalidInput(format!(
                "beta = {} is below the theorem limit beta >= 70",
                self.beta
            )));
        }
        Ok(())
    }
}

/// `f` and its first three `λ`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

/// Evaluates `f(λ; r)` and `f', f'', f'''` through softmax-weighted central
/// moments of `r`:
///
/// ```text
/// f'   = E[r] + (α-1)/λ
/// f''  = Var[r] - (α-1)/λ²
/// f''' = E[(r - E r)³] + 2(α-1)/λ³
/// ```
pub fn objective_derivatives(lambda: f64, r: &[f64], params: &RateParams) -> Result<Derivatives> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if r.is_empty() || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("regret vector must be finite and nonempty".into()));
    }
    Ok(derivatives_unchecked(lambda, r, params.alpha))
}

pub(crate) fn derivatives_unchecked(lambda: f64, r: &[f64], alpha: f64) -> Derivatives {
    let m = max_entry(r);
    let mut z = 0.0;
    let mut mean = 0.0;
    for &v in r {
        let w = (lambda * (v - m)).exp();
        z += w;
        mean += w * (v - m);
    }
    mean /= z;
    let mut var = 0.0;
    let mut skew = 0.0;
    for &v in r {
        let w = (lambda * (v - m)).exp() / z;
        let c = v - m - mean;
        var += w * c * c;
        skew += w * c * c * c;
    }
    let a1 = alpha - 1.0;
    Derivatives {
        f: a1 * lambda.ln() + lambda * m + z.ln(),
        f1: m + mean + a1 / lambda,
        f2: var - a1 / (lambda * lambda),
        f3: skew + 2.0 * a1 / (lambda * lambda * lambda),
    }
}

/// `λ₀ = (α - 1) / (-max r)`; requires `max r < 0`.
pub fn analytic_init(r: &[f64], params: &RateParams) -> Result<f64> {
    let m = max_entry(r);
    if m.is_nan() || m >= 0.0 {
        return Err(Error::Precondition(format!(
            "analytic initialization needs max r < 0, got {m}"
        )));
    }
    Ok((params.alpha - 1.0) / -m)
}

/// Which route produced a learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateBranch {
    /// `max r >= -β ln² d`.
    Threshold,
    /// `f'(η) >= 0`, so the cap is optimal.
    Capped,
    /// Interior root of `f'`.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSolution {
    pub lambda: f64,
    pub branch: RateBranch,
    /// Newton updates taken (bisection fallbacks included).
    pub iterations: usize,
    /// Steps that fell back to bisection.
    pub bisections: usize,
}

/// Solves for `λ̂ ∈ (0, η]`.
pub fn solve_rate(r: &[f64], params: &RateParams) -> Result<RateSolution> {
    if r.is_empty() || r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("regret vector must be finite and nonempty".into()));
    }
    let eta = params.eta;
    let m = max_entry(r);
    if m >= params.threshold() && params.threshold_shortcut_valid() {
        return Ok(RateSolution {
            lambda: eta,
            branch: RateBranch::Threshold,
            iterations: 0,
            bisections: 0,
        });
    }
    let alpha = params.alpha;
    let capped = RateSolution {
        lambda: eta,
        branch: RateBranch::Capped,
        iterations: 0,
        bisections: 0,
    };
    if derivatives_unchecked(eta, r, alpha).f1 >= 0.0 {
        return Ok(capped);
    }
    // f'(η) < 0 and E[r] <= max r force max r < 0 here.
    let start = analytic_init(r, params)?.min(eta);
    newton_root(
        |lambda| {
            let d = derivatives_unchecked(lambda, r, alpha);
            (d.f1, d.f2)
        },
        start,
        0.0,
        eta,
        params.rel_tol,
        params.max_iter,
    )
}

/// Safeguarded Newton on a decreasing `g` with `g(lo) > 0 > g(hi)`
/// (`lo = 0` stands for `g(0+) = +∞`). Steps leaving the bracket are
/// replaced by the bracket midpoint.
pub(crate) fn newton_root(
    mut eval: impl FnMut(f64) -> (f64, f64),
    start: f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<RateSolution> {
    let mut lambda = start;
    let mut bisections = 0;
    for iter in 1..=max_iter {
        let (g, dg) = eval(lambda);
        if g == 0.0 {
            return Ok(RateSolution {
                lambda,
                branch: RateBranch::Newton,
                iterations: iter,
                bisections,
            });
        }
        if g > 0.0 {
            lo = lo.max(lambda);
        } else {
            hi = hi.min(lambda);
        }
        let mut next = lambda - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
            bisections += 1;
        }
        if (next - lambda).abs() <= rel_tol * next || hi - lo <= f64::EPSILON * hi {
            return Ok(RateSolution {
                lambda: next,
                branch: RateBranch::Newton,
                iterations: iter,
                bisections,
            });
        }
        lambda = next;
    }
    Err(Error::NoConvergence(format!(
        "no root within {max_iter} iterations (bracket [{lo}, {hi}])"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64) -> RateParams {
        RateParams::new(eta, 70.0, 2).unwrap()
    }

    #[test]
    fn alpha_formula() {
        let p = params(0.02);
        let l = 2f64.ln();
        assert_eq!(p.alpha, 2.0 + 2.0 * l + 70.0 * l * l);
        assert!((p.alpha - 37.018).abs() < 1e-3);
        assert!((p.threshold() + 33.632).abs() < 1e-3);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(RateParams::new(0.02, 70.0, 1).is_err());
        assert!(RateParams::new(0.0, 70.0, 2).is_err());
        assert!(RateParams::new(0.02, -1.0, 2).is_err());
        assert!(params(0.5).check_theorem_mode().is_err());
        assert!(RateParams::new(0.02, 10.0, 2).unwrap().check_theorem_mode().is_err());
        assert!(params(0.02).check_theorem_mode().is_ok());
    }

    #[test]
    fn equal_coordinates_give_linear_lse() {
        let p = params(0.02);
        let c = 123.0;
        for lambda in [1e-4, 0.01, 0.3, 5.0] {
            let d = objective_derivatives(lambda, &[-c, -c], &p).unwrap();
            assert!((d.f1 - (-c + (p.alpha - 1.0) / lambda)).abs() <= 1e-12 * d.f1.abs().max(1.0));
        }
    }

    #[test]
    fn lambda_must_be_positive() {
        let p = params(0.02);
        assert!(matches!(
            objective_derivatives(0.0, &[1.0, 2.0], &p),
            Err(Error::Domain(_))
        ));
        assert!(objective_derivatives(-1.0, &[1.0, 2.0], &p).is_err());
    }

    #[test]
    fn analytic_init_examples() {
        let p = params(1.0);
        let l0 = analytic_init(&[-3000.0, -4000.0], &p).unwrap();
        assert_eq!(l0, (p.alpha - 1.0) / 3000.0);
        assert!((l0 - 0.012_006_0).abs() < 1e-7);
        let a = p.alpha;
        assert_eq!(analytic_init(&[-(a - 1.0), -10.0 * a], &p).unwrap(), 1.0);
        assert_eq!(analytic_init(&[-1.0, -1.0], &p).unwrap(), a - 1.0);
        assert!(matches!(analytic_init(&[0.0, -1.0], &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn threshold_branch_returns_eta_exactly() {
        let s = solve_rate(&[-10.0, -50.0], &params(0.02)).unwrap();
        assert_eq!(s.lambda, 0.02);
        assert_eq!(s.branch, RateBranch::Threshold);
        assert_eq!(solve_rate(&[0.0, 0.0], &params(0.02)).unwrap().lambda, 0.02);
    }

    #[test]
    fn symmetric_regrets_have_closed_form_root() {
        let p = params(1.0);
        let s = solve_rate(&[-3000.0, -3000.0], &p).unwrap();
        let want = (p.alpha - 1.0) / 3000.0;
        assert!(((s.lambda - want) / want).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn non_finite_regret_rejected() {
        assert!(matches!(
            solve_rate(&[f64::NAN, 0.0], &params(0.02)),
            Err(Error::Domain(_))
        ));
        assert!(solve_rate(&[f64::NEG_INFINITY, 0.0], &params(0.02)).is_err());
    }

    #[test]
    fn shortcut_is_disabled_for_large_eta() {
        let p = params(10.0);
        assert!(!p.threshold_shortcut_valid());
        assert!(params(1.0).threshold_shortcut_valid());
        // max r = -10 is above the threshold, but with η = 10 the optimum is interior
        let s = solve_rate(&[-10.0, -50.0], &p).unwrap();
        assert!(s.lambda < 10.0);
        let d = objective_derivatives(s.lambda, &[-10.0, -50.0], &p).unwrap();
        assert!(d.f1.abs() <= 1e-10 * d.f2.abs() * s.lambda);
    }
}
