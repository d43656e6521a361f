//! 0/1-polyhedral kernels and the kernelized learner.
//!
//! For a polytope `Ω` with vertex set `V ⊆ {0,1}^d` the feature map is
//! `φ(x)[v] = Π_{k: v[k]=1} x[k]` and `K(x1, x2) = ⟨φ(x1), φ(x2)⟩`. Running
//! multiplicative weights over `V` with vertex regrets `R[v] = ⟨μ, v⟩ + σ`
//! only ever needs `K(b, ·)` at 0/1 masks with `b = exp(λ μ)`, which the
//! closed forms below evaluate in `O(d)` or `O(d m)` time.
//!
//! Kernels at masks are evaluated in log space (`ln K(b, mask)` from
//! `ln b = λ μ`). The hypercube kernel is not homogeneous in `b`, so a
//! common max-shift cannot be divided out; log space sidesteps overflow for
//! every variant.

use crate::error::{Error, Result};
use crate::numerics::{dot, log_sum_exp};
use crate::rate::{newton_root, RateBranch, RateParams, RateSolution};

/// A convex polytope with 0/1 vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Polytope {
    /// Probability simplex; vertices are the basis vectors.
    Simplex(usize),
    /// Unit cube `[0,1]^d`; all `2^d` 0/1 vectors.
    Hypercube(usize),
    /// Vectors with exactly `m` ones out of `d`.
    MSet { d: usize, m: usize },
    /// Arbitrary nonempty, duplicate-free vertex list.
    ExplicitVertices { d: usize, vertices: Vec<Vec<bool>> },
}

/// Largest dimension [`Polytope::vertices`] will enumerate.
pub const MAX_ENUMERATION_DIM: usize = 24;

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

impl Polytope {
    pub fn simplex(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("simplex needs d >= 2, got {d}")));
        }
        Ok(Self::Simplex(d))
    }

    pub fn hypercube(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidInput("hypercube needs d >= 1".into()));
        }
        Ok(Self::Hypercube(d))
    }

    pub fn mset(d: usize, m: usize) -> Result<Self> {
        if m == 0 || m >= d {
            return Err(Error::InvalidInput(format!(
                "m-set needs 0 < m < d, got d = {d}, m = {m}"
            )));
        }
        Ok(Self::MSet { d, m })
    }

    /// Validates a vertex list of 0/1 entries.
    pub fn explicit(vertices: Vec<Vec<u8>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::InvalidInput("vertex list is empty".into()));
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::InvalidInput("vertices have dimension 0".into()));
        }
        let mut out: Vec<Vec<bool>> = Vec::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != d {
                return Err(Error::InvalidInput(format!(
                    "vertex {i} has length {}, expected {d}",
                    v.len()
                )));
            }
            if v.iter().any(|&b| b > 1) {
                return Err(Error::InvalidInput(format!("vertex {i} is not a 0/1 vector")));
            }
            let v: Vec<bool> = v.iter().map(|&b| b == 1).collect();
            if out.contains(&v) {
                return Err(Error::InvalidInput(format!("vertex {i} is a duplicate")));
            }
            out.push(v);
        }
        Ok(Self::ExplicitVertices { d, vertices: out })
    }

    /// Builds a polytope from its run-config name.
    pub fn from_spec(name: &str, d: usize, m: Option<usize>) -> Result<Self> {
        match name {
            "simplex" => Self::simplex(d),
            "hypercube" => Self::hypercube(d),
            "mset" => Self::mset(d, m.unwrap_or(d / 2)),
            other => Err(Error::UnsupportedPolytope(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Simplex(d) | Self::Hypercube(d) => *d,
            Self::MSet { d, .. } | Self::ExplicitVertices { d, .. } => *d,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Simplex(_) => "simplex",
            Self::Hypercube(_) => "hypercube",
            Self::MSet { .. } => "mset",
            Self::ExplicitVertices { .. } => "explicit",
        }
    }

    /// `ln |V|`.
    pub fn log_vertex_count(&self) -> f64 {
        match self {
            Self::Simplex(d) => (*d as f64).ln(),
            Self::Hypercube(d) => *d as f64 * 2f64.ln(),
            Self::MSet { d, m } => ln_binomial(*d, *m),
            Self::ExplicitVertices { vertices, .. } => (vertices.len() as f64).ln(),
        }
    }

    /// All vertices, for dimensions up to [`MAX_ENUMERATION_DIM`].
    pub fn vertices(&self) -> Result<Vec<Vec<bool>>> {
        let d = self.dim();
        let by_mask = |keep: &dyn Fn(u32) -> bool| -> Result<Vec<Vec<bool>>> {
            if d > MAX_ENUMERATION_DIM {
                return Err(Error::InvalidInput(format!(
                    "refusing to enumerate vertices in dimension {d}"
                )));
            }
            Ok((0u32..1 << d)
                .filter(|&mask| keep(mask))
                .map(|mask| (0..d).map(|k| mask >> k & 1 == 1).collect())
                .collect())
        };
        match self {
            Self::Simplex(d) => Ok((0..*d).map(|i| (0..*d).map(|k| k == i).collect()).collect()),
            Self::Hypercube(_) => by_mask(&|_| true),
            Self::MSet { m, .. } => by_mask(&|mask| mask.count_ones() as usize == *m),
            Self::ExplicitVertices { vertices, .. } => Ok(vertices.clone()),
        }
    }

    /// `max_{v ∈ V} ⟨μ, v⟩`.
    pub fn max_linear(&self, mu: &[f64]) -> f64 {
        match self {
            Self::Simplex(_) => crate::numerics::max_entry(mu),
            Self::Hypercube(_) => mu.iter().map(|v| v.max(0.0)).sum(),
            Self::MSet { m, .. } => {
                let mut sorted = mu.to_vec();
                sorted.sort_by(|a, b| b.total_cmp(a));
                sorted[..*m].iter().sum()
            }
            Self::ExplicitVertices { vertices, .. } => vertices
                .iter()
                .map(|v| v.iter().zip(mu).filter(|(b, _)| **b).map(|(_, m)| m).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Membership in the convex hull, up to `tol` (box constraint only for
    /// explicit vertex lists).
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || x.iter().any(|&v| !(v >= -tol && v <= 1.0 + tol)) {
            return false;
        }
        let s: f64 = x.iter().sum();
        match self {
            Self::Simplex(_) => (s - 1.0).abs() <= tol,
            Self::MSet { m, .. } => (s - *m as f64).abs() <= tol,
            Self::Hypercube(_) | Self::ExplicitVertices { .. } => true,
        }
    }

    /// `ln K(b, mask)` from `ln b`, where `mask[k] = false` zeroes `b[k]`.
    pub fn log_kernel_masked(&self, log_b: &[f64], mask: &[bool]) -> f64 {
        match self {
            Self::Simplex(_) => {
                let terms: Vec<f64> = log_b
                    .iter()
                    .zip(mask)
                    .filter(|(_, &keep)| keep)
                    .map(|(a, _)| *a)
                    .collect();
                log_sum_exp(&terms)
            }
            Self::Hypercube(_) => log_b
                .iter()
                .zip(mask)
                .filter(|(_, &keep)| keep)
                .map(|(a, _)| logaddexp(0.0, *a))
                .sum(),
            Self::MSet { m, .. } => {
                // elementary symmetric polynomial e_m, log-space DP
                let mut dp = vec![f64::NEG_INFINITY; m + 1];
                dp[0] = 0.0;
                for (a, _) in log_b.iter().zip(mask).filter(|(_, &keep)| keep) {
                    for j in (1..=*m).rev() {
                        dp[j] = logaddexp(dp[j], dp[j - 1] + a);
                    }
                }
                dp[*m]
            }
            Self::ExplicitVertices { vertices, .. } => {
                let terms: Vec<f64> = vertices
                    .iter()
                    .filter(|v| v.iter().zip(mask).all(|(&on, &keep)| !on || keep))
                    .map(|v| v.iter().zip(log_b).filter(|(on, _)| **on).map(|(_, a)| a).sum())
                    .collect();
                log_sum_exp(&terms)
            }
        }
    }
}

/// `K(x1, x2) = Σ_{v ∈ V} Π_{k: v[k]=1} x1[k] x2[k]` by the closed form of
/// each polytope.
pub fn kernel(polytope: &Polytope, x1: &[f64], x2: &[f64]) -> Result<f64> {
    let d = polytope.dim();
    if x1.len() != d || x2.len() != d {
        return Err(Error::InvalidInput(format!(
            "kernel arguments must have length {d}, got {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    let prod: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a * b).collect();
    Ok(match polytope {
        Polytope::Simplex(_) => prod.iter().sum(),
        Polytope::Hypercube(_) => prod.iter().map(|p| 1.0 + p).product(),
        Polytope::MSet { m, .. } => {
            let mut e = vec![0.0; m + 1];
            e[0] = 1.0;
            for p in &prod {
                for j in (1..=*m).rev() {
                    e[j] += e[j - 1] * p;
                }
            }
            e[*m]
        }
        Polytope::ExplicitVertices { vertices, .. } => vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&prod)
                    .filter(|(on, _)| **on)
                    .map(|(_, p)| p)
                    .product::<f64>()
            })
            .sum(),
    })
}

/// Counts kernel evaluations made through it.
#[derive(Debug)]
pub struct KernelEvaluator<'a> {
    polytope: &'a Polytope,
    calls: usize,
}

impl<'a> KernelEvaluator<'a> {
    pub fn new(polytope: &'a Polytope) -> Self {
        Self { polytope, calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    fn log_k(&mut self, log_b: &[f64], mask: &[bool]) -> f64 {
        self.calls += 1;
        self.polytope.log_kernel_masked(log_b, mask)
    }

    /// `E[v]` under `χ[v] ∝ Π_{k ∈ v} b[k]`; `d + 1` kernel calls.
    pub fn first_moment(&mut self, log_b: &[f64]) -> Vec<f64> {
        let d = log_b.len();
        let mut mask = vec![true; d];
        let total = self.log_k(log_b, &mask);
        (0..d)
            .map(|i| {
                mask[i] = false;
                let ratio = (self.log_k(log_b, &mask) - total).exp();
                mask[i] = true;
                (1.0 - ratio).clamp(0.0, 1.0)
            })
            .collect()
    }

    /// `(E[v], E[v vᵀ])` by inclusion-exclusion over `K(b, ē_i)`,
    /// `K(b, ē_ij)`; `d² + 1` kernel calls (every ordered pair `i != j`).
    pub fn second_moment(&mut self, log_b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = log_b.len();
        let mut mask = vec![true; d];
        let total = self.log_k(log_b, &mask);
        let mut ratio = vec![0.0; d];
        for i in 0..d {
            mask[i] = false;
            ratio[i] = (self.log_k(log_b, &mask) - total).exp();
            mask[i] = true;
        }
        let mut second = vec![0.0; d * d];
        for i in 0..d {
            second[i * d + i] = 1.0 - ratio[i];
            for j in 0..d {
                if i == j {
                    continue;
                }
                mask[i] = false;
                mask[j] = false;
                let both = (self.log_k(log_b, &mask) - total).exp();
                mask[i] = true;
                mask[j] = true;
                second[i * d + j] = 1.0 - ratio[i] - ratio[j] + both;
            }
        }
        let first = ratio.iter().map(|r| (1.0 - r).clamp(0.0, 1.0)).collect();
        (first, second)
    }

    /// `f'` and `f''` of the rate objective over the vertex set, with
    /// `R[v] = ⟨μ, v⟩ + σ`:
    ///
    /// ```text
    /// f'  = μᵀE[v] + σ + (α-1)/λ
    /// f'' = μᵀE[vvᵀ]μ - (μᵀE[v])² - (α-1)/λ²
    /// ```
    pub fn rate_derivatives(&mut self, lambda: f64, mu: &[f64], sigma: f64, alpha: f64) -> (f64, f64) {
        let log_b: Vec<f64> = mu.iter().map(|m| lambda * m).collect();
        let (first, second) = self.second_moment(&log_b);
        let d = mu.len();
        let mean = dot(mu, &first);
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += mu[i] * second[i * d + j] * mu[j];
            }
        }
        let a1 = alpha - 1.0;
        (mean + sigma + a1 / lambda, quad - mean * mean - a1 / (lambda * lambda))
    }
}

fn positive_log(b: &[f64]) -> Result<Vec<f64>> {
    if b.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("moment weights b must be positive".into()));
    }
    Ok(b.iter().map(|v| v.ln()).collect())
}

/// `E[v]` under `χ[v] ∝ Π_{k ∈ v} b[k]`.
pub fn moment1(polytope: &Polytope, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != polytope.dim() {
        return Err(Error::InvalidInput("weight vector has the wrong length".into()));
    }
    Ok(KernelEvaluator::new(polytope).first_moment(&positive_log(b)?))
}

/// `E[v vᵀ]`, row-major `d × d`.
pub fn moment2(polytope: &Polytope, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != polytope.dim() {
        return Err(Error::InvalidInput("weight vector has the wrong length".into()));
    }
    Ok(KernelEvaluator::new(polytope).second_moment(&positive_log(b)?).1)
}

/// `(f', f'')` at `λ` for vertex regrets `⟨μ, v⟩ + σ`.
pub fn kernel_rate_derivatives(
    lambda: f64,
    mu: &[f64],
    sigma: f64,
    polytope: &Polytope,
    params: &RateParams,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if mu.len() != polytope.dim() {
        return Err(Error::InvalidInput("utility vector has the wrong length".into()));
    }
    Ok(KernelEvaluator::new(polytope).rate_derivatives(lambda, mu, sigma, params.alpha))
}

/// Per-round state of the kernelized learner.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelLearnerState {
    /// `Σ_{τ<t} ν^τ`.
    pub mu: Vec<f64>,
    /// `-Σ_{τ<t} ⟨ν^τ, x^τ⟩`.
    pub sigma: f64,
    pub lambda_prev: f64,
    pub x: Vec<f64>,
    pub nu_prev: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub round: usize,
}

/// Cost of one kernelized step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelStepStats {
    pub kernel_calls: usize,
    /// Evaluations of `(f', f'')`, each costing `d² + 1` kernel calls.
    pub derivative_evals: usize,
    pub branch: RateBranch,
}

/// KDLRC-OMWU on a 0/1 polytope.
#[derive(Debug, Clone)]
pub struct KernelLearner {
    polytope: Polytope,
    params: RateParams,
    state: KernelLearnerState,
    pending: bool,
}

impl KernelLearner {
    /// `α` and the threshold use `|V|` as the action count.
    pub fn new(polytope: Polytope, eta: f64, beta: f64) -> Result<Self> {
        let params = RateParams::from_log_actions(eta, beta, polytope.log_vertex_count())?;
        let d = polytope.dim();
        Ok(Self {
            polytope,
            params,
            state: KernelLearnerState {
                mu: vec![0.0; d],
                sigma: 0.0,
                lambda_prev: eta,
                x: vec![0.0; d],
                nu_prev: vec![0.0; d],
                x_prev: vec![0.0; d],
                round: 0,
            },
            pending: false,
        })
    }

    pub fn params(&self) -> &RateParams {
        &self.params
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn state(&self) -> &KernelLearnerState {
        &self.state
    }

    /// Optimistic `(μ, σ)` for the coming round.
    pub fn optimistic(&self) -> (Vec<f64>, f64) {
        let s = &self.state;
        let mu = s.mu.iter().zip(&s.nu_prev).map(|(a, b)| a + b).collect();
        (mu, s.sigma - dot(&s.nu_prev, &s.x_prev))
    }

    fn solve(&self, eval: &mut KernelEvaluator<'_>, mu: &[f64], sigma: f64) -> Result<(RateSolution, usize)> {
        let p = &self.params;
        let eta = p.eta;
        if self.polytope.max_linear(mu) + sigma >= p.threshold() && p.threshold_shortcut_valid() {
            let sol = RateSolution {
                lambda: eta,
                branch: RateBranch::Threshold,
                iterations: 0,
                bisections: 0,
            };
            return Ok((sol, 0));
        }
        let mut evals = 1;
        if eval.rate_derivatives(eta, mu, sigma, p.alpha).0 >= 0.0 {
            let sol = RateSolution {
                lambda: eta,
                branch: RateBranch::Capped,
                iterations: 0,
                bisections: 0,
            };
            return Ok((sol, evals));
        }
        let start = self.state.lambda_prev.min(eta);
        let newton = newton_root(
            |lambda| {
                evals += 1;
                eval.rate_derivatives(lambda, mu, sigma, p.alpha)
            },
            start,
            0.0,
            eta,
            p.rel_tol,
            p.max_iter,
        );
        match newton {
            Ok(sol) => Ok((sol, evals)),
            Err(Error::NoConvergence(_)) => {
                let mut evals = evals;
                let sol = self.bisect(eval, mu, sigma, &mut evals);
                Ok((sol, evals))
            }
            Err(e) => Err(e),
        }
    }

    /// Geometric bisection on `f'` over `(0, η)`.
    fn bisect(&self, eval: &mut KernelEvaluator<'_>, mu: &[f64], sigma: f64, evals: &mut usize) -> RateSolution {
        let p = &self.params;
        let mut hi = p.eta;
        let mut lo = hi;
        let mut f1 = |lambda: f64, evals: &mut usize| {
            *evals += 1;
            eval.rate_derivatives(lambda, mu, sigma, p.alpha).0
        };
        while f1(lo, evals) < 0.0 {
            hi = lo;
            lo *= 0.5;
        }
        let mut steps = 0;
        while hi - lo > p.rel_tol * lo && steps < 200 {
            let mid = (lo * hi).sqrt();
            if f1(mid, evals) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
        RateSolution {
            lambda: 0.5 * (lo + hi),
            branch: RateBranch::Newton,
            iterations: steps,
            bisections: steps,
        }
    }

    /// Solves the rate, then plays `x[r] = 1 - K(b, ē_r)/K(b, 1)` with
    /// `b = exp(λ μ)`.
    pub fn next_point(&mut self) -> Result<(&[f64], KernelStepStats)> {
        let (mu, sigma) = self.optimistic();
        let polytope = self.polytope.clone();
        let mut eval = KernelEvaluator::new(&polytope);
        let (sol, derivative_evals) = self.solve(&mut eval, &mu, sigma)?;
        let log_b: Vec<f64> = mu.iter().map(|m| sol.lambda * m).collect();
        let x = eval.first_moment(&log_b);
        self.state.x = x;
        self.state.lambda_prev = sol.lambda;
        self.pending = true;
        Ok((
            &self.state.x,
            KernelStepStats {
                kernel_calls: eval.calls(),
                derivative_evals,
                branch: sol.branch,
            },
        ))
    }

    /// Rate used for the latest point.
    pub fn lambda(&self) -> f64 {
        self.state.lambda_prev
    }

    pub fn observe(&mut self, nu: &[f64]) -> Result<()> {
        if !self.pending {
            return Err(Error::Precondition(
                "observe called before next_point for this round".into(),
            ));
        }
        if nu.len() != self.polytope.dim() || nu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "utility vector must be finite with length {}",
                self.polytope.dim()
            )));
        }
        self.pending = false;
        let s = &mut self.state;
        for (m, v) in s.mu.iter_mut().zip(nu) {
            *m += v;
        }
        s.sigma -= dot(nu, &s.x);
        s.nu_prev = nu.to_vec();
        s.x_prev = s.x.clone();
        s.round += 1;
        Ok(())
    }

    /// One full round: play, then observe `nu`.
    pub fn step(&mut self, nu: &[f64]) -> Result<(Vec<f64>, KernelStepStats)> {
        let (x, stats) = self.next_point()?;
        let x = x.to_vec();
        self.observe(nu)?;
        Ok((x, stats))
    }
}

/// Deterministic demo stream: coordinate `(t / 8) mod d` pays `amplitude`,
/// the others between `-0.5 amplitude` and `-0.3 amplitude`.
pub fn scripted_utility(d: usize, t: usize, amplitude: f64) -> Vec<f64> {
    let hot = (t / 8) % d;
    (0..d)
        .map(|k| {
            if k == hot {
                amplitude
            } else {
                -amplitude * (0.3 + 0.1 * ((t + k) % 3) as f64)
            }
        })
        .collect()
}

/// Outcome of [`kernel_demo`].
#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub rounds: usize,
    pub kernel_calls: usize,
    pub derivative_evals: usize,
    pub newton_rounds: usize,
    /// Every round used exactly `(d+1) + (d²+1)·evals` kernel calls.
    pub budget_ok: bool,
    /// `"dlrc"` on the simplex, `"explicit"` for hypercube and m-set.
    pub reference: Option<&'static str>,
    /// Largest per-coordinate gap to the reference.
    pub max_deviation: Option<f64>,
}

/// Runs KDLRC-OMWU on [`scripted_utility`] and diffs it against a reference
/// learner where one exists.
pub fn kernel_demo(polytope: &Polytope, rounds: usize, amplitude: f64, eta: f64, beta: f64) -> Result<DemoReport> {
    if rounds == 0 {
        return Err(Error::InvalidInput("number of rounds T must be at least 1".into()));
    }
    let d = polytope.dim();
    let mut learner = KernelLearner::new(polytope.clone(), eta, beta)?;
    enum Reference {
        Dlrc(crate::learner::Learner),
        Explicit(KernelLearner),
    }
    let mut reference = match polytope {
        Polytope::Simplex(_) => Some(Reference::Dlrc(crate::learner::Learner::new(
            crate::learner::Algorithm::Dlrc,
            RateParams::new(eta, beta, d)?,
            d,
        ))),
        Polytope::Hypercube(_) | Polytope::MSet { .. } => {
            let verts = polytope
                .vertices()?
                .into_iter()
                .map(|v| v.into_iter().map(u8::from).collect())
                .collect();
            Some(Reference::Explicit(KernelLearner::new(
                Polytope::explicit(verts)?,
                eta,
                beta,
            )?))
        }
        Polytope::ExplicitVertices { .. } => None,
    };
    let mut report = DemoReport {
        rounds,
        kernel_calls: 0,
        derivative_evals: 0,
        newton_rounds: 0,
        budget_ok: true,
        reference: reference.as_ref().map(|r| match r {
            Reference::Dlrc(_) => "dlrc",
            Reference::Explicit(_) => "explicit",
        }),
        max_deviation: reference.as_ref().map(|_| 0.0),
    };
    for t in 1..=rounds {
        let nu = scripted_utility(d, t, amplitude);
        let (x, stats) = learner.step(&nu)?;
        report.kernel_calls += stats.kernel_calls;
        report.derivative_evals += stats.derivative_evals;
        report.newton_rounds += usize::from(stats.branch == RateBranch::Newton);
        report.budget_ok &= stats.kernel_calls == (d + 1) + (d * d + 1) * stats.derivative_evals;
        let other = match reference.as_mut() {
            Some(Reference::Dlrc(l)) => {
                let x = l.next_strategy()?.to_vec();
                l.observe(&nu)?;
                Some(x)
            }
            Some(Reference::Explicit(l)) => Some(l.step(&nu)?.0),
            None => None,
        };
        if let (Some(o), Some(dev)) = (other, report.max_deviation.as_mut()) {
            for (a, b) in x.iter().zip(&o) {
                *dev = dev.max((a - b).abs());
            }
        }
    }
    Ok(report)
}
