//! Online learners over the probability simplex.
//!
//! All learners share one pipeline: build a regret vector, pick a rate,
//! play the max-shifted softmax, then fold the corrected reward
//! `u = ν - ⟨ν, x⟩ 1` into the running sum.

use crate::error::{Error, Result};
use crate::numerics::{dot, linf_dist, linf_norm, max_entry, softmax_scaled};
use crate::rate::{solve_rate, RateParams, RateSolution};

/// Learning dynamics selectable for a player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Optimistic MWU with dynamic learning-rate control.
    Dlrc,
    /// Optimistic MWU with the constant rate `η`.
    Omwu,
    /// Plain MWU with the constant rate `η`.
    Mwu,
}

impl Algorithm {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "dlrc" => Ok(Self::Dlrc),
            "omwu" => Ok(Self::Omwu),
            "mwu" => Ok(Self::Mwu),
            _ => Err(Error::InvalidInput(format!(
                "unknown algorithm `{name}` (expected dlrc, omwu or mwu)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Dlrc => "dlrc",
            Self::Omwu => "omwu",
            Self::Mwu => "mwu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerMode {
    Dlrc,
    Omwu,
    Mwu,
    /// Entered permanently once the safeguard fires.
    SafeguardMwu,
}

impl From<Algorithm> for LearnerMode {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Dlrc => Self::Dlrc,
            Algorithm::Omwu => Self::Omwu,
            Algorithm::Mwu => Self::Mwu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// `U^t`, the sum of corrected rewards of completed rounds.
    pub cum: Vec<f64>,
    /// `u^{t-1}`.
    pub last_correction: Vec<f64>,
    pub lambda: f64,
    pub strategy: Vec<f64>,
    /// Completed rounds.
    pub round: usize,
    pub mode: LearnerMode,
}

/// Constants of the utility-variation test that detects non-self-play.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeguardConfig {
    /// Smoothness constant `L` of the game.
    pub smoothness: f64,
    pub players: usize,
}

/// `144 L² n² η + 48 L² n² (α ln t + ln d)`.
pub fn safeguard_threshold(params: &RateParams, cfg: &SafeguardConfig, t: usize) -> f64 {
    let ln2 = cfg.smoothness * cfg.smoothness * (cfg.players * cfg.players) as f64;
    144.0 * ln2 * params.eta + 48.0 * ln2 * (params.alpha * (t.max(1) as f64).ln() + params.log_actions)
}

/// True iff `Σ_{τ<t} ‖ν^{τ+1} - ν^τ‖²_∞` over the first `t` observed
/// utilities exceeds [`safeguard_threshold`].
pub fn safeguard_check(history: &[Vec<f64>], params: &RateParams, cfg: &SafeguardConfig, t: usize) -> bool {
    let t = t.min(history.len());
    let variation: f64 = history[..t].windows(2).map(|w| linf_dist(&w[1], &w[0]).powi(2)).sum();
    variation > safeguard_threshold(params, cfg, t)
}

#[derive(Debug, Clone)]
struct Safeguard {
    cfg: SafeguardConfig,
    variation: f64,
    last_nu: Option<Vec<f64>>,
    switched_at: Option<usize>,
    /// Corrected rewards accumulated since the switch.
    since_switch: Vec<f64>,
}

/// What [`Learner::observe`] noticed about the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Observation {
    /// `‖ν‖_∞ > 1`; the bounds assume bounded utilities.
    pub out_of_range: bool,
    /// The safeguard fired on this round.
    pub switched: bool,
}

/// A single player's learner.
#[derive(Debug, Clone)]
pub struct Learner {
    params: RateParams,
    state: LearnerState,
    safeguard: Option<Safeguard>,
    last_solution: Option<RateSolution>,
    pending: bool,
}

impl Learner {
    pub fn new(algorithm: Algorithm, params: RateParams, actions: usize) -> Self {
        let uniform = vec![1.0 / actions as f64; actions];
        Self {
            params,
            state: LearnerState {
                cum: vec![0.0; actions],
                last_correction: vec![0.0; actions],
                lambda: params.eta,
                strategy: uniform,
                round: 0,
                mode: algorithm.into(),
            },
            safeguard: None,
            last_solution: None,
            pending: false,
        }
    }

    /// Arms the switch to MWU when the observed utilities vary more than
    /// self-play allows.
    pub fn with_safeguard(mut self, cfg: SafeguardConfig) -> Self {
        let d = self.state.cum.len();
        self.safeguard = Some(Safeguard {
            cfg,
            variation: 0.0,
            last_nu: None,
            switched_at: None,
            since_switch: vec![0.0; d],
        });
        self
    }

    pub fn params(&self) -> &RateParams {
        &self.params
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn num_actions(&self) -> usize {
        self.state.cum.len()
    }

    /// Round at which the safeguard fired, if it has.
    pub fn switched_at(&self) -> Option<usize> {
        self.safeguard.as_ref().and_then(|s| s.switched_at)
    }

    /// Solver statistics of the latest dynamic rate, if one was solved.
    pub fn last_solution(&self) -> Option<RateSolution> {
        self.last_solution
    }

    /// Optimistic regret vector `U^t + u^{t-1}`.
    pub fn optimistic_regrets(&self) -> Vec<f64> {
        self.state
            .cum
            .iter()
            .zip(&self.state.last_correction)
            .map(|(a, b)| a + b)
            .collect()
    }

    /// Computes and stores this round's strategy.
    pub fn next_strategy(&mut self) -> Result<&[f64]> {
        let (r, lambda) = match self.state.mode {
            LearnerMode::Dlrc => {
                let r = self.optimistic_regrets();
                let sol = solve_rate(&r, &self.params)?;
                self.last_solution = Some(sol);
                (r, sol.lambda)
            }
            LearnerMode::Omwu => (self.optimistic_regrets(), self.params.eta),
            LearnerMode::Mwu => (self.state.cum.clone(), self.params.eta),
            LearnerMode::SafeguardMwu => {
                let sg = self.safeguard.as_ref().expect("safeguard mode implies safeguard");
                let since = self.state.round + 1 - sg.switched_at.unwrap_or(0);
                let rate = (self.params.log_actions / since.max(1) as f64).sqrt();
                (sg.since_switch.clone(), rate)
            }
        };
        self.state.lambda = lambda;
        self.state.strategy = softmax_scaled(&r, lambda);
        self.pending = true;
        Ok(&self.state.strategy)
    }

    /// Feeds this round's utility vector `ν^t`.
    pub fn observe(&mut self, nu: &[f64]) -> Result<Observation> {
        if !self.pending {
            return Err(Error::Precondition(
                "observe called before next_strategy for this round".into(),
            ));
        }
        if nu.len() != self.num_actions() {
            return Err(Error::InvalidInput(format!(
                "utility vector has length {}, expected {}",
                nu.len(),
                self.num_actions()
            )));
        }
        if nu.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("utility vector must be finite".into()));
        }
        self.pending = false;
        let expected = dot(nu, &self.state.strategy);
        let u: Vec<f64> = nu.iter().map(|v| v - expected).collect();
        for (c, v) in self.state.cum.iter_mut().zip(&u) {
            *c += v;
        }
        self.state.round += 1;
        let t = self.state.round;
        let mut obs = Observation {
            out_of_range: linf_norm(nu) > 1.0,
            switched: false,
        };
        let params = self.params;
        if let Some(sg) = self.safeguard.as_mut() {
            if let Some(prev) = &sg.last_nu {
                sg.variation += linf_dist(nu, prev).powi(2);
            }
            sg.last_nu = Some(nu.to_vec());
            if sg.switched_at.is_some() {
                for (c, v) in sg.since_switch.iter_mut().zip(&u) {
                    *c += v;
                }
            } else if sg.variation > safeguard_threshold(&params, &sg.cfg, t) {
                sg.switched_at = Some(t);
                self.state.mode = LearnerMode::SafeguardMwu;
                obs.switched = true;
            }
        }
        self.state.last_correction = u;
        Ok(obs)
    }
}

/// External regret of a played sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    /// `Reg^T = max_k per_action_cum[k]`.
    pub reg: f64,
    /// `max{0, Reg^T}`.
    pub pos_reg: f64,
    /// `Σ_t (ν^t[k] - ⟨ν^t, x^t⟩)`.
    pub per_action_cum: Vec<f64>,
    /// Best fixed action; lowest index on ties.
    pub best_action: usize,
}

/// Running external-regret accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTracker {
    per_action_cum: Vec<f64>,
}

impl RegretTracker {
    pub fn new(actions: usize) -> Self {
        Self {
            per_action_cum: vec![0.0; actions],
        }
    }

    pub fn record(&mut self, strategy: &[f64], nu: &[f64]) {
        let expected = dot(nu, strategy);
        for (c, v) in self.per_action_cum.iter_mut().zip(nu) {
            *c += v - expected;
        }
    }

    pub fn regret(&self) -> f64 {
        max_entry(&self.per_action_cum)
    }

    pub fn report(&self) -> RegretReport {
        let reg = self.regret();
        RegretReport {
            reg,
            pos_reg: reg.max(0.0),
            per_action_cum: self.per_action_cum.clone(),
            best_action: crate::numerics::argmax(&self.per_action_cum),
        }
    }
}

/// Regret of `strategies[t]` against `utilities[t]`.
pub fn regret_report(strategies: &[Vec<f64>], utilities: &[Vec<f64>]) -> Result<RegretReport> {
    if strategies.len() != utilities.len() || strategies.is_empty() {
        return Err(Error::InvalidInput(format!(
            "histories must be nonempty and of equal length ({} vs {})",
            strategies.len(),
            utilities.len()
        )));
    }
    let d = strategies[0].len();
    let mut tracker = RegretTracker::new(d);
    for (x, nu) in strategies.iter().zip(utilities) {
        if x.len() != d || nu.len() != d {
            return Err(Error::InvalidInput("ragged history".into()));
        }
        tracker.record(x, nu);
    }
    Ok(tracker.report())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64, d: usize) -> RateParams {
        RateParams::new(eta, 70.0, d).unwrap()
    }

    #[test]
    fn first_round_is_uniform_at_eta() {
        for algo in [Algorithm::Dlrc, Algorithm::Omwu, Algorithm::Mwu] {
            let mut l = Learner::new(algo, params(0.02, 3), 3);
            let x = l.next_strategy().unwrap().to_vec();
            assert_eq!(x, vec![1.0 / 3.0; 3]);
            assert_eq!(l.state().lambda, 0.02);
        }
    }

    #[test]
    fn observe_forms_corrected_reward() {
        let mut l = Learner::new(Algorithm::Dlrc, params(0.02, 2), 2);
        l.next_strategy().unwrap();
        l.observe(&[1.0, -1.0]).unwrap();
        assert_eq!(l.state().last_correction, vec![1.0, -1.0]);
        assert_eq!(l.state().cum, vec![1.0, -1.0]);
        assert_eq!(l.state().round, 1);
    }

    #[test]
    fn observe_requires_a_strategy() {
        let mut l = Learner::new(Algorithm::Dlrc, params(0.02, 2), 2);
        assert!(matches!(l.observe(&[0.0, 0.0]), Err(Error::Precondition(_))));
        l.next_strategy().unwrap();
        assert!(l.observe(&[0.0]).is_err());
    }

    #[test]
    fn out_of_range_utility_is_flagged() {
        let mut l = Learner::new(Algorithm::Dlrc, params(0.02, 2), 2);
        l.next_strategy().unwrap();
        assert!(l.observe(&[1.5, 0.0]).unwrap().out_of_range);
        l.next_strategy().unwrap();
        assert!(!l.observe(&[1.0, 0.0]).unwrap().out_of_range);
    }

    #[test]
    fn regret_report_examples() {
        let r = regret_report(&[vec![1.0, 0.0]], &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(r.reg, 0.0);
        let r = regret_report(&[vec![0.0, 1.0]], &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(r.reg, 1.0);
        assert_eq!(r.pos_reg, 1.0);
        let r = regret_report(&[vec![1.0, 0.0]], &[vec![0.0, -1.0]]).unwrap();
        assert_eq!(r.reg, 0.0);
        assert_eq!(r.best_action, 0);
        assert!(regret_report(&[], &[]).is_err());
    }

    #[test]
    fn constant_utilities_never_trip_the_safeguard() {
        let p = params(0.02, 2);
        let cfg = SafeguardConfig {
            smoothness: 1.0,
            players: 2,
        };
        let hist = vec![vec![0.3, -0.7]; 500];
        assert!((1..=500).all(|t| !safeguard_check(&hist, &p, &cfg, t)));
    }

    #[test]
    fn alternating_utilities_trip_the_safeguard() {
        let p = params(0.02, 2);
        let cfg = SafeguardConfig {
            smoothness: 1.0,
            players: 1,
        };
        let hist: Vec<Vec<f64>> = (0..5000)
            .map(|t| if t % 2 == 0 { vec![1.0, -1.0] } else { vec![-1.0, 1.0] })
            .collect();
        // variation 4(t-1) against 144η + 48(α ln t + ln 2)
        let first = (1..=5000).find(|&t| safeguard_check(&hist, &p, &cfg, t)).unwrap();
        let bound = |t: usize| safeguard_threshold(&p, &cfg, t);
        assert!(4.0 * (first - 1) as f64 > bound(first));
        assert!(4.0 * (first - 2) as f64 <= bound(first - 1));
        assert!(first > 100 && first < 5000, "{first}");

        let mut l = Learner::new(Algorithm::Dlrc, p, 2).with_safeguard(cfg);
        for nu in &hist {
            l.next_strategy().unwrap();
            l.observe(nu).unwrap();
        }
        assert_eq!(l.switched_at(), Some(first));
        assert_eq!(l.state().mode, LearnerMode::SafeguardMwu);
    }
}
