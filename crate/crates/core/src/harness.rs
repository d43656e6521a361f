//! Self-play and adversarial runs with online checks of the regret,
//! RVU and path-length bounds.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::learner::{Algorithm, Learner, RegretTracker, SafeguardConfig};
use crate::numerics::{argmin_entry, dot, l1_dist, linf_dist};
use crate::rate::{default_eta, RateParams, DEFAULT_BETA};
use crate::rng::seeded_rng;

/// Environment variable capping the number of worker threads for cells.
pub const THREADS_ENV: &str = "CAUTIOUS_THREADS";

/// Largest joint action space for which the empirical joint distribution is
/// tracked.
pub const MAX_TRACKED_JOINT: usize = 1 << 16;

/// Learner settings shared by all players of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayConfig {
    pub algorithm: Algorithm,
    /// Defaults to `min{1/50, 1/(12√2 L n)}`.
    pub eta: Option<f64>,
    pub beta: f64,
    /// Smoothness `L` of the utilities.
    pub smoothness: f64,
    pub safeguard: bool,
}

impl Default for PlayConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Dlrc,
            eta: None,
            beta: DEFAULT_BETA,
            smoothness: 1.0,
            safeguard: false,
        }
    }
}

impl PlayConfig {
    pub fn eta_for(&self, players: usize) -> f64 {
        self.eta.unwrap_or_else(|| default_eta(self.smoothness, players))
    }
}

/// Per-round columns for one player. Index `t - 1` holds round `t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlayerSeries {
    /// `Reg^t` after round `t`.
    pub regret: Vec<f64>,
    pub pos_regret: Vec<f64>,
    /// Rate used on round `t`.
    pub lambda: Vec<f64>,
    /// `‖x^{t+1} - x^t‖₁²`; zero on the final round.
    pub path_len_sq: Vec<f64>,
    /// `‖ν^{t+1} - ν^t‖²_∞`; zero on the final round.
    pub util_var_sq: Vec<f64>,
    /// `⟨ν^t, x^t⟩`.
    pub exp_util: Vec<f64>,
}

impl PlayerSeries {
    fn with_capacity(t: usize) -> Self {
        Self {
            regret: Vec::with_capacity(t),
            pos_regret: Vec::with_capacity(t),
            lambda: Vec::with_capacity(t),
            path_len_sq: Vec::with_capacity(t),
            util_var_sq: Vec::with_capacity(t),
            exp_util: Vec::with_capacity(t),
        }
    }

    /// `Σ_{t<T'} path_len_sq`, the path length up to checkpoint `T'`.
    pub fn path_length(&self, upto: usize) -> f64 {
        self.path_len_sq[..upto.saturating_sub(1)].iter().sum()
    }

    pub fn utility_variation(&self, upto: usize) -> f64 {
        self.util_var_sq[..upto.saturating_sub(1)].iter().sum()
    }
}

/// State captured at a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: usize,
    /// `x_i^t` for each player.
    pub strategies: Vec<Vec<f64>>,
    /// Exact deviation gap of the empirical joint distribution, if tracked.
    pub joint_gap: Option<f64>,
}

type Rows2 = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Everything recorded by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub rounds: usize,
    pub seed: u64,
    pub actions: Vec<usize>,
    pub params: Vec<RateParams>,
    pub players: Vec<PlayerSeries>,
    pub snapshots: Vec<Snapshot>,
    /// Round at which each player's safeguard fired.
    pub switched_at: Vec<Option<usize>>,
}

/// `{10, 100, …} ∩ [1, T]` plus `T` itself.
pub fn checkpoints(t: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 10;
    while c < t {
        out.push(c);
        c = c.saturating_mul(10);
    }
    if t >= 1 {
        out.push(t);
    }
    out
}

impl MetricsLog {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn checkpoints(&self) -> Vec<usize> {
        checkpoints(self.rounds)
    }

    pub fn regret_at(&self, player: usize, t: usize) -> f64 {
        self.players[player].regret[t - 1]
    }

    pub fn max_regret_at(&self, t: usize) -> f64 {
        (0..self.num_players())
            .map(|i| self.regret_at(i, t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_regrets(&self) -> Vec<f64> {
        self.players.iter().map(|p| p.regret[self.rounds - 1]).collect()
    }

    pub fn any_switch(&self) -> bool {
        self.switched_at.iter().any(Option::is_some)
    }

    /// Writes the metrics CSV: every `every`-th round plus the final one,
    /// or only checkpoints when `every` is `None`.
    pub fn write_csv<W: Write>(&self, out: W, every: Option<usize>) -> Result<()> {
        let rounds: Vec<usize> = match every {
            None => self.checkpoints(),
            Some(0) => return Err(Error::InvalidInput("log-every must be positive".into())),
            Some(k) => (1..=self.rounds).filter(|t| t % k == 0 || *t == self.rounds).collect(),
        };
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record([
            "t",
            "player",
            "regret",
            "pos_regret",
            "lambda",
            "path_len_sq",
            "util_var_sq",
            "exp_util",
        ])
        .map_err(csv_err)?;
        for t in rounds {
            for (i, p) in self.players.iter().enumerate() {
                let k = t - 1;
                w.write_record([
                    t.to_string(),
                    (i + 1).to_string(),
                    p.regret[k].to_string(),
                    p.pos_regret[k].to_string(),
                    p.lambda[k].to_string(),
                    p.path_len_sq[k].to_string(),
                    p.util_var_sq[k].to_string(),
                    p.exp_util[k].to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Accumulates the empirical distribution of product profiles.
struct JointTracker {
    mass: Vec<f64>,
    scratch: Vec<f64>,
}

impl JointTracker {
    fn new(size: usize) -> Self {
        Self {
            mass: vec![0.0; size],
            scratch: vec![0.0; size],
        }
    }

    /// Adds `⊗_i x_i` (player 1 slowest).
    fn add(&mut self, rows: &[Vec<f64>]) {
        let mut len = 1;
        self.scratch[0] = 1.0;
        for row in rows {
            let d = row.len();
            for a in (0..len).rev() {
                let w = self.scratch[a];
                for (k, p) in row.iter().enumerate() {
                    self.scratch[a * d + k] = w * p;
                }
            }
            len *= d;
        }
        for (m, s) in self.mass.iter_mut().zip(&self.scratch) {
            *m += s;
        }
    }
}

/// `max_i max_{a'} E_{s∼D}[u_i(a', s_{-i}) - u_i(s)]` for the empirical joint
/// distribution `mass / total`.
pub fn joint_deviation_gap(game: &NormalFormGame, mass: &[f64], total: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..game.num_players() {
        let payoffs = game.payoffs(i);
        let d = game.num_actions(i);
        let stride: usize = game.actions()[i + 1..].iter().product();
        let mut base = 0.0;
        let mut dev = vec![0.0; d];
        for (s, m) in mass.iter().enumerate() {
            if *m == 0.0 {
                continue;
            }
            base += m * payoffs[s];
            let own = game.action_of(s, i);
            let rest = s - own * stride;
            for (a, v) in dev.iter_mut().enumerate() {
                *v += m * payoffs[rest + a * stride];
            }
        }
        for v in dev {
            best = best.max((v - base) / total);
        }
    }
    best
}

fn build_learners(actions: &[usize], cfg: &PlayConfig, players: usize) -> Result<(Vec<Learner>, Vec<RateParams>)> {
    let eta = cfg.eta_for(players);
    let mut learners = Vec::with_capacity(actions.len());
    let mut params = Vec::with_capacity(actions.len());
    for &d in actions {
        let p = RateParams::new(eta, cfg.beta, d)?;
        let mut l = Learner::new(cfg.algorithm, p, d);
        if cfg.safeguard {
            l = l.with_safeguard(SafeguardConfig {
                smoothness: cfg.smoothness,
                players,
            });
        }
        learners.push(l);
        params.push(p);
    }
    Ok((learners, params))
}

/// Every player runs `cfg.algorithm` and receives its gradient utility at
/// the joint mixed profile each round.
pub fn self_play(game: &NormalFormGame, cfg: &PlayConfig, rounds: usize, seed: u64) -> Result<MetricsLog> {
    if rounds == 0 {
        return Err(Error::InvalidInput("number of rounds T must be at least 1".into()));
    }
    let n = game.num_players();
    let (mut learners, params) = build_learners(game.actions(), cfg, n)?;
    let mut series: Vec<PlayerSeries> = (0..n).map(|_| PlayerSeries::with_capacity(rounds)).collect();
    let mut trackers: Vec<RegretTracker> = game.actions().iter().map(|&d| RegretTracker::new(d)).collect();
    let mut joint = (game.joint_size() <= MAX_TRACKED_JOINT).then(|| JointTracker::new(game.joint_size()));
    let marks = checkpoints(rounds);
    let mut snapshots = Vec::with_capacity(marks.len());
    // (strategies, utilities) of the previous round
    let mut prev: Option<Rows2> = None;

    for t in 1..=rounds {
        let mut rows = Vec::with_capacity(n);
        for l in learners.iter_mut() {
            rows.push(l.next_strategy()?.to_vec());
        }
        let grads = game.all_gradients(&rows);
        if let Some((px, pnu)) = &prev {
            for i in 0..n {
                let s = &mut series[i];
                s.path_len_sq.push(l1_dist(&rows[i], &px[i]).powi(2));
                s.util_var_sq.push(linf_dist(&grads[i], &pnu[i]).powi(2));
            }
        }
        for i in 0..n {
            learners[i].observe(&grads[i])?;
            trackers[i].record(&rows[i], &grads[i]);
            let reg = trackers[i].regret();
            let s = &mut series[i];
            s.regret.push(reg);
            s.pos_regret.push(reg.max(0.0));
            s.lambda.push(learners[i].state().lambda);
            s.exp_util.push(dot(&grads[i], &rows[i]));
        }
        if let Some(j) = joint.as_mut() {
            j.add(&rows);
        }
        if marks.contains(&t) {
            snapshots.push(Snapshot {
                t,
                strategies: rows.clone(),
                joint_gap: joint.as_ref().map(|j| joint_deviation_gap(game, &j.mass, t as f64)),
            });
        }
        prev = Some((rows, grads));
    }
    for s in series.iter_mut() {
        s.path_len_sq.push(0.0);
        s.util_var_sq.push(0.0);
    }
    Ok(MetricsLog {
        rounds,
        seed,
        actions: game.actions().to_vec(),
        params,
        switched_at: learners.iter().map(Learner::switched_at).collect(),
        players: series,
        snapshots,
    })
}

/// One side-by-side evaluation of a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// `None` for bounds over all players.
    pub player: Option<usize>,
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheck {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn passed(&self) -> bool {
        self.lhs <= self.rhs
    }
}

fn log_term(p: &RateParams, t: usize) -> f64 {
    p.alpha * (t as f64).ln() + p.log_actions
}

/// Nonnegative RVU bound per player at every checkpoint:
///
/// ```text
/// max{0, Reg^T} ≤ 3 + (α ln T + ln d)/η + 6η Σ_{t<T} ‖ν^{t+1}-ν^t‖²_∞
///                   - (1/24η) Σ_{t<T} ‖x^{t+1}-x^t‖₁²
/// ```
pub fn check_rvu_bound(log: &MetricsLog) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    for t in log.checkpoints() {
        for (i, (s, p)) in log.players.iter().zip(&log.params).enumerate() {
            let eta = p.eta;
            let rhs = 3.0 + log_term(p, t) / eta + 6.0 * eta * s.utility_variation(t) - s.path_length(t) / (24.0 * eta);
            out.push(BoundCheck {
                player: Some(i),
                t,
                lhs: s.pos_regret[t - 1],
                rhs,
            });
        }
    }
    out
}

/// Total path length `Σ_i Σ_{t<T} ‖x_i^{t+1}-x_i^t‖₁² ≤ 144nη + 48n(α ln T + ln d)`
/// at every checkpoint, with the largest per-player log term.
pub fn check_path_length(log: &MetricsLog) -> Vec<BoundCheck> {
    let n = log.num_players() as f64;
    log.checkpoints()
        .into_iter()
        .map(|t| {
            let eta = log.params.iter().map(|p| p.eta).fold(0.0, f64::max);
            let term = log.params.iter().map(|p| log_term(p, t)).fold(0.0, f64::max);
            BoundCheck {
                player: None,
                t,
                lhs: log.players.iter().map(|s| s.path_length(t)).sum(),
                rhs: 144.0 * n * eta + 48.0 * n * term,
            }
        })
        .collect()
}

/// `6 + max{50 + 12√2 L n, 24√2 L n}`-scaled log term.
pub fn regret_ceiling(params: &RateParams, smoothness: f64, players: usize, t: usize) -> f64 {
    let ln = smoothness * players as f64;
    let c = (50.0 + 12.0 * 2f64.sqrt() * ln).max(24.0 * 2f64.sqrt() * ln);
    6.0 + c * log_term(params, t)
}

/// Per-player regret ceiling at every checkpoint.
pub fn check_regret_ceiling(log: &MetricsLog, smoothness: f64) -> Vec<BoundCheck> {
    let n = log.num_players();
    let mut out = Vec::new();
    for t in log.checkpoints() {
        for (i, p) in log.params.iter().enumerate() {
            out.push(BoundCheck {
                player: Some(i),
                t,
                lhs: log.regret_at(i, t),
                rhs: regret_ceiling(p, smoothness, n, t),
            });
        }
    }
    out
}

/// Tolerance for the agreement of the two gap computations.
pub const CCE_AGREEMENT_TOL: f64 = 1e-10;

/// `max_i Reg_i^t / t` at a snapshot, cross-checked against the exact
/// deviation gap of the empirical joint distribution.
pub fn cce_gap_at(log: &MetricsLog, t: usize) -> Result<f64> {
    if t == 0 || t > log.rounds {
        return Err(Error::InvalidInput(format!("round {t} outside 1..={}", log.rounds)));
    }
    let gap = log.max_regret_at(t) / t as f64;
    if let Some(exact) = log.snapshots.iter().find(|s| s.t == t).and_then(|s| s.joint_gap) {
        if (exact - gap).abs() > CCE_AGREEMENT_TOL {
            return Err(Error::Precondition(format!(
                "regret gap {gap} and joint deviation gap {exact} disagree at t = {t}"
            )));
        }
    }
    Ok(gap)
}

/// CCE gap of the whole run.
pub fn cce_gap(log: &MetricsLog) -> Result<f64> {
    cce_gap_at(log, log.rounds)
}

/// Utility streams for a single learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    /// `ν^t[k] = (-1)^{k+t}`.
    AlternatingExtremes,
    /// `+1` on the learner's least likely action, `-1` elsewhere.
    BestResponse,
    /// I.i.d. uniform on `[-1, 1]^d` from a seed.
    FixedRandom { seed: u64 },
    /// The same vector every round, `ν[k] = 1 - 2k/(d-1)`.
    Constant,
}

impl Adversary {
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        match name {
            "alternating" => Ok(Self::AlternatingExtremes),
            "best-response" => Ok(Self::BestResponse),
            "random" => Ok(Self::FixedRandom { seed }),
            "constant" => Ok(Self::Constant),
            _ => Err(Error::InvalidInput(format!(
                "unknown adversary `{name}` (expected alternating, best-response, random or constant)"
            ))),
        }
    }
}

/// Single learner facing `adversary`; logged as player 0. The safeguard is
/// armed as for a member of a `players`-player game.
pub fn adversarial_run(
    cfg: &PlayConfig,
    players: usize,
    actions: usize,
    adversary: Adversary,
    rounds: usize,
) -> Result<MetricsLog> {
    if rounds == 0 {
        return Err(Error::InvalidInput("number of rounds T must be at least 1".into()));
    }
    let cfg = PlayConfig {
        safeguard: true,
        ..*cfg
    };
    let (mut learners, params) = build_learners(&[actions], &cfg, players)?;
    let learner = &mut learners[0];
    let mut rng = match adversary {
        Adversary::FixedRandom { seed } => Some(seeded_rng(seed)),
        _ => None,
    };
    let mut s = PlayerSeries::with_capacity(rounds);
    let mut tracker = RegretTracker::new(actions);
    let marks = checkpoints(rounds);
    let mut snapshots = Vec::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for t in 1..=rounds {
        let x = learner.next_strategy()?.to_vec();
        let nu: Vec<f64> = match adversary {
            Adversary::AlternatingExtremes => (0..actions)
                .map(|k| if (k + t) % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
            Adversary::BestResponse => {
                let low = argmin_entry(&x);
                (0..actions).map(|k| if k == low { 1.0 } else { -1.0 }).collect()
            }
            Adversary::FixedRandom { .. } => {
                let rng = rng.as_mut().expect("rng for random adversary");
                (0..actions).map(|_| rng.random_range(-1.0..=1.0)).collect()
            }
            Adversary::Constant => (0..actions)
                .map(|k| 1.0 - 2.0 * k as f64 / (actions - 1) as f64)
                .collect(),
        };
        if let Some((px, pnu)) = &prev {
            s.path_len_sq.push(l1_dist(&x, px).powi(2));
            s.util_var_sq.push(linf_dist(&nu, pnu).powi(2));
        }
        learner.observe(&nu)?;
        tracker.record(&x, &nu);
        let reg = tracker.regret();
        s.regret.push(reg);
        s.pos_regret.push(reg.max(0.0));
        s.lambda.push(learner.state().lambda);
        s.exp_util.push(dot(&nu, &x));
        if marks.contains(&t) {
            snapshots.push(Snapshot {
                t,
                strategies: vec![x.clone()],
                joint_gap: None,
            });
        }
        prev = Some((x, nu));
    }
    s.path_len_sq.push(0.0);
    s.util_var_sq.push(0.0);
    let seed = match adversary {
        Adversary::FixedRandom { seed } => seed,
        _ => 0,
    };
    Ok(MetricsLog {
        rounds,
        seed,
        actions: vec![actions],
        params,
        switched_at: vec![learner.switched_at()],
        players: vec![s],
        snapshots,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidInput(
            "slope fit needs at least two points with positive coordinates".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Worker count from [`THREADS_ENV`], defaulting to the available cores.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs independent cells in parallel, returning results in input order.
pub fn run_cells<C, R, F>(cells: &[C], f: F) -> Vec<R>
where
    C: Sync,
    R: Send,
    F: Fn(&C) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap())
        .build()
        .expect("thread pool");
    pool.install(|| cells.par_iter().map(&f).collect())
}
