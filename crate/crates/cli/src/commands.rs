use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use cautious_core::harness::{
    self, adversarial_run, cce_gap, check_path_length, check_regret_ceiling, check_rvu_bound, log_log_slope, self_play,
    Adversary, BoundCheck, MetricsLog, PlayConfig,
};
use cautious_core::kernel::{kernel_demo as run_kernel_demo, Polytope};
use cautious_core::rate::{default_eta, DEFAULT_BETA, THEOREM_MAX_ETA};
use cautious_core::verify::{run_suite, SuiteReport, VerifyConfig, SUITES};
use cautious_core::{named_game, random_game, Algorithm, NormalFormGame, RateParams};

use crate::config::{pick, switch, FileConfig};
use crate::{AdversarialArgs, CliError, KernelDemoArgs, RateArgs, SelfplayArgs, VerifyArgs};

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

struct Run {
    algorithm: Algorithm,
    rounds: usize,
    eta: Option<f64>,
    beta: f64,
    smoothness: f64,
    seed: u64,
    out: Option<PathBuf>,
    log_every: Option<usize>,
}

impl Run {
    fn resolve(a: RateArgs, file: &FileConfig) -> Result<Self, CliError> {
        let algorithm = Algorithm::parse(&pick(a.algo, file.algo.clone(), "dlrc".into())).map_err(usage)?;
        let rounds = pick(a.rounds, file.rounds, 1000);
        if rounds == 0 {
            return Err(usage("number of rounds T must be at least 1"));
        }
        let smoothness = pick(a.smoothness, file.smoothness, 1.0);
        if !(smoothness.is_finite() && smoothness > 0.0) {
            return Err(usage(format!("smoothness L must be positive, got {smoothness}")));
        }
        let run = Self {
            algorithm,
            rounds,
            eta: a.eta.or(file.eta),
            beta: pick(a.beta, file.beta, DEFAULT_BETA),
            smoothness,
            seed: pick(a.seed, file.seed, 0),
            out: a.out.or_else(|| file.out.clone()),
            log_every: a.log_every.or(file.log_every),
        };
        if run.log_every == Some(0) {
            return Err(usage("--log-every must be positive"));
        }
        let unsafe_params = switch(a.unsafe_params, file.unsafe_params);
        guard_params(run.eta.unwrap_or(THEOREM_MAX_ETA), run.beta, unsafe_params)?;
        Ok(run)
    }

    fn play_config(&self, safeguard: bool) -> PlayConfig {
        PlayConfig {
            algorithm: self.algorithm,
            eta: self.eta,
            beta: self.beta,
            smoothness: self.smoothness,
            safeguard,
        }
    }
}

/// Validates the constants and, unless `unsafe_params`, keeps them in the
/// regime the theorems cover.
fn guard_params(eta: f64, beta: f64, unsafe_params: bool) -> Result<(), CliError> {
    let p = RateParams::new(eta, beta, 2).map_err(usage)?;
    if !unsafe_params {
        p.check_theorem_mode()
            .map_err(|e| usage(format!("{e} (pass --unsafe-params to run anyway)")))?;
    }
    Ok(())
}

fn write_csv(log: &MetricsLog, path: &Path, every: Option<usize>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| failed(format!("cannot create {}: {e}", path.display())))?;
    log.write_csv(BufWriter::new(file), every).map_err(failed)
}

fn load_game(a: &SelfplayArgs, file: &FileConfig, seed: u64) -> Result<(NormalFormGame, String), CliError> {
    let from_flags = a.named.is_some() || a.game.is_some() || a.random;
    let (named, path, random) = if from_flags {
        (a.named.clone(), a.game.clone(), a.random)
    } else {
        (file.named.clone(), file.game.clone(), file.random.unwrap_or(false))
    };
    match (named, path, random) {
        (Some(name), None, false) => Ok((named_game(&name).map_err(usage)?, name)),
        (None, Some(path), false) => {
            let g = NormalFormGame::load(&path).map_err(usage)?;
            Ok((g, path.display().to_string()))
        }
        (None, None, true) => {
            let n = pick(a.players, file.players, 2);
            let d = pick(a.actions, file.actions, 2);
            let g = random_game(n, d, seed).map_err(usage)?;
            Ok((g, format!("random (seed {seed})")))
        }
        (None, None, false) => Err(usage("choose a game with --named, --game or --random")),
        _ => Err(usage("--named, --game and --random are mutually exclusive")),
    }
}

fn summarize(name: &str, checks: &[BoundCheck]) -> (bool, String) {
    let ok = checks.iter().all(BoundCheck::passed);
    let slack = checks.iter().map(BoundCheck::slack).fold(f64::INFINITY, f64::min);
    (
        ok,
        format!("{name}: {} (min slack {slack:.4})", if ok { "PASS" } else { "FAIL" }),
    )
}

pub fn selfplay(a: SelfplayArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.rate.config.as_deref())?;
    let safeguard = switch(a.safeguard, file.safeguard);
    let (players_flag, actions_flag) = (a.players, a.actions);
    let run = Run::resolve(a.rate, &file)?;
    let probe = SelfplayArgs {
        named: a.named,
        game: a.game,
        random: a.random,
        players: players_flag,
        actions: actions_flag,
        safeguard,
        rate: RateArgs {
            algo: None,
            rounds: None,
            eta: None,
            beta: None,
            smoothness: None,
            seed: None,
            unsafe_params: false,
            out: None,
            log_every: None,
            config: None,
        },
    };
    let (game, label) = load_game(&probe, &file, run.seed)?;
    let n = game.num_players();
    let cfg = run.play_config(safeguard);
    let eta = cfg.eta_for(n);

    let log = self_play(&game, &cfg, run.rounds, run.seed).map_err(failed)?;
    println!("game {label}: {n} players, actions {:?}", game.actions());
    println!(
        "algo {}  T {}  eta {eta}  beta {}  L {}  seed {}",
        run.algorithm.name(),
        run.rounds,
        run.beta,
        run.smoothness,
        run.seed
    );
    for (i, s) in log.players.iter().enumerate() {
        println!(
            "player {}: regret {:.6}  pos_regret {:.6}  final lambda {:.6e}",
            i + 1,
            s.regret[run.rounds - 1],
            s.pos_regret[run.rounds - 1],
            s.lambda[run.rounds - 1]
        );
    }
    let gap = cce_gap(&log).map_err(failed)?;
    println!("cce gap: {gap:.6e}");
    if let Some(path) = &run.out {
        write_csv(&log, path, run.log_every)?;
        println!("metrics: {}", path.display());
    }

    let covered = run.algorithm == Algorithm::Dlrc && eta <= default_eta(run.smoothness, n) && run.beta >= DEFAULT_BETA;
    if !covered {
        println!("checks: skipped (the bounds need dlrc, eta <= min{{1/50, 1/(12√2 L n)}} and beta >= 70)");
        return Ok(());
    }
    let mut problems = Vec::new();
    for (name, checks) in [
        ("rvu", check_rvu_bound(&log)),
        ("path-length", check_path_length(&log)),
        ("regret ceiling", check_regret_ceiling(&log, run.smoothness)),
    ] {
        let (ok, line) = summarize(name, &checks);
        println!("{line}");
        if !ok {
            problems.push(name);
        }
    }
    if safeguard {
        match log.switched_at.iter().position(Option::is_some) {
            Some(i) => {
                println!(
                    "safeguard: player {} switched at t={}",
                    i + 1,
                    log.switched_at[i].unwrap()
                );
                problems.push("safeguard");
            }
            None => println!("safeguard: never triggered"),
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(failed(problems.join(", ")))
    }
}

pub fn adversarial(a: AdversarialArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.rate.config.as_deref())?;
    let run = Run::resolve(a.rate, &file)?;
    let adversary = Adversary::parse(
        &pick(a.adversary, file.adversary.clone(), "alternating".into()),
        run.seed,
    )
    .map_err(usage)?;
    let actions = pick(a.actions, file.actions, 2);
    let players = pick(a.players, file.players, 2);
    if actions < 2 || players < 1 {
        return Err(usage("need at least 2 actions and 1 player"));
    }
    let cfg = run.play_config(true);
    let log = adversarial_run(&cfg, players, actions, adversary, run.rounds).map_err(failed)?;
    println!(
        "adversary {adversary:?}: algo {}  T {}  d {actions}  eta {}",
        run.algorithm.name(),
        run.rounds,
        cfg.eta_for(players)
    );
    for t in log.checkpoints() {
        println!("t {t:>9}  regret {:.6}", log.regret_at(0, t));
    }
    match log.switched_at[0] {
        Some(s) => {
            println!("safeguard: switched at t={s}");
            let pts: Vec<(f64, f64)> = (0..=10)
                .map(|k| (s as f64 * (run.rounds as f64 / s as f64).powf(k as f64 / 10.0)).round() as usize)
                .map(|t| t.clamp(s, run.rounds))
                .map(|t| (t as f64, log.regret_at(0, t)))
                .collect();
            match log_log_slope(&pts) {
                Ok(slope) => println!("post-switch log-log slope: {slope:.4}"),
                Err(_) => println!("post-switch log-log slope: not enough positive points"),
            }
        }
        None => println!("safeguard: never triggered"),
    }
    if let Some(path) = &run.out {
        write_csv(&log, path, run.log_every)?;
        println!("metrics: {}", path.display());
    }
    Ok(())
}

fn print_table(reports: &[SuiteReport]) {
    println!(
        "{:<10} {:>8} {:>14} {:>10}  result",
        "suite", "samples", "max violation", "tolerance"
    );
    for r in reports {
        println!(
            "{:<10} {:>8} {:>14.3e} {:>10.1e}  {}",
            r.name,
            r.samples,
            r.max_violation,
            r.tolerance,
            if r.passed() { "PASS" } else { "FAIL" }
        );
    }
}

pub fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let suite = pick(a.suite, file.suite.clone(), "all".into());
    let cfg = VerifyConfig {
        samples: pick(a.samples, file.samples, VerifyConfig::default().samples),
        seed: pick(a.seed, file.seed, 0),
        d: a.d.or(file.d),
    };
    if cfg.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    if cfg.d.is_some_and(|d| d < 2) {
        return Err(usage("--d must be at least 2"));
    }
    let reports = if suite == "all" {
        let runs = harness::run_cells(&SUITES, |name| run_suite(name, &cfg));
        let mut all = Vec::new();
        for r in runs {
            all.extend(r.map_err(failed)?);
        }
        all
    } else if SUITES.contains(&suite.as_str()) {
        run_suite(&suite, &cfg).map_err(failed)?
    } else {
        return Err(usage(format!(
            "unknown suite `{suite}` (expected all or one of {})",
            SUITES.join(", ")
        )));
    };
    print_table(&reports);
    let bad: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(failed(bad.join(", ")))
    }
}

pub fn kernel_demo(a: KernelDemoArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let name = pick(a.polytope, file.polytope.clone(), "simplex".into());
    let d = pick(a.d, file.d, 4);
    let polytope = Polytope::from_spec(&name, d, a.m.or(file.m)).map_err(usage)?;
    let rounds = pick(a.rounds, file.rounds, 100);
    if rounds == 0 {
        return Err(usage("number of rounds T must be at least 1"));
    }
    let amplitude = pick(a.amplitude, file.amplitude, 1e4);
    let eta = pick(a.eta, file.eta, THEOREM_MAX_ETA);
    let beta = pick(a.beta, file.beta, DEFAULT_BETA);
    guard_params(eta, beta, switch(a.unsafe_params, file.unsafe_params))?;

    let r = run_kernel_demo(&polytope, rounds, amplitude, eta, beta).map_err(failed)?;
    println!(
        "polytope {} d {d}  T {rounds}  amplitude {amplitude}  eta {eta}  beta {beta}",
        polytope.name()
    );
    println!(
        "kernel calls {}  derivative evaluations {}  newton rounds {}",
        r.kernel_calls, r.derivative_evals, r.newton_rounds
    );
    println!(
        "call budget (d+1) + (d²+1)·evals: {}",
        if r.budget_ok { "exact" } else { "VIOLATED" }
    );
    let mut ok = r.budget_ok;
    if let (Some(reference), Some(dev)) = (r.reference, r.max_deviation) {
        let tol = if reference == "dlrc" { 1e-12 } else { 1e-9 };
        println!("max deviation from {reference}: {dev:.3e} (tolerance {tol:.0e})");
        ok &= dev <= tol;
    }
    if ok {
        Ok(())
    } else {
        Err(failed("kernelized run disagrees with its reference"))
    }
}
