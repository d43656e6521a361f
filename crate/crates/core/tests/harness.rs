mod common;

use cautious_core::harness::{
    adversarial_run, cce_gap, cce_gap_at, check_path_length, check_regret_ceiling, check_rvu_bound, log_log_slope,
    self_play, Adversary, PlayConfig,
};
use cautious_core::{named_game, random_game};

fn csv_bytes(log: &cautious_core::harness::MetricsLog, every: Option<usize>) -> Vec<u8> {
    let mut out = Vec::new();
    log.write_csv(&mut out, every).unwrap();
    out
}

#[test]
fn identical_seeds_give_identical_logs() {
    let g = random_game(2, 3, 17).unwrap();
    let a = self_play(&g, &PlayConfig::default(), 2000, 5).unwrap();
    let b = self_play(&g, &PlayConfig::default(), 2000, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(csv_bytes(&a, None), csv_bytes(&b, None));
    assert_eq!(csv_bytes(&a, Some(100)), csv_bytes(&b, Some(100)));
}

#[test]
fn matches_independent_simulation() {
    let g = random_game(3, 3, 2).unwrap();
    let log = self_play(&g, &PlayConfig::default(), 3000, 0).unwrap();
    let sim = common::simulate(&g, log.params[0].eta, 3000);
    for (i, r) in sim.regrets.iter().enumerate() {
        assert!((log.regret_at(i, 3000) - r).abs() <= 1e-9 * r.abs().max(1.0));
    }
    let path: f64 = log.players.iter().map(|s| s.path_length(3000)).sum();
    assert!((path - sim.path).abs() <= 1e-9 * sim.path.max(1.0));
}

#[test]
fn rvu_holds_on_two_by_two() {
    for seed in 0..3 {
        let g = random_game(2, 2, seed).unwrap();
        let log = self_play(&g, &PlayConfig::default(), 10_000, seed).unwrap();
        let checks = check_rvu_bound(&log);
        assert_eq!(checks.len(), 2 * 4);
        assert!(checks.iter().all(|c| c.passed()), "{checks:?}");
        assert!(!log.any_switch());
    }
}

#[test]
fn rvu_holds_for_three_players() {
    let g = random_game(3, 3, 9).unwrap();
    let log = self_play(&g, &PlayConfig::default(), 10_000, 9).unwrap();
    assert!(check_rvu_bound(&log).iter().all(|c| c.passed()));
    assert!(check_regret_ceiling(&log, 1.0).iter().all(|c| c.passed()));
}

#[test]
fn path_length_three_players_four_actions() {
    let g = random_game(3, 4, 4).unwrap();
    let log = self_play(&g, &PlayConfig::default(), 10_000, 4).unwrap();
    for c in check_path_length(&log) {
        assert!(c.passed() && c.lhs >= 0.0, "{c:?}");
    }
}

#[test]
fn single_round_is_trivial() {
    let g = named_game("matching_pennies").unwrap();
    let log = self_play(&g, &PlayConfig::default(), 1, 0).unwrap();
    assert_eq!(log.checkpoints(), vec![1]);
    for c in check_rvu_bound(&log) {
        assert!(c.rhs >= 3.0 && c.lhs <= 1.0 && c.lhs >= 0.0);
    }
    let pl = check_path_length(&log);
    assert_eq!(pl[0].lhs, 0.0);
    assert!(self_play(&g, &PlayConfig::default(), 0, 0).is_err());
}

#[test]
fn cce_gap_equals_scaled_regret() {
    for seed in 0..4 {
        let g = random_game(2, 3, 100 + seed).unwrap();
        let log = self_play(&g, &PlayConfig::default(), 1000, seed).unwrap();
        for s in &log.snapshots {
            let exact = s.joint_gap.unwrap();
            let gap = cce_gap_at(&log, s.t).unwrap();
            assert!((exact - gap).abs() <= 1e-10);
            assert!((gap - log.max_regret_at(s.t) / s.t as f64).abs() < 1e-15);
        }
        assert!(cce_gap(&log).is_ok());
    }
}

#[test]
fn random_game_gap_shrinks() {
    for seed in 0..3 {
        let g = random_game(2, 3, 40 + seed).unwrap();
        let log = self_play(&g, &PlayConfig::default(), 100_000, seed).unwrap();
        let gaps: Vec<f64> = [1000, 10_000, 100_000]
            .iter()
            .map(|&t| cce_gap_at(&log, t).unwrap())
            .collect();
        assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
    }
}

#[test]
fn csv_layout() {
    let g = named_game("matching_pennies").unwrap();
    let log = self_play(&g, &PlayConfig::default(), 25, 0).unwrap();
    let text = String::from_utf8(csv_bytes(&log, None)).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("t,player,regret,pos_regret,lambda,path_len_sq,util_var_sq,exp_util")
    );
    assert_eq!(lines.count(), 4);
    let all = String::from_utf8(csv_bytes(&log, Some(1))).unwrap();
    assert_eq!(all.lines().count(), 51);
    let every = String::from_utf8(csv_bytes(&log, Some(10))).unwrap();
    assert!(every
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .eq(["10", "10", "20", "20", "25", "25"]));
    let mut sink = Vec::new();
    assert!(log.write_csv(&mut sink, Some(0)).is_err());
}

#[test]
fn constant_adversary_never_switches() {
    let log = adversarial_run(&PlayConfig::default(), 2, 3, Adversary::Constant, 20_000).unwrap();
    assert!(!log.any_switch());
    let r = log.players[0].regret.clone();
    let late = r[1000..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(late <= r[999].max(0.0) + 1.0, "regret keeps growing: {late}");
}

#[test]
fn alternating_adversary_switches_and_stays_sublinear() {
    let log = adversarial_run(&PlayConfig::default(), 2, 2, Adversary::AlternatingExtremes, 60_000).unwrap();
    let s = log.switched_at[0].expect("safeguard must fire");
    let pts: Vec<(f64, f64)> = (0..6)
        .map(|k| {
            let t = (s as f64 * (60_000.0 / s as f64).powf(k as f64 / 5.0)).round() as usize;
            let t = t.clamp(s, 60_000);
            (t as f64, log.regret_at(0, t))
        })
        .collect();
    assert!(log_log_slope(&pts).unwrap() <= 0.6);
}

#[test]
fn random_adversary_regret_scales_like_sqrt() {
    let d = 4;
    let log = adversarial_run(
        &PlayConfig::default(),
        2,
        d,
        Adversary::FixedRandom { seed: 11 },
        100_000,
    )
    .unwrap();
    for t in [1000, 10_000, 100_000] {
        let c = log.regret_at(0, t) / (t as f64 * (d as f64).ln()).sqrt();
        assert!(c <= 3.0, "t={t}: c={c}");
    }
}

#[test]
fn adversary_names() {
    assert_eq!(
        Adversary::parse("random", 4).unwrap(),
        Adversary::FixedRandom { seed: 4 }
    );
    assert!(Adversary::parse("oracle", 0).is_err());
    assert!(adversarial_run(&PlayConfig::default(), 2, 2, Adversary::Constant, 0).is_err());
}
