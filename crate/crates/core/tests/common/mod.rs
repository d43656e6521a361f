//! Oracles shared by the integration tests. Nothing here calls into the
//! numerical routines under test.

#![allow(dead_code)]

use cautious_core::NormalFormGame;

pub fn alpha(d: usize, beta: f64) -> f64 {
    let l = (d as f64).ln();
    2.0 + 2.0 * l + beta * l * l
}

pub fn lse(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `f(λ; r) = (α-1) ln λ + ln Σ exp(λ r)`.
pub fn objective(lambda: f64, r: &[f64], alpha: f64) -> f64 {
    let s: Vec<f64> = r.iter().map(|x| lambda * x).collect();
    (alpha - 1.0) * lambda.ln() + lse(&s)
}

/// Softmax-weighted mean of `r` plus `(α-1)/λ`.
pub fn f1(lambda: f64, r: &[f64], alpha: f64) -> f64 {
    let m = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = r.iter().map(|x| (lambda * (x - m)).exp()).collect();
    let z: f64 = w.iter().sum();
    r.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / z + (alpha - 1.0) / lambda
}

/// Maximizer of `f` over `(0, η]` by geometric bisection on `f'`.
pub fn rate_by_bisection(r: &[f64], eta: f64, alpha: f64) -> f64 {
    if f1(eta, r, alpha) >= 0.0 {
        return eta;
    }
    let mut hi = eta;
    let mut lo = eta;
    while f1(lo, r, alpha) < 0.0 {
        hi = lo;
        lo /= 4.0;
    }
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if f1(mid, r, alpha) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// All 0/1 vectors of length `d`, optionally with exactly `m` ones.
pub fn cube_vertices(d: usize, m: Option<usize>) -> Vec<Vec<u8>> {
    (0u32..1 << d)
        .filter(|mask| m.is_none_or(|m| mask.count_ones() as usize == m))
        .map(|mask| (0..d).map(|k| (mask >> k & 1) as u8).collect())
        .collect()
}

pub fn simplex_vertices(d: usize) -> Vec<Vec<u8>> {
    (0..d).map(|i| (0..d).map(|k| u8::from(k == i)).collect()).collect()
}

/// Every joint pure profile, player 1 slowest.
pub fn profiles(actions: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in actions {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..d).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

/// `ν_i[k]` by summing over every joint profile.
pub fn brute_gradient(game: &NormalFormGame, rows: &[Vec<f64>], player: usize) -> Vec<f64> {
    let mut nu = vec![0.0; game.num_actions(player)];
    for s in profiles(game.actions()) {
        let w: f64 = (0..rows.len())
            .filter(|&j| j != player)
            .map(|j| rows[j][s[j]])
            .product();
        nu[s[player]] += w * game.payoff(player, &s);
    }
    nu
}

pub fn brute_expectation(game: &NormalFormGame, rows: &[Vec<f64>], player: usize) -> f64 {
    profiles(game.actions())
        .iter()
        .map(|s| (0..rows.len()).map(|j| rows[j][s[j]]).product::<f64>() * game.payoff(player, s))
        .sum()
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Totals from [`simulate`].
pub struct Simulated {
    /// `Σ_i Σ_{t<T} ‖x_i^{t+1}-x_i^t‖₁²`.
    pub path: f64,
    pub regrets: Vec<f64>,
}

/// Plain self-play loop with `Learner`, regrets recomputed from the
/// cumulative utility vectors.
pub fn simulate(game: &NormalFormGame, eta: f64, rounds: usize) -> Simulated {
    use cautious_core::learner::{Algorithm, Learner};
    use cautious_core::rate::RateParams;
    use cautious_core::StrategyProfile;

    let n = game.num_players();
    let mut learners: Vec<Learner> = (0..n)
        .map(|i| {
            let d = game.num_actions(i);
            Learner::new(Algorithm::Dlrc, RateParams::new(eta, 70.0, d).unwrap(), d)
        })
        .collect();
    let mut cum: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; game.num_actions(i)]).collect();
    let mut earned = vec![0.0; n];
    let mut prev: Option<Vec<Vec<f64>>> = None;
    let mut path = 0.0;
    for _ in 0..rounds {
        let rows: Vec<Vec<f64>> = learners
            .iter_mut()
            .map(|l| l.next_strategy().unwrap().to_vec())
            .collect();
        if let Some(p) = &prev {
            for (a, b) in rows.iter().zip(p) {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                path += d * d;
            }
        }
        let profile = StrategyProfile::new(rows.clone()).unwrap();
        for i in 0..n {
            let nu = game.gradient_utility(&profile, i).unwrap();
            earned[i] += nu.iter().zip(&rows[i]).map(|(a, b)| a * b).sum::<f64>();
            for (c, v) in cum[i].iter_mut().zip(&nu) {
                *c += v;
            }
            learners[i].observe(&nu).unwrap();
        }
        prev = Some(rows);
    }
    let regrets = (0..n)
        .map(|i| cum[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max) - earned[i])
        .collect();
    Simulated { path, regrets }
}
