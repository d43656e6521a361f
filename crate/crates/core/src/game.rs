//! n-player general-sum normal-form games with payoffs bounded in `[-1, 1]`.
//!
//! Payoff tensors are stored flat in row-major order over joint action
//! profiles, with player 1's action index varying slowest.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, is_distribution};
use crate::rng::seeded_rng;

/// Names accepted by [`named_game`].
pub const NAMED_GAMES: [&str; 4] = [
    "matching_pennies",
    "prisoners_dilemma",
    "rock_paper_scissors",
    "shapley",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    n: usize,
    actions: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

/// An immutable normal-form game.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    actions: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
    strides: Vec<usize>,
}

impl NormalFormGame {
    /// Builds a game, validating shapes and the payoff bound.
    pub fn new(actions: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if actions.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a game needs at least 2 players, got {}",
                actions.len()
            )));
        }
        if let Some((i, &d)) = actions.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::InvalidInput(format!(
                "player {i} has {d} actions; every player needs at least 2"
            )));
        }
        if payoffs.len() != actions.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} payoff tensors, got {}",
                actions.len(),
                payoffs.len()
            )));
        }
        let size = actions
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidInput("joint action space too large".into()))?;
        for (player, tensor) in payoffs.iter().enumerate() {
            if tensor.len() != size {
                return Err(Error::InvalidInput(format!(
                    "payoff tensor of player {player} has {} entries, expected {size}",
                    tensor.len()
                )));
            }
            for (index, &value) in tensor.iter().enumerate() {
                if !value.is_finite() || value.abs() > 1.0 {
                    return Err(Error::PayoffOutOfRange { player, index, value });
                }
            }
        }
        let mut strides = vec![1usize; actions.len()];
        for j in (0..actions.len() - 1).rev() {
            strides[j] = strides[j + 1] * actions[j + 1];
        }
        Ok(Self {
            actions,
            payoffs,
            strides,
        })
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.actions[player]
    }

    /// Flat payoff tensor of `player`.
    pub fn payoffs(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    /// Number of joint action profiles.
    pub fn joint_size(&self) -> usize {
        self.payoffs[0].len()
    }

    /// Flat index of a joint pure profile.
    pub fn flat_index(&self, profile: &[usize]) -> usize {
        profile.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    /// Action of `player` in the joint profile with flat index `flat`.
    pub fn action_of(&self, flat: usize, player: usize) -> usize {
        (flat / self.strides[player]) % self.actions[player]
    }

    /// Payoff of `player` at a pure joint profile.
    pub fn payoff(&self, player: usize, profile: &[usize]) -> f64 {
        self.payoffs[player][self.flat_index(profile)]
    }

    fn check_profile(&self, profile: &StrategyProfile, player: usize) -> Result<()> {
        if player >= self.num_players() {
            return Err(Error::InvalidInput(format!(
                "player index {player} out of range for {} players",
                self.num_players()
            )));
        }
        if profile.rows.len() != self.num_players() {
            return Err(Error::InvalidInput(format!(
                "profile has {} rows, game has {} players",
                profile.rows.len(),
                self.num_players()
            )));
        }
        for (j, row) in profile.rows.iter().enumerate() {
            if row.len() != self.actions[j] {
                return Err(Error::InvalidInput(format!(
                    "strategy of player {j} has length {}, expected {}",
                    row.len(),
                    self.actions[j]
                )));
            }
        }
        Ok(())
    }

    /// Per-action expected payoff of `player` against the product of the
    /// other players' mixed strategies.
    pub fn gradient_utility(&self, profile: &StrategyProfile, player: usize) -> Result<Vec<f64>> {
        self.check_profile(profile, player)?;
        Ok(self.gradient_unchecked(&profile.rows, player))
    }

    /// Gradient for every player at once.
    pub fn all_gradients(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.num_players())
            .map(|i| self.gradient_unchecked(rows, i))
            .collect()
    }

    pub(crate) fn gradient_unchecked(&self, rows: &[Vec<f64>], player: usize) -> Vec<f64> {
        let n = self.num_players();
        let mut nu = vec![0.0; self.actions[player]];
        let tensor = &self.payoffs[player];
        let mut digits = vec![0usize; n];
        for &value in tensor {
            let mut weight = 1.0;
            for j in 0..n {
                if j != player {
                    weight *= rows[j][digits[j]];
                }
            }
            nu[digits[player]] += weight * value;
            // odometer, last player fastest
            for j in (0..n).rev() {
                digits[j] += 1;
                if digits[j] < self.actions[j] {
                    break;
                }
                digits[j] = 0;
            }
        }
        nu
    }

    /// `E_{s~x}[U_player(s)]`.
    pub fn expected_utility(&self, profile: &StrategyProfile, player: usize) -> Result<f64> {
        let nu = self.gradient_utility(profile, player)?;
        Ok(dot(&profile.rows[player], &nu))
    }

    /// Loads a game from the JSON file format.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.n != file.actions.len() {
            return Err(Error::Parse(format!(
                "field `n` is {} but field `actions` lists {} players",
                file.n,
                file.actions.len()
            )));
        }
        if file.payoffs.len() != file.n {
            return Err(Error::Parse(format!(
                "field `payoffs` has {} tensors, expected n = {}",
                file.payoffs.len(),
                file.n
            )));
        }
        Self::new(file.actions, file.payoffs)
    }

    pub fn to_json(&self) -> String {
        let file = GameFile {
            n: self.num_players(),
            actions: self.actions.clone(),
            payoffs: self.payoffs.clone(),
        };
        serde_json::to_string(&file).expect("game serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    pub rows: Vec<Vec<f64>>,
}

impl StrategyProfile {
    /// Validates that every row is a probability vector (mass within 1e-12).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if !is_distribution(row, 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "strategy of player {i} is not a probability vector: {row:?}"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn uniform(game: &NormalFormGame) -> Self {
        Self {
            rows: game.actions().iter().map(|&d| vec![1.0 / d as f64; d]).collect(),
        }
    }

    /// Pure profile with `actions[i]` played by player `i`.
    pub fn pure(game: &NormalFormGame, actions: &[usize]) -> Self {
        Self {
            rows: game
                .actions()
                .iter()
                .zip(actions)
                .map(|(&d, &a)| {
                    let mut row = vec![0.0; d];
                    row[a] = 1.0;
                    row
                })
                .collect(),
        }
    }
}

/// Random game with i.i.d. uniform payoffs on `[-1, 1]`.
///
/// Entries are drawn player by player in flat tensor order from
/// [`seeded_rng`]`(seed)`.
pub fn random_game(n: usize, d: usize, seed: u64) -> Result<NormalFormGame> {
    random_game_with_actions(&vec![d; n], seed)
}

pub fn random_game_with_actions(actions: &[usize], seed: u64) -> Result<NormalFormGame> {
    if actions.len() < 2 || actions.iter().any(|&d| d < 2) {
        return Err(Error::InvalidInput(format!(
            "random games need n >= 2 and d >= 2, got actions {actions:?}"
        )));
    }
    let size: usize = actions.iter().product();
    let mut rng = seeded_rng(seed);
    let payoffs = (0..actions.len())
        .map(|_| (0..size).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    NormalFormGame::new(actions.to_vec(), payoffs)
}

/// Standard two-player games, affinely rescaled into `[-1, 1]`.
pub fn named_game(name: &str) -> Result<NormalFormGame> {
    let (d, row, col): (usize, Vec<f64>, Vec<f64>) = match name {
        "matching_pennies" => (2, vec![1.0, -1.0, -1.0, 1.0], vec![-1.0, 1.0, 1.0, -1.0]),
        // (C, D) with R=3, S=0, T=5, P=1 mapped by p -> (p - 2.5) / 2.5
        "prisoners_dilemma" => (2, vec![0.2, -1.0, 1.0, -0.6], vec![0.2, 1.0, -1.0, -0.6]),
        "rock_paper_scissors" => {
            let row = vec![0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0];
            let col = row.iter().map(|v: &f64| -v).collect();
            (3, row, col)
        }
        // Shapley's game with {0, 1} payoffs mapped to {-1, 1}
        "shapley" => (
            3,
            vec![1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0, 1.0],
            vec![-1.0, 1.0, -1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0],
        ),
        _ => {
            return Err(Error::UnknownGame {
                name: name.to_string(),
                valid: NAMED_GAMES.join(", "),
            })
        }
    };
    NormalFormGame::new(vec![d, d], vec![row, col])
}
