//! Optimistic multiplicative weights with dynamic learning-rate control.
//!
//! * [`game`]: normal-form games and their multilinear utilities.
//! * [`rate`]: the one-dimensional learning-rate control problem.
//! * [`learner`]: DLRC-OMWU, OMWU and MWU learners plus regret accounting.
//! * [`lifted`]: the lifted-simplex regularizer and an independent solver
//!   for the lifted OFTRL form of the dynamics.
//! * [`kernel`]: 0/1-polyhedral kernels and the kernelized learner.
//! * [`harness`]: self-play and adversarial runs with online bound checks.
//! * [`verify`]: sampled property suites.

pub mod error;
pub mod game;
pub mod harness;
pub mod kernel;
pub mod learner;
pub mod lifted;
pub mod numerics;
pub mod rate;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use game::{named_game, random_game, NormalFormGame, StrategyProfile};
pub use learner::{Algorithm, Learner, RegretReport};
pub use rate::{solve_rate, RateParams};
