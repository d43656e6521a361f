use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("payoff out of range: player {player}, entry {index} = {value} (must lie in [-1, 1])")]
    PayoffOutOfRange { player: usize, index: usize, value: f64 },

    #[error("failed to parse game file: {0}")]
    Parse(String),

    #[error("unknown game `{name}`; valid names: {valid}")]
    UnknownGame { name: String, valid: String },

    #[error("unsupported polytope `{0}`")]
    UnsupportedPolytope(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
