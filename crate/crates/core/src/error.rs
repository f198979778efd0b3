use thiserror::Error;

use crate::geometry::Pair;

/// Problems with a game description or an opponent strategy.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// 1-based indices of the first pair of identical loss rows.
    #[error("loss rows {0} and {1} are identical")]
    DuplicateLossRows(usize, usize),
    #[error("not a point of the simplex: {0}")]
    NotInSimplex(String),
    #[error("bad game parameters: {0}")]
    BadShape(String),
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("LP solver failed to converge after {0} pivots")]
    NumericalFailure(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObserverError {
    #[error("pair {0} cannot be observed even using every action")]
    NotGloballyObservable(Pair),
    #[error("observer equation for pair {pair} has residual {residual:e}")]
    Residual { pair: Pair, residual: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("action {} has {expected} symbols but the observation has {got}", .action + 1)]
    DimensionMismatch { action: usize, expected: usize, got: usize },
    #[error("no action available at round {0}")]
    EmptyChoiceSet(u64),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("configurations do not share a horizon and checkpoint schedule")]
    MixedSchedules,
    #[error("game is hopeless (not globally observable); CBP cannot run on it")]
    Hopeless,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("cannot write CSV: {0}")]
    Csv(String),
}

/// Any error the library can produce.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
