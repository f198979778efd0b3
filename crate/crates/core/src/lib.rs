//! Finite stochastic partial monitoring.
//!
//! A [`Game`] is a loss matrix and a feedback matrix. [`CellStructure`]
//! computes the cell decomposition of the outcome simplex, [`ObserverPlan`]
//! the observer sets and vectors, and [`CbpPolicy`] plays the game. The
//! [`harness`] module simulates policies against stochastic opponents and
//! aggregates regret.
//!
//! ```
//! use pm_lab::{catalog, Analysis, GameClass};
//!
//! let analysis = Analysis::new(catalog::easy_game()).unwrap();
//! assert_eq!(analysis.class(), GameClass::Easy);
//! ```

pub mod analysis;
pub mod baselines;
pub mod catalog;
pub mod cbp;
pub mod error;
pub mod game;
pub mod geometry;
pub mod harness;
pub mod lp;
pub mod observers;
pub mod policy;

pub use analysis::Analysis;
pub use baselines::{FixedAction, UniformRandom};
pub use cbp::{CbpParams, CbpPolicy, DEFAULT_ALPHA};
pub use error::{Error, GameError, HarnessError, LpError, ObserverError, PolicyError, Result};
pub use game::{Game, GameDescription, Observation, SignalMatrix, SimplexPoint};
pub use geometry::{CellStructure, GameClass, Pair, Tolerances};
pub use harness::{run_batch, run_episode, BatchReport, PolicySpec, RegretTrace, SimulationConfig};
pub use observers::ObserverPlan;
pub use policy::Policy;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/cells.md")]
    mod cells {}
    #[doc = include_str!("../../../book/src/observability.md")]
    mod observability {}
    #[doc = include_str!("../../../book/src/observers.md")]
    mod observers {}
    #[doc = include_str!("../../../book/src/cbp.md")]
    mod cbp {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
