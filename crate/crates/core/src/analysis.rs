use std::sync::Arc;

use crate::error::{Error, ObserverError};
use crate::game::Game;
use crate::geometry::{CellStructure, GameClass, Tolerances};
use crate::observers::ObserverPlan;

/// A game together with everything the preprocessing phase derives from it.
///
/// The observer plan is missing when some neighbor pair cannot be observed
/// even through every action.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub game: Game,
    pub cells: CellStructure,
    pub plan: Result<ObserverPlan, ObserverError>,
}

impl Analysis {
    pub fn new(game: Game) -> Result<Self, Error> {
        Self::with_tolerances(game, &Tolerances::default())
    }

    pub fn with_tolerances(game: Game, tol: &Tolerances) -> Result<Self, Error> {
        let cells = CellStructure::analyze(&game, tol)?;
        let plan = ObserverPlan::build(&game, &cells, tol);
        // Numerical failures inside the plan are real errors; unobservable
        // pairs are recorded in the analysis.
        if let Err(e @ (ObserverError::Lp(_) | ObserverError::Residual { .. })) = &plan {
            return Err(e.clone().into());
        }
        Ok(Self { game, cells, plan })
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn class(&self) -> GameClass {
        self.cells.class()
    }

    pub fn plan(&self) -> Option<&ObserverPlan> {
        self.plan.as_ref().ok()
    }
}
