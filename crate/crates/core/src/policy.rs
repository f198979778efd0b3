use crate::error::PolicyError;
use crate::game::Observation;

/// A learner in the partial-monitoring protocol.
///
/// The only information a policy receives about the opponent is the
/// observation of the action it played; losses never cross this interface.
pub trait Policy {
    fn select(&mut self) -> Result<usize, PolicyError>;
    fn update(&mut self, action: usize, obs: Observation) -> Result<(), PolicyError>;
}
