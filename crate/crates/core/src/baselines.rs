//! Non-learning reference policies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::PolicyError;
use crate::game::Observation;
use crate::policy::Policy;

/// Plays uniformly at random over all actions.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    actions: usize,
    rng: ChaCha8Rng,
}

impl UniformRandom {
    pub fn new(actions: usize, rng: ChaCha8Rng) -> Self {
        assert!(actions > 0);
        Self { actions, rng }
    }

    pub fn seeded(actions: usize, seed: u64) -> Self {
        Self::new(actions, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn choose(&mut self) -> usize {
        self.rng.random_range(0..self.actions)
    }
}

impl Policy for UniformRandom {
    fn select(&mut self) -> Result<usize, PolicyError> {
        Ok(self.choose())
    }

    fn update(&mut self, _action: usize, _obs: Observation) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Always plays the same action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedAction {
    action: usize,
}

impl FixedAction {
    pub fn new(action: usize, actions: usize) -> Result<Self, PolicyError> {
        if action >= actions {
            return Err(PolicyError::InvalidPlan(format!(
                "fixed action {} outside 1..={actions}",
                action + 1
            )));
        }
        Ok(Self { action })
    }

    pub fn action(&self) -> usize {
        self.action
    }
}

impl Policy for FixedAction {
    fn select(&mut self) -> Result<usize, PolicyError> {
        Ok(self.action)
    }

    fn update(&mut self, _action: usize, _obs: Observation) -> Result<(), PolicyError> {
        Ok(())
    }
}
