//! The CBP (Confidence Bound Partial monitoring) policy.
//!
//! Each round CBP estimates the loss difference of every neighbor pair from
//! the symbol frequencies of the pair's observer actions, turns the
//! confident estimates into open half-spaces of the simplex, and keeps only
//! the actions (and neighbor pairs) whose cells still meet their
//! intersection. It then plays the action with the largest `W_k² / n_k`
//! among the surviving actions, their neighborhood sets, and those observer
//! actions that have been played rarely so far.

use std::collections::HashMap;
use std::sync::Arc;

use crate::analysis::Analysis;
use crate::error::{LpError, PolicyError};
use crate::game::{Game, Observation};
use crate::geometry::{boundary_constraints, cell_constraints, CellStructure};
use crate::lp::{max_slack_point, LinearConstraintSystem, DEFAULT_TOL_STRICT};
use crate::observers::ObserverPlan;
use crate::policy::Policy;

/// Default confidence scale.
pub const DEFAULT_ALPHA: f64 = 1.01;

/// Most actions a CBP instance supports (action sets are `u64` bitmasks).
pub const MAX_ACTIONS: usize = 64;

/// Rare-choice schedule `f(t)`, parameterized by `α`.
pub type Schedule = fn(t: u64, alpha: f64) -> f64;

/// `f(t) = α^{1/3} t^{2/3} (ln t)^{1/3}`.
pub fn default_schedule(t: u64, alpha: f64) -> f64 {
    let t = t as f64;
    alpha.cbrt() * t.powf(2.0 / 3.0) * t.ln().max(0.0).cbrt()
}

#[derive(Debug, Clone)]
pub struct CbpParams {
    pub alpha: f64,
    /// `η_k` per action.
    pub eta: Vec<f64>,
    pub schedule: Schedule,
}

impl CbpParams {
    /// `η_k = W_k^{2/3}` and the default schedule.
    pub fn new(plan: &ObserverPlan, alpha: f64) -> Result<Self, PolicyError> {
        let params = Self {
            alpha,
            eta: plan.widths.iter().map(|w| w.powf(2.0 / 3.0)).collect(),
            schedule: default_schedule,
        };
        params.validate(plan.widths.len())?;
        Ok(params)
    }

    fn validate(&self, actions: usize) -> Result<(), PolicyError> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(PolicyError::InvalidPlan(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if self.eta.len() != actions || self.eta.iter().any(|e| !(*e >= 0.0)) {
            return Err(PolicyError::InvalidPlan("need one nonnegative eta per action".into()));
        }
        Ok(())
    }
}

/// Bitmask over action indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u64);

impl ActionSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_actions(actions: impl IntoIterator<Item = usize>) -> Self {
        Self(actions.into_iter().fold(0, |m, k| m | (1 << k)))
    }

    pub fn insert(&mut self, k: usize) {
        self.0 |= 1 << k;
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0 & (1 << k) != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.0;
        (0..64).filter(move |k| bits & (1 << k) != 0)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// One sign per neighbor pair (in `CellStructure::neighbors` order): `+1`
/// when `ℓ_i − ℓ_j` is confidently positive, `−1` when confidently negative,
/// `0` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HalfSpaceArray(pub Vec<i8>);

impl HalfSpaceArray {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&s| s == 0)
    }
}

/// `sgn δ̃` where `|δ̃| ≥ c`, else 0.
pub fn half_spaces(deltas: &[f64], widths: &[f64]) -> HalfSpaceArray {
    debug_assert_eq!(deltas.len(), widths.len());
    HalfSpaceArray(deltas.iter().zip(widths).map(|(&d, &c)| half_space_sign(d, c)).collect())
}

fn half_space_sign(delta: f64, width: f64) -> i8 {
    if delta.abs() >= width {
        if delta > 0.0 {
            1
        } else if delta < 0.0 {
            -1
        } else {
            0
        }
    } else {
        0
    }
}

/// The surviving actions `P(t)` and neighbor pairs `N(t)` (as indices into
/// `CellStructure::neighbors`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polytope {
    pub actions: ActionSet,
    pub pairs: Vec<usize>,
}

/// Strict constraints `s·(ℓ_i − ℓ_j)·p > 0` for every nonzero entry.
fn add_half_spaces(mut sys: LinearConstraintSystem, game: &Game, cs: &CellStructure, hs: &HalfSpaceArray) -> LinearConstraintSystem {
    for (pair, &s) in cs.neighbors.iter().zip(&hs.0) {
        if s != 0 {
            let d: Vec<f64> = game
                .loss_difference(pair.lo(), pair.hi())
                .into_iter()
                .map(|x| x * f64::from(s))
                .collect();
            sys = sys.greater(d, 0.0);
        }
    }
    sys
}

/// Which Pareto cells and neighbor boundaries meet the open polytope cut
/// out by the half-spaces.
pub fn get_polytope(game: &Game, cs: &CellStructure, hs: &HalfSpaceArray) -> Result<Polytope, LpError> {
    if hs.is_zero() {
        return Ok(Polytope {
            actions: ActionSet::from_actions(cs.pareto.iter().copied()),
            pairs: (0..cs.neighbors.len()).collect(),
        });
    }
    let mut actions = ActionSet::empty();
    for &i in &cs.pareto {
        let sys = add_half_spaces(cell_constraints(game, i), game, cs, hs);
        if max_slack_point(&sys)?.satisfiable(DEFAULT_TOL_STRICT) {
            actions.insert(i);
        }
    }
    let mut pairs = Vec::new();
    for (n, pair) in cs.neighbors.iter().enumerate() {
        if !(actions.contains(pair.lo()) && actions.contains(pair.hi())) {
            continue;
        }
        let sys = add_half_spaces(boundary_constraints(game, *pair), game, cs, hs);
        if max_slack_point(&sys)?.satisfiable(DEFAULT_TOL_STRICT) {
            pairs.push(n);
        }
    }
    Ok(Polytope { actions, pairs })
}

/// Everything CBP computed to pick one action.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub round: u64,
    pub half_spaces: HalfSpaceArray,
    pub polytope: Polytope,
    /// `true` if the half-spaces were contradictory and the unrestricted
    /// structure was used instead.
    pub fell_back: bool,
    pub choice_set: ActionSet,
    pub action: usize,
}

struct PairTerms {
    /// `(k, v_{i,j,k}, ‖v_{i,j,k}‖_∞)` for `k ∈ V_{i,j}`.
    terms: Vec<(usize, Vec<f64>, f64)>,
    plus: ActionSet,
    observers: ActionSet,
}

/// Mutable state of one CBP run.
pub struct CbpPolicy {
    analysis: Arc<Analysis>,
    params: CbpParams,
    pairs: Vec<PairTerms>,
    widths_sq: Vec<f64>,
    counts: Vec<u64>,
    nu: Vec<Vec<u64>>,
    t: u64,
    cache: HashMap<HalfSpaceArray, Polytope>,
    unrestricted: Polytope,
}

impl CbpPolicy {
    pub fn new(analysis: Arc<Analysis>, params: CbpParams) -> Result<Self, PolicyError> {
        let plan = analysis
            .plan()
            .ok_or_else(|| PolicyError::InvalidPlan("game has a pair that cannot be observed".into()))?;
        let game = &analysis.game;
        let n = game.actions();
        if n > MAX_ACTIONS {
            return Err(PolicyError::InvalidPlan(format!("at most {MAX_ACTIONS} actions supported")));
        }
        params.validate(n)?;
        if plan.pairs.len() != analysis.cells.neighbors.len() {
            return Err(PolicyError::InvalidPlan("plan does not cover the neighbor pairs".into()));
        }
        let pairs = plan
            .pairs
            .iter()
            .zip(&analysis.cells.plus_sets)
            .map(|(entry, plus)| PairTerms {
                terms: entry
                    .observers
                    .iter()
                    .zip(&entry.vectors)
                    .map(|(&k, v)| (k, v.clone(), v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))))
                    .collect(),
                plus: ActionSet::from_actions(plus.iter().copied()),
                observers: ActionSet::from_actions(entry.observers.iter().copied()),
            })
            .collect();
        let unrestricted = get_polytope(game, &analysis.cells, &HalfSpaceArray::zeros(analysis.cells.neighbors.len()))?;
        Ok(Self {
            widths_sq: plan.widths.iter().map(|w| w * w).collect(),
            counts: vec![0; n],
            nu: (0..n).map(|k| vec![0; game.signal_matrix(k).rows()]).collect(),
            t: 1,
            cache: HashMap::new(),
            unrestricted,
            pairs,
            params,
            analysis,
        })
    }

    pub fn with_alpha(analysis: Arc<Analysis>, alpha: f64) -> Result<Self, PolicyError> {
        let plan = analysis
            .plan()
            .ok_or_else(|| PolicyError::InvalidPlan("game has a pair that cannot be observed".into()))?;
        let params = CbpParams::new(plan, alpha)?;
        Self::new(analysis, params)
    }

    /// Index of the round about to be played (1-based).
    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Cumulative observation vector `ν_k`.
    pub fn observations(&self, k: usize) -> &[u64] {
        &self.nu[k]
    }

    pub fn params(&self) -> &CbpParams {
        &self.params
    }

    fn initializing(&self) -> bool {
        self.t <= self.counts.len() as u64
    }

    /// Loss-difference estimates `δ̃_{i,j}` and confidence widths `c_{i,j}`
    /// for every neighbor pair. Requires every action to have been played.
    pub fn estimates(&self) -> (Vec<f64>, Vec<f64>) {
        let mut deltas = Vec::with_capacity(self.pairs.len());
        let mut widths = Vec::with_capacity(self.pairs.len());
        self.estimates_into(&mut deltas, &mut widths);
        (deltas, widths)
    }

    /// `c_{i,j}` for neighbor pair number `pair` at round `t` with play
    /// counts `counts`, the state left unchanged.
    pub fn confidence_radius(&self, pair: usize, counts: &[u64], t: u64) -> f64 {
        let scale = self.params.alpha * (t as f64).ln();
        self.pairs[pair].terms.iter().map(|(k, _, norm)| norm * (scale / counts[*k] as f64).sqrt()).sum()
    }

    fn estimates_into(&self, deltas: &mut Vec<f64>, widths: &mut Vec<f64>) {
        deltas.clear();
        widths.clear();
        let scale = self.params.alpha * (self.t as f64).ln();
        for pair in &self.pairs {
            let mut delta = 0.0;
            let mut width = 0.0;
            for (k, v, norm) in &pair.terms {
                let n = self.counts[*k] as f64;
                let dot: f64 = v.iter().zip(&self.nu[*k]).map(|(a, &b)| a * b as f64).sum();
                delta += dot / n;
                width += norm * (scale / n).sqrt();
            }
            deltas.push(delta);
            widths.push(width);
        }
    }

    fn polytope(&mut self, hs: &HalfSpaceArray) -> Result<Polytope, LpError> {
        if let Some(p) = self.cache.get(hs) {
            return Ok(p.clone());
        }
        let p = get_polytope(&self.analysis.game, &self.analysis.cells, hs)?;
        self.cache.insert(hs.clone(), p.clone());
        Ok(p)
    }

    /// Run one round of CBP's selection rule without recording anything.
    pub fn decide(&mut self) -> Result<Decision, PolicyError> {
        let n = self.counts.len();
        if self.initializing() {
            let action = (self.t - 1) as usize;
            return Ok(Decision {
                round: self.t,
                half_spaces: HalfSpaceArray::zeros(self.pairs.len()),
                polytope: self.unrestricted.clone(),
                fell_back: false,
                choice_set: ActionSet::from_actions([action]),
                action,
            });
        }
        let (deltas, widths) = self.estimates();
        let hs = half_spaces(&deltas, &widths);
        let mut polytope = self.polytope(&hs)?;
        let fell_back = polytope.actions.is_empty();
        if fell_back {
            polytope = self.unrestricted.clone();
        }

        let mut plus = ActionSet::empty();
        let mut observers = ActionSet::empty();
        for &p in &polytope.pairs {
            plus = plus.union(self.pairs[p].plus);
            observers = observers.union(self.pairs[p].observers);
        }
        let f = (self.params.schedule)(self.t, self.params.alpha);
        let rare = ActionSet::from_actions(
            (0..n).filter(|&k| (self.counts[k] as f64) <= self.params.eta[k] * f),
        );
        let choice_set = polytope.actions.union(plus).union(observers.intersection(rare));

        let mut best: Option<(usize, f64)> = None;
        for k in choice_set.iter() {
            let score = self.widths_sq[k] / self.counts[k] as f64;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((k, score));
            }
        }
        let (action, _) = best.ok_or(PolicyError::EmptyChoiceSet(self.t))?;
        Ok(Decision { round: self.t, half_spaces: hs, polytope, fell_back, choice_set, action })
    }

    pub fn choose_action(&mut self) -> Result<usize, PolicyError> {
        Ok(self.decide()?.action)
    }

    /// Record the observation of `action` and advance the round counter.
    pub fn update(&mut self, action: usize, obs: Observation) -> Result<(), PolicyError> {
        let expected = self.nu.get(action).map(Vec::len).ok_or_else(|| {
            PolicyError::InvalidPlan(format!("action {} out of range", action + 1))
        })?;
        if obs.width != expected || obs.symbol >= expected {
            return Err(PolicyError::DimensionMismatch { action, expected, got: obs.width });
        }
        self.nu[action][obs.symbol] += 1;
        self.counts[action] += 1;
        self.t += 1;
        Ok(())
    }

    /// Distinct half-space arrays solved so far.
    pub fn cached_polytopes(&self) -> usize {
        self.cache.len()
    }
}

impl Policy for CbpPolicy {
    fn select(&mut self) -> Result<usize, PolicyError> {
        self.choose_action()
    }

    fn update(&mut self, action: usize, obs: Observation) -> Result<(), PolicyError> {
        CbpPolicy::update(self, action, obs)
    }
}
