//! Observer sets `V_{i,j}`, observer vectors `v_{i,j,k}` and confidence
//! widths `W_k`.
//!
//! For each neighbor pair the vectors solve
//! `Σ_{k∈V_{i,j}} S_k^T v_{i,j,k} = ℓ_i − ℓ_j`, which makes
//! `Σ_k v_{i,j,k}·(S_k p)` an unbiased read-out of `(ℓ_i − ℓ_j)·p` from the
//! symbol frequencies of the observer actions.

use serde::{Deserialize, Serialize};

use crate::error::ObserverError;
use crate::game::Game;
use crate::geometry::{in_signal_span, CellStructure, Pair, Tolerances};
use crate::lp::{LinearProgram, LpOutcome, Relation};

/// Residual bound for the observer equation.
pub const OBSERVER_RESIDUAL_TOL: f64 = 1e-9;

/// What the observer-vector LP minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObserverObjective {
    /// `max_k ‖v_{i,j,k}‖_∞` for the pair.
    MinMaxNorm,
    /// `Σ_k ‖v_{i,j,k}‖_∞` for the pair.
    MinSumNorm,
}

pub const OBSERVER_OBJECTIVE: ObserverObjective = ObserverObjective::MinMaxNorm;

/// Observer data of one neighbor pair, oriented from `pair.lo()` to
/// `pair.hi()`: the vectors reproduce `ℓ_lo − ℓ_hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairObservers {
    pub pair: Pair,
    pub observers: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
}

impl PairObservers {
    pub fn vector_for(&self, k: usize) -> Option<&[f64]> {
        self.observers.iter().position(|&o| o == k).map(|idx| self.vectors[idx].as_slice())
    }

    /// `‖Σ_k S_k^T v_k − (ℓ_lo − ℓ_hi)‖_∞`.
    pub fn residual(&self, game: &Game) -> f64 {
        let mut sum = vec![0.0; game.outcomes()];
        for (&k, v) in self.observers.iter().zip(&self.vectors) {
            for (s, x) in sum.iter_mut().zip(game.signal_matrix(k).transpose_apply(v)) {
                *s += x;
            }
        }
        sum.iter()
            .zip(game.loss_difference(self.pair.lo(), self.pair.hi()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverPlan {
    /// One entry per neighbor pair, in the order of `CellStructure::neighbors`.
    pub pairs: Vec<PairObservers>,
    /// `W_k` for every action.
    pub widths: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

impl ObserverPlan {
    pub fn build(game: &Game, cs: &CellStructure, tol: &Tolerances) -> Result<Self, ObserverError> {
        let mut pairs = Vec::with_capacity(cs.neighbors.len());
        for (pair, plus) in cs.neighbors.iter().zip(&cs.plus_sets) {
            let target = game.loss_difference(pair.lo(), pair.hi());
            let mut observers = plus.clone();
            if !cs.is_locally_observable(*pair) {
                let mut k = 0;
                while !in_signal_span(game, &observers, &target, tol) {
                    while k < game.actions() && observers.contains(&k) {
                        k += 1;
                    }
                    if k == game.actions() {
                        return Err(ObserverError::NotGloballyObservable(*pair));
                    }
                    observers.push(k);
                }
                observers.sort_unstable();
            }
            let vectors = solve_observer_vectors(game, &observers, &target, OBSERVER_OBJECTIVE)?
                .ok_or(ObserverError::NotGloballyObservable(*pair))?;
            let entry = PairObservers { pair: *pair, observers, vectors };
            let residual = entry.residual(game);
            if residual > OBSERVER_RESIDUAL_TOL {
                return Err(ObserverError::Residual { pair: *pair, residual });
            }
            pairs.push(entry);
        }
        let widths = confidence_widths(game.actions(), &pairs);
        Ok(Self { pairs, widths })
    }

    pub fn entry(&self, pair: Pair) -> Option<&PairObservers> {
        self.pairs.iter().find(|e| e.pair == pair)
    }

    pub fn observer_set(&self, pair: Pair) -> Option<&[usize]> {
        self.entry(pair).map(|e| e.observers.as_slice())
    }

    /// `v_{i,j,k}` in the ordered direction `i → j`; antisymmetric in `(i, j)`.
    pub fn vector(&self, i: usize, j: usize, k: usize) -> Option<Vec<f64>> {
        let entry = self.entry(Pair::new(i, j))?;
        let v = entry.vector_for(k)?;
        Some(if i < j { v.to_vec() } else { v.iter().map(|x| -x).collect() })
    }

    pub fn width(&self, k: usize) -> f64 {
        self.widths[k]
    }

    /// Audit document with 1-based action numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let pairs: Vec<serde_json::Value> = self
            .pairs
            .iter()
            .map(|e| {
                serde_json::json!({
                    "pair": [e.pair.lo() + 1, e.pair.hi() + 1],
                    "observers": e.observers.iter().map(|k| k + 1).collect::<Vec<_>>(),
                    "vectors": e.vectors,
                })
            })
            .collect();
        serde_json::json!({ "pairs": pairs, "widths": self.widths })
    }
}

/// `W_k = max ‖v_{i,j,k}‖_∞` over the pairs that use `k`; zero for actions
/// never used as observers.
pub fn confidence_widths(actions: usize, pairs: &[PairObservers]) -> Vec<f64> {
    let mut widths = vec![0.0; actions];
    for entry in pairs {
        for (&k, v) in entry.observers.iter().zip(&entry.vectors) {
            widths[k] = f64::max(widths[k], inf_norm(v));
        }
    }
    widths
}

const SNAP_TOL: f64 = 1e-12;

/// Solve `Σ_k S_k^T v_k = target` minimizing the chosen norm objective.
/// `None` if the system has no solution.
pub fn solve_observer_vectors(
    game: &Game,
    observers: &[usize],
    target: &[f64],
    objective: ObserverObjective,
) -> Result<Option<Vec<Vec<f64>>>, ObserverError> {
    let offsets: Vec<usize> = observers
        .iter()
        .scan(0, |acc, &k| {
            let start = *acc;
            *acc += game.signal_matrix(k).rows();
            Some(start)
        })
        .collect();
    let n_v: usize = observers.iter().map(|&k| game.signal_matrix(k).rows()).sum();
    let n_z = match objective {
        ObserverObjective::MinMaxNorm => 1,
        ObserverObjective::MinSumNorm => observers.len(),
    };
    let mut cost = vec![0.0; n_v + n_z];
    cost[n_v..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::minimize(cost);
    for v in 0..n_v {
        lp.set_free(v);
    }
    for (j, &t) in target.iter().enumerate() {
        let mut row = vec![0.0; n_v + n_z];
        for (idx, &k) in observers.iter().enumerate() {
            row[offsets[idx] + game.signal_matrix(k).outcome_symbol[j]] = 1.0;
        }
        lp.add(row, Relation::Eq, t);
    }
    for (idx, &k) in observers.iter().enumerate() {
        let z = n_v + if n_z == 1 { 0 } else { idx };
        for r in 0..game.signal_matrix(k).rows() {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; n_v + n_z];
                row[z] = 1.0;
                row[offsets[idx] + r] = sign;
                lp.add(row, Relation::Ge, 0.0);
            }
        }
    }
    // Pivoting leaves round-off where the exact solution has zeros; an
    // observer whose vector is only noise must not count as used.
    let noise = SNAP_TOL * target.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(Some(
            observers
                .iter()
                .enumerate()
                .map(|(idx, &k)| {
                    let start = offsets[idx];
                    x[start..start + game.signal_matrix(k).rows()]
                        .iter()
                        .map(|&v| if v.abs() <= noise { 0.0 } else { v })
                        .collect()
                })
                .collect(),
        )),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("norm objective is bounded below"),
    }
}
