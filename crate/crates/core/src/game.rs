//! Finite partial-monitoring games: the loss matrix, the feedback matrix and
//! the signal matrices derived from it.
//!
//! Actions and outcomes are 0-indexed throughout the library. Human-facing
//! output (error messages, the CLI) numbers them from 1.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::GameError;

/// Tolerance on `Σp = 1` for a [`SimplexPoint`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// The on-disk game description.
///
/// ```json
/// { "name": "easy", "loss": [[1,1,0],[0,1,1],[1,0,1]],
///   "feedback": [["a","b","b"],["b","a","b"],["b","b","a"]] }
/// ```
///
/// Unknown fields (such as an `opponents` array) are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDescription {
    pub name: String,
    pub loss: Vec<Vec<f64>>,
    pub feedback: Vec<Vec<String>>,
}

impl GameDescription {
    pub fn from_json(text: &str) -> Result<Self, GameError> {
        serde_json::from_str(text).map_err(|e| GameError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, GameError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GameError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("game description serializes")
    }
}

/// Checks the shape invariants and that no two loss rows coincide.
///
/// Identical loss rows produce coinciding cells, for which the neighbor
/// relation is not defined, so they are rejected up front.
pub fn validate_game(desc: &GameDescription) -> Result<(), GameError> {
    let n = desc.loss.len();
    if n < 2 {
        return Err(GameError::ShapeMismatch(format!("need at least 2 actions, got {n}")));
    }
    if desc.feedback.len() != n {
        return Err(GameError::ShapeMismatch(format!(
            "loss has {n} rows but feedback has {}",
            desc.feedback.len()
        )));
    }
    let m = desc.loss[0].len();
    if m < 2 {
        return Err(GameError::ShapeMismatch(format!("need at least 2 outcomes, got {m}")));
    }
    for (i, (lrow, hrow)) in desc.loss.iter().zip(&desc.feedback).enumerate() {
        if lrow.len() != m || hrow.len() != m {
            return Err(GameError::ShapeMismatch(format!(
                "row {} has {} loss and {} feedback entries, expected {m}",
                i + 1,
                lrow.len(),
                hrow.len()
            )));
        }
        if let Some(x) = lrow.iter().find(|x| !x.is_finite()) {
            return Err(GameError::ShapeMismatch(format!("row {} has non-finite loss {x}", i + 1)));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if desc.loss[i] == desc.loss[j] {
                return Err(GameError::DuplicateLossRows(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// Signal matrix `S_i` of one action: which of the row's distinct symbols
/// each outcome produces.
///
/// Symbols are enumerated in order of first occurrence, left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalMatrix {
    pub action: usize,
    pub symbol_order: Vec<String>,
    /// `outcome_symbol[j]` is the row index of the 1 in column `j`.
    pub outcome_symbol: Vec<usize>,
}

impl SignalMatrix {
    fn from_row(action: usize, row: &[String]) -> Self {
        let mut symbol_order: Vec<String> = Vec::new();
        let outcome_symbol = row
            .iter()
            .map(|sym| match symbol_order.iter().position(|s| s == sym) {
                Some(k) => k,
                None => {
                    symbol_order.push(sym.clone());
                    symbol_order.len() - 1
                }
            })
            .collect();
        Self { action, symbol_order, outcome_symbol }
    }

    /// Number of distinct symbols `s_i`.
    pub fn rows(&self) -> usize {
        self.symbol_order.len()
    }

    pub fn outcomes(&self) -> usize {
        self.outcome_symbol.len()
    }

    pub fn entry(&self, row: usize, outcome: usize) -> f64 {
        if self.outcome_symbol[outcome] == row {
            1.0
        } else {
            0.0
        }
    }

    /// Dense `s_i × M` 0/1 matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|r| (0..self.outcomes()).map(|j| self.entry(r, j)).collect())
            .collect()
    }

    pub fn observe(&self, outcome: usize) -> Observation {
        Observation { symbol: self.outcome_symbol[outcome], width: self.rows() }
    }

    /// `S_i p`: the symbol distribution of this action under `p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        for (j, &k) in self.outcome_symbol.iter().enumerate() {
            out[k] += p[j];
        }
        out
    }

    /// `S_i^T v`: lift a vector over symbols back to outcomes.
    pub fn transpose_apply(&self, v: &[f64]) -> Vec<f64> {
        self.outcome_symbol.iter().map(|&k| v[k]).collect()
    }
}

/// What the learner sees after playing an action: the one-hot vector
/// `S_i e_j`, stored as the index of its single 1 and its length `s_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    pub symbol: usize,
    pub width: usize,
}

impl Observation {
    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.width];
        v[self.symbol] = 1.0;
        v
    }

    /// Recover an observation from an explicit one-hot vector.
    pub fn from_one_hot(v: &[f64]) -> Option<Self> {
        let mut symbol = None;
        for (k, &x) in v.iter().enumerate() {
            if x == 1.0 {
                if symbol.is_some() {
                    return None;
                }
                symbol = Some(k);
            } else if x != 0.0 {
                return None;
            }
        }
        symbol.map(|symbol| Observation { symbol, width: v.len() })
    }
}

/// A point of the probability simplex `Δ_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(p: Vec<f64>) -> Result<Self, GameError> {
        if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(GameError::NotInSimplex(format!("{p:?} has negative or non-finite entries")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(GameError::NotInSimplex(format!("{p:?} sums to {sum}")));
        }
        Ok(Self(p))
    }

    /// Accepts vectors summing to 1 within `tol` and rescales them.
    pub fn normalized(p: Vec<f64>, tol: f64) -> Result<Self, GameError> {
        if p.is_empty() || p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(GameError::NotInSimplex(format!("{p:?} has negative or non-finite entries")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(GameError::NotInSimplex(format!("{p:?} sums to {sum}")));
        }
        Ok(Self(p.into_iter().map(|x| x / sum).collect()))
    }

    pub fn vertex(m: usize, j: usize) -> Self {
        let mut p = vec![0.0; m];
        p[j] = 1.0;
        Self(p)
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = GameError;
    fn try_from(v: Vec<f64>) -> Result<Self, GameError> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Vec<f64> {
        p.0
    }
}

impl fmt::Display for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| format!("{x}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A validated partial-monitoring game `(L, H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    name: String,
    loss: Vec<Vec<f64>>,
    feedback: Vec<Vec<String>>,
    signals: Vec<SignalMatrix>,
}

impl Game {
    pub fn new(desc: GameDescription) -> Result<Self, GameError> {
        validate_game(&desc)?;
        let signals = desc
            .feedback
            .iter()
            .enumerate()
            .map(|(i, row)| SignalMatrix::from_row(i, row))
            .collect();
        Ok(Self { name: desc.name, loss: desc.loss, feedback: desc.feedback, signals })
    }

    pub fn from_matrices<S: Into<String>>(
        name: &str,
        loss: Vec<Vec<f64>>,
        feedback: Vec<Vec<S>>,
    ) -> Result<Self, GameError> {
        let feedback = feedback
            .into_iter()
            .map(|row| row.into_iter().map(Into::into).collect())
            .collect();
        Self::new(GameDescription { name: name.to_string(), loss, feedback })
    }

    pub fn description(&self) -> GameDescription {
        GameDescription {
            name: self.name.clone(),
            loss: self.loss.clone(),
            feedback: self.feedback.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of actions `N`.
    pub fn actions(&self) -> usize {
        self.loss.len()
    }

    /// Number of outcomes `M`.
    pub fn outcomes(&self) -> usize {
        self.loss[0].len()
    }

    /// Loss vector `ℓ_i`.
    pub fn loss_row(&self, i: usize) -> &[f64] {
        &self.loss[i]
    }

    pub fn loss(&self, i: usize, j: usize) -> f64 {
        self.loss[i][j]
    }

    pub fn feedback(&self, i: usize, j: usize) -> &str {
        &self.feedback[i][j]
    }

    /// `ℓ_i − ℓ_j`.
    pub fn loss_difference(&self, i: usize, j: usize) -> Vec<f64> {
        self.loss[i].iter().zip(&self.loss[j]).map(|(a, b)| a - b).collect()
    }

    pub fn signal_matrix(&self, i: usize) -> &SignalMatrix {
        &self.signals[i]
    }

    pub fn signal_matrices(&self) -> &[SignalMatrix] {
        &self.signals
    }

    /// `ℓ_i^T p`.
    pub fn expected_loss(&self, i: usize, p: &SimplexPoint) -> f64 {
        dot(&self.loss[i], p.as_slice())
    }

    /// `S_i e_j`.
    pub fn observe(&self, i: usize, j: usize) -> Observation {
        self.signals[i].observe(j)
    }

    /// Lowest-index action minimizing the expected loss under `p`.
    pub fn optimal_action(&self, p: &SimplexPoint) -> usize {
        let mut best = 0;
        let mut best_loss = f64::INFINITY;
        for i in 0..self.actions() {
            let l = self.expected_loss(i, p);
            if l < best_loss {
                best = i;
                best_loss = l;
            }
        }
        best
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
