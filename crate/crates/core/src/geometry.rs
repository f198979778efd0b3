//! Cell decomposition of the simplex, action classes, neighbor pairs and
//! observability.
//!
//! The cell of action `i` is `C_i = {p ∈ Δ_M : ℓ_i·p ≤ ℓ_k·p for all k}`.
//! Every dimension question about cells and their intersections is decided
//! with [`max_slack_point`]: a relatively open set given by strict
//! inequalities is nonempty exactly when the best common slack is positive.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::LpError;
use crate::game::{dot, Game};
use crate::lp::{
    max_slack_point, LinearConstraintSystem, LinearProgram, LpOutcome, Relation, SlackOutcome,
    DEFAULT_TOL_STRICT,
};

/// Residual threshold for "vector lies in a span".
pub const DEFAULT_TOL_SPAN: f64 = 1e-9;

/// An unordered pair of distinct actions, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    lo: usize,
    hi: usize,
}

impl Pair {
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "a pair needs two distinct actions");
        Self { lo: a.min(b), hi: a.max(b) }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn contains(&self, k: usize) -> bool {
        self.lo == k || self.hi == k
    }

    /// Every unordered pair over `0..n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Pair> {
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| Pair::new(i, j)))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.lo + 1, self.hi + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub strict: f64,
    pub span: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { strict: DEFAULT_TOL_STRICT, span: DEFAULT_TOL_SPAN }
    }
}

/// `C_i` as a constraint system: `(ℓ_k − ℓ_i)·p ≥ 0` for every `k ≠ i`.
pub fn cell_constraints(game: &Game, i: usize) -> LinearConstraintSystem {
    let mut sys = LinearConstraintSystem::new(game.outcomes());
    for k in (0..game.actions()).filter(|&k| k != i) {
        sys = sys.at_least(game.loss_difference(k, i), 0.0);
    }
    sys
}

/// `C_i ∩ C_j`: the cell of `i` plus `(ℓ_i − ℓ_j)·p = 0`.
pub fn boundary_constraints(game: &Game, pair: Pair) -> LinearConstraintSystem {
    cell_constraints(game, pair.lo()).equal(game.loss_difference(pair.lo(), pair.hi()), 0.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionClasses {
    pub pareto: Vec<usize>,
    pub dominated: Vec<usize>,
    pub degenerate: Vec<usize>,
}

/// Whether `C_i` is `(M−1)`-dimensional: all optimality constraints strict.
fn cell_is_full_dimensional(game: &Game, i: usize, tol: &Tolerances) -> Result<bool, LpError> {
    let mut sys = LinearConstraintSystem::new(game.outcomes());
    for k in (0..game.actions()).filter(|&k| k != i) {
        sys = sys.greater(game.loss_difference(k, i), 0.0);
    }
    Ok(max_slack_point(&sys)?.satisfiable(tol.strict))
}

/// Whether some point of the (nonempty) system has `a·p > 0`.
fn exceeds_somewhere(
    sys: &LinearConstraintSystem,
    a: Vec<f64>,
    tol: &Tolerances,
) -> Result<bool, LpError> {
    Ok(max_slack_point(&sys.clone().greater(a, 0.0))?.satisfiable(tol.strict))
}

/// Split actions into Pareto-optimal, dominated (empty cell) and degenerate
/// (lower-dimensional cell, or a cell strictly inside another one).
pub fn classify_actions(game: &Game, tol: &Tolerances) -> Result<ActionClasses, LpError> {
    let n = game.actions();
    let mut classes = ActionClasses::default();
    let mut full = vec![false; n];
    let mut nonempty = vec![false; n];
    for i in 0..n {
        nonempty[i] = max_slack_point(&cell_constraints(game, i))?.is_feasible();
        full[i] = nonempty[i] && cell_is_full_dimensional(game, i, tol)?;
    }
    for i in 0..n {
        if !nonempty[i] {
            classes.dominated.push(i);
            continue;
        }
        let mut strictly_inside = false;
        if full[i] {
            // C_i ⊆ C_k iff ℓ_k·p ≤ ℓ_i·p everywhere on C_i; strictness needs
            // C_k to reach beyond C_i somewhere.
            let cell = cell_constraints(game, i);
            for k in (0..n).filter(|&k| k != i && nonempty[k]) {
                let contained = !exceeds_somewhere(&cell, game.loss_difference(k, i), tol)?;
                if contained {
                    let reverse = !exceeds_somewhere(
                        &cell_constraints(game, k),
                        game.loss_difference(i, k),
                        tol,
                    )?;
                    if !reverse {
                        strictly_inside = true;
                        break;
                    }
                }
            }
        }
        if full[i] && !strictly_inside {
            classes.pareto.push(i);
        } else {
            classes.degenerate.push(i);
        }
    }
    Ok(classes)
}

/// Dimension of `{p ∈ Δ_M : h·p = 0}` is `M−2` iff the hyperplane crosses the
/// relative interior (h has entries of both signs) or cuts out exactly one
/// facet of the simplex (exactly one nonzero entry).
fn hyperplane_section_is_codim_one(h: &[f64]) -> bool {
    let pos = h.iter().filter(|&&x| x > 0.0).count();
    let neg = h.iter().filter(|&&x| x < 0.0).count();
    (pos > 0 && neg > 0) || pos + neg == 1
}

/// Coefficients `(a, b)` with `v = a·h + b·1` if `v` lies in that span.
fn in_span_of_direction_and_ones(v: &[f64], h: &[f64], tol: f64) -> Option<(f64, f64)> {
    let m = v.len();
    let basis = DMatrix::from_fn(m, 2, |r, c| if c == 0 { h[r] } else { 1.0 });
    let target = DVector::from_column_slice(v);
    let coef = basis.clone().svd(true, true).solve(&target, 1e-12).ok()?;
    let resid = (&basis * &coef - &target).amax();
    (resid <= tol).then(|| (coef[0], coef[1]))
}

/// Whether Pareto actions `i`, `j` are neighbors: `C_i ∩ C_j` is
/// `(M−2)`-dimensional.
///
/// Actions whose optimality constraint is constant on the hyperplane
/// `(ℓ_i − ℓ_j)·p = 0` keep a weak constraint; all others are made strict.
pub fn are_neighbors(game: &Game, pair: Pair, tol: &Tolerances) -> Result<bool, LpError> {
    let (i, j) = (pair.lo(), pair.hi());
    let h = game.loss_difference(i, j);
    if !hyperplane_section_is_codim_one(&h) {
        return Ok(false);
    }
    let mut sys = LinearConstraintSystem::new(game.outcomes()).equal(h.clone(), 0.0);
    for k in (0..game.actions()).filter(|&k| k != i && k != j) {
        let d = game.loss_difference(k, i);
        if in_span_of_direction_and_ones(&d, &h, tol.span).is_some() {
            sys = sys.at_least(d, 0.0);
        } else {
            sys = sys.greater(d, 0.0);
        }
    }
    let out = max_slack_point(&sys)?;
    Ok(match out {
        SlackOutcome::Infeasible => false,
        // Without any strict constraint the slack is capped, still positive.
        SlackOutcome::Feasible { .. } => out.satisfiable(tol.strict),
    })
}

/// `N⁺_{i,j} = {k : C_i ∩ C_j ⊆ C_k}`.
///
/// On `C_i ∩ C_j` action `i` is optimal, so `C_k` contains the boundary iff
/// `(ℓ_k − ℓ_i)·p > 0` has no solution there.
pub fn plus_set(game: &Game, pair: Pair, tol: &Tolerances) -> Result<Vec<usize>, LpError> {
    let boundary = boundary_constraints(game, pair);
    let mut set = Vec::new();
    for k in 0..game.actions() {
        if pair.contains(k)
            || !exceeds_somewhere(&boundary, game.loss_difference(k, pair.lo()), tol)?
        {
            set.push(k);
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Neighborhood {
    /// Sorted neighbor pairs.
    pub neighbors: Vec<Pair>,
    /// `plus_sets[n]` is `N⁺` of `neighbors[n]`, sorted.
    pub plus_sets: Vec<Vec<usize>>,
}

pub fn neighbor_structure(
    game: &Game,
    classes: &ActionClasses,
    tol: &Tolerances,
) -> Result<Neighborhood, LpError> {
    let mut hood = Neighborhood::default();
    for (a, &i) in classes.pareto.iter().enumerate() {
        for &j in &classes.pareto[a + 1..] {
            let pair = Pair::new(i, j);
            if are_neighbors(game, pair, tol)? {
                hood.plus_sets.push(plus_set(game, pair, tol)?);
                hood.neighbors.push(pair);
            }
        }
    }
    Ok(hood)
}

/// `‖A x* − target‖_∞` where the columns of `A` are the transposed signal
/// matrices of `actions` and `x*` is the least-squares solution.
pub fn signal_span_residual(game: &Game, actions: &[usize], target: &[f64]) -> f64 {
    let m = game.outcomes();
    let cols: Vec<(usize, usize)> = actions
        .iter()
        .flat_map(|&k| (0..game.signal_matrix(k).rows()).map(move |r| (k, r)))
        .collect();
    let t = DVector::from_column_slice(target);
    if cols.is_empty() {
        return t.amax();
    }
    let a = DMatrix::from_fn(m, cols.len(), |j, c| {
        let (k, r) = cols[c];
        game.signal_matrix(k).entry(r, j)
    });
    let x = a.clone().svd(true, true).solve(&t, 1e-12).expect("SVD with both factors");
    (&a * x - t).amax()
}

/// `target ∈ ⊕_{k ∈ actions} Im S_k^T`.
pub fn in_signal_span(game: &Game, actions: &[usize], target: &[f64], tol: &Tolerances) -> bool {
    signal_span_residual(game, actions, target) <= tol.span
}

/// Neighbor pairs whose loss difference is observable through `N⁺`.
pub fn local_observability(game: &Game, hood: &Neighborhood, tol: &Tolerances) -> Vec<Pair> {
    hood.neighbors
        .iter()
        .zip(&hood.plus_sets)
        .filter(|(pair, plus)| in_signal_span(game, plus, &game.loss_difference(pair.lo(), pair.hi()), tol))
        .map(|(pair, _)| *pair)
        .collect()
}

/// Every loss difference lies in the span of all transposed signal matrices.
pub fn globally_observable(game: &Game, tol: &Tolerances) -> bool {
    let all: Vec<usize> = (0..game.actions()).collect();
    Pair::all(game.actions())
        .all(|p| in_signal_span(game, &all, &game.loss_difference(p.lo(), p.hi()), tol))
}

/// Some action is optimal on the whole simplex: `ℓ_k − ℓ_i ≥ 0` at every
/// vertex for every `k`.
pub fn trivially_optimal_action(game: &Game) -> Option<usize> {
    (0..game.actions()).find(|&i| {
        (0..game.actions()).all(|k| game.loss_difference(k, i).iter().all(|&d| d >= 0.0))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameClass {
    Trivial,
    Easy,
    Hard,
    Hopeless,
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameClass::Trivial => "trivial",
            GameClass::Easy => "easy",
            GameClass::Hard => "hard",
            GameClass::Hopeless => "hopeless",
        })
    }
}

/// The complete cell/neighbor/observability structure of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStructure {
    pub actions: usize,
    pub outcomes: usize,
    pub pareto: Vec<usize>,
    pub dominated: Vec<usize>,
    pub degenerate: Vec<usize>,
    pub neighbors: Vec<Pair>,
    pub plus_sets: Vec<Vec<usize>>,
    pub locally_observable_pairs: Vec<Pair>,
    pub globally_observable: bool,
    pub trivial_action: Option<usize>,
}

impl CellStructure {
    pub fn analyze(game: &Game, tol: &Tolerances) -> Result<Self, LpError> {
        let classes = classify_actions(game, tol)?;
        let hood = neighbor_structure(game, &classes, tol)?;
        let locally_observable_pairs = local_observability(game, &hood, tol);
        Ok(Self {
            actions: game.actions(),
            outcomes: game.outcomes(),
            pareto: classes.pareto,
            dominated: classes.dominated,
            degenerate: classes.degenerate,
            neighbors: hood.neighbors,
            plus_sets: hood.plus_sets,
            locally_observable_pairs,
            globally_observable: globally_observable(game, tol),
            trivial_action: trivially_optimal_action(game),
        })
    }

    pub fn neighbor_index(&self, pair: Pair) -> Option<usize> {
        self.neighbors.binary_search(&pair).ok()
    }

    pub fn plus_set(&self, pair: Pair) -> Option<&[usize]> {
        self.neighbor_index(pair).map(|n| self.plus_sets[n].as_slice())
    }

    pub fn is_locally_observable(&self, pair: Pair) -> bool {
        self.locally_observable_pairs.binary_search(&pair).is_ok()
    }

    pub fn class(&self) -> GameClass {
        if self.trivial_action.is_some() {
            GameClass::Trivial
        } else if !self.globally_observable {
            GameClass::Hopeless
        } else if self.locally_observable_pairs.len() == self.neighbors.len() {
            GameClass::Easy
        } else {
            GameClass::Hard
        }
    }
}

pub fn classify_game(game: &Game, tol: &Tolerances) -> Result<GameClass, LpError> {
    Ok(CellStructure::analyze(game, tol)?.class())
}

/// Total-variation distance from `p` to the polytope `C_i ∩ C_j`, or `None`
/// when the two cells do not meet.
pub fn tv_distance_to_boundary(game: &Game, pair: Pair, p: &[f64]) -> Result<Option<f64>, LpError> {
    let sys = boundary_constraints(game, pair);
    tv_distance_to_system(&sys, p)
}

/// `min ½‖p − q‖₁` over points `q` of the constraint system (strict
/// inequalities are treated as weak).
pub fn tv_distance_to_system(sys: &LinearConstraintSystem, p: &[f64]) -> Result<Option<f64>, LpError> {
    let m = sys.dim;
    // Variables: q (m), u (m) with u ≥ |p − q|.
    let mut objective = vec![0.0; 2 * m];
    objective[m..].iter_mut().for_each(|c| *c = 0.5);
    let mut lp = LinearProgram::minimize(objective);
    let q_row = |a: &[f64]| {
        let mut v = a.to_vec();
        v.resize(2 * m, 0.0);
        v
    };
    lp.add(q_row(&vec![1.0; m]), Relation::Eq, 1.0);
    for (a, b) in &sys.equalities {
        lp.add(q_row(a), Relation::Eq, *b);
    }
    for (a, b) in sys.weak.iter().chain(&sys.strict) {
        lp.add(q_row(a), Relation::Ge, *b);
    }
    for r in 0..m {
        let mut up = vec![0.0; 2 * m];
        up[r] = -1.0;
        up[m + r] = 1.0;
        lp.add(up, Relation::Ge, -p[r]);
        let mut down = vec![0.0; 2 * m];
        down[r] = 1.0;
        down[m + r] = 1.0;
        lp.add(down, Relation::Ge, p[r]);
    }
    Ok(match lp.solve()? {
        LpOutcome::Optimal { value, .. } => Some(value.max(0.0)),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => return Err(LpError::NumericalFailure(0)),
    })
}

/// Lowest-index minimizer of `ℓ_i·p`.
pub fn argmin_action(game: &Game, p: &[f64]) -> usize {
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for i in 0..game.actions() {
        let l = dot(game.loss_row(i), p);
        if l < best_loss {
            best = i;
            best_loss = l;
        }
    }
    best
}
