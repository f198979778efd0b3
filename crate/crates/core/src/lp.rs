//! Small dense linear programs.
//!
//! Every geometric question in the library (is a cell full-dimensional, do two
//! cells share a facet, does a cell meet the open polytope carved out by the
//! confident half-spaces) is answered with one primitive: [`max_slack_point`],
//! which maximizes the common slack of a set of strict inequalities over the
//! probability simplex. The programs involved have at most a few dozen rows,
//! so a dense two-phase simplex with Bland's rule is plenty.

use crate::error::LpError;

/// Strict systems are satisfiable iff their optimal slack exceeds this.
pub const DEFAULT_TOL_STRICT: f64 = 1e-9;

/// Upper bound placed on the slack variable so that systems without strict
/// inequalities stay bounded.
pub const SLACK_CAP: f64 = 1.0;

const PIVOT_EPS: f64 = 1e-12;
const PHASE_ONE_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// A linear program over variables that are nonnegative unless marked free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    maximize: bool,
    free: Vec<bool>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, maximize: true, free: vec![false; n], rows: Vec::new() }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, maximize: false, free: vec![false; n], rows: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.vars());
        self.rows.push((coeffs, rel, rhs));
    }

    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        // Column layout: one column per nonnegative variable, two per free
        // variable (x = x⁺ − x⁻), then slack/surplus columns, then artificials.
        let mut col_of = Vec::with_capacity(self.vars());
        let mut n_struct = 0;
        for &f in &self.free {
            col_of.push(n_struct);
            n_struct += if f { 2 } else { 1 };
        }
        let n_slack = self.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let m = self.rows.len();
        let art_start = n_struct + n_slack;

        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut n_art = 0;
        let mut slack_col = n_struct;
        for (coeffs, rel, rhs) in &self.rows {
            let mut row = vec![0.0; art_start];
            for (v, &a) in coeffs.iter().enumerate() {
                row[col_of[v]] = a;
                if self.free[v] {
                    row[col_of[v] + 1] = -a;
                }
            }
            let mut b = *rhs;
            let mut rel = *rel;
            if rel != Relation::Eq {
                row[slack_col] = if rel == Relation::Le { 1.0 } else { -1.0 };
                slack_col += 1;
            }
            if b < 0.0 {
                row.iter_mut().for_each(|x| *x = -*x);
                b = -b;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            row.push(b);
            if rel == Relation::Le {
                // The slack column of this row carries +1 after the sign flip.
                let sc = (n_struct..art_start).find(|&c| row[c] == 1.0).expect("slack column");
                basis.push(sc);
            } else {
                basis.push(usize::MAX);
                n_art += 1;
            }
            rows.push(row);
        }

        // Insert artificial columns before the rhs.
        let width = art_start + n_art;
        let mut next_art = art_start;
        for (r, row) in rows.iter_mut().enumerate() {
            let rhs = row.pop().expect("rhs");
            row.resize(width, 0.0);
            if basis[r] == usize::MAX {
                row[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            row.push(rhs);
        }
        let mut tab = Tableau { rows, basis, width };

        // Phase one: minimize the sum of artificials.
        if n_art > 0 {
            let mut cost = vec![0.0; width];
            cost[art_start..width].iter_mut().for_each(|c| *c = 1.0);
            let mut z = tab.reduced_costs(&cost);
            if tab.run(&mut z, width)? {
                unreachable!("phase one is bounded below by zero");
            }
            if -z[width] > PHASE_ONE_TOL {
                return Ok(LpOutcome::Infeasible);
            }
            tab.drive_out_artificials(art_start);
        }

        // Phase two on the real objective, in minimization form.
        let sign = if self.maximize { -1.0 } else { 1.0 };
        let mut cost = vec![0.0; width];
        for (v, &c) in self.objective.iter().enumerate() {
            cost[col_of[v]] = sign * c;
            if self.free[v] {
                cost[col_of[v] + 1] = -sign * c;
            }
        }
        let mut z = tab.reduced_costs(&cost);
        if tab.run(&mut z, art_start)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut cols = vec![0.0; width];
        for (r, &b) in tab.basis.iter().enumerate() {
            cols[b] = tab.rows[r][width];
        }
        let x: Vec<f64> = (0..self.vars())
            .map(|v| {
                let c = col_of[v];
                if self.free[v] {
                    cols[c] - cols[c + 1]
                } else {
                    cols[c]
                }
            })
            .collect();
        let value = self.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpOutcome::Optimal { x, value })
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    /// Reduced-cost row for `cost`; the last entry holds minus the objective.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z = cost.to_vec();
        z.push(0.0);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (zc, a) in z.iter_mut().zip(&self.rows[r]) {
                    *zc -= cb * a;
                }
            }
        }
        z
    }

    fn pivot(&mut self, z: &mut [f64], r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|x| *x /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (x, a) in row.iter_mut().zip(&pivot_row) {
                        *x -= f * a;
                    }
                    row[c] = 0.0;
                }
            }
        }
        let f = z[c];
        if f != 0.0 {
            for (x, a) in z.iter_mut().zip(&pivot_row) {
                *x -= f * a;
            }
            z[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Bland's-rule simplex over columns `< allowed`. Returns `true` when
    /// the objective is unbounded.
    fn run(&mut self, z: &mut [f64], allowed: usize) -> Result<bool, LpError> {
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..allowed).find(|&c| z[c] < -PIVOT_EPS) else {
                return Ok(false);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_EPS {
                    let ratio = row[self.width] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - PIVOT_EPS
                                || (ratio <= lratio + PIVOT_EPS && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(true),
                Some((r, _)) => self.pivot(z, r, c),
            }
        }
        Err(LpError::NumericalFailure(MAX_PIVOTS))
    }

    /// After a feasible phase one, pivot remaining artificial basics out or
    /// drop their (redundant) rows.
    fn drive_out_artificials(&mut self, art_start: usize) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= art_start {
                let col = (0..art_start)
                    .filter(|&c| self.rows[r][c].abs() > 1e-9)
                    .max_by(|&a, &b| self.rows[r][a].abs().total_cmp(&self.rows[r][b].abs()));
                match col {
                    Some(c) => {
                        let mut dummy = vec![0.0; self.width + 1];
                        self.pivot(&mut dummy, r, c);
                    }
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }
}

/// Linear constraints on a point `p` of the simplex `Δ_M`. The simplex
/// constraints `p ≥ 0`, `Σp = 1` are always implied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearConstraintSystem {
    pub dim: usize,
    /// `a·p = b`
    pub equalities: Vec<(Vec<f64>, f64)>,
    /// `a·p ≥ b`
    pub weak: Vec<(Vec<f64>, f64)>,
    /// `a·p > b`
    pub strict: Vec<(Vec<f64>, f64)>,
}

impl LinearConstraintSystem {
    pub fn new(dim: usize) -> Self {
        Self { dim, ..Default::default() }
    }

    pub fn equal(mut self, a: Vec<f64>, b: f64) -> Self {
        debug_assert_eq!(a.len(), self.dim);
        self.equalities.push((a, b));
        self
    }

    pub fn at_least(mut self, a: Vec<f64>, b: f64) -> Self {
        debug_assert_eq!(a.len(), self.dim);
        self.weak.push((a, b));
        self
    }

    pub fn greater(mut self, a: Vec<f64>, b: f64) -> Self {
        debug_assert_eq!(a.len(), self.dim);
        self.strict.push((a, b));
        self
    }

    /// Whether `p` satisfies the equalities and weak inequalities (and lies
    /// in the simplex) up to `tol`. Strict inequalities are checked as weak.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        let dot = |a: &[f64]| a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>();
        p.iter().all(|&x| x >= -tol)
            && (p.iter().sum::<f64>() - 1.0).abs() <= tol
            && self.equalities.iter().all(|(a, b)| (dot(a) - b).abs() <= tol)
            && self.weak.iter().chain(&self.strict).all(|(a, b)| dot(a) >= b - tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlackOutcome {
    /// Equalities and weak inequalities cannot hold together on the simplex.
    Infeasible,
    /// Maximizer `point` with optimal common slack `slack` (capped at
    /// [`SLACK_CAP`]).
    Feasible { point: Vec<f64>, slack: f64 },
}

impl SlackOutcome {
    /// The strict system is deemed satisfiable iff the slack exceeds `tol`.
    pub fn satisfiable(&self, tol: f64) -> bool {
        matches!(self, SlackOutcome::Feasible { slack, .. } if *slack > tol)
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, SlackOutcome::Feasible { .. })
    }
}

/// Maximize `s` subject to the equalities, the weak inequalities,
/// `a·p ≥ b + s` for every strict inequality, `p ∈ Δ_M` and `s ≤ 1`.
pub fn max_slack_point(sys: &LinearConstraintSystem) -> Result<SlackOutcome, LpError> {
    let m = sys.dim;
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    lp.set_free(m);
    let ext = |a: &[f64], s: f64| {
        let mut v = a.to_vec();
        v.push(s);
        v
    };
    lp.add(ext(&vec![1.0; m], 0.0), Relation::Eq, 1.0);
    for (a, b) in &sys.equalities {
        lp.add(ext(a, 0.0), Relation::Eq, *b);
    }
    for (a, b) in &sys.weak {
        lp.add(ext(a, 0.0), Relation::Ge, *b);
    }
    for (a, b) in &sys.strict {
        lp.add(ext(a, -1.0), Relation::Ge, *b);
    }
    let mut cap = vec![0.0; m + 1];
    cap[m] = 1.0;
    lp.add(cap, Relation::Le, SLACK_CAP);
    match lp.solve()? {
        LpOutcome::Optimal { mut x, value } => {
            x.truncate(m);
            Ok(SlackOutcome::Feasible { point: x, slack: value })
        }
        LpOutcome::Infeasible => Ok(SlackOutcome::Infeasible),
        // s is capped and p lives in a bounded set.
        LpOutcome::Unbounded => Err(LpError::NumericalFailure(0)),
    }
}
