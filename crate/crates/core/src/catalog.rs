//! Benchmark games and opponent sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, LpError};
use crate::game::{Game, SimplexPoint};
use crate::geometry::{tv_distance_to_boundary, CellStructure, Pair};

/// Benign opponents keep at least this TV distance from every boundary
/// between neighbors that are not locally observable.
pub const BENIGN_MIN_DISTANCE: f64 = 0.1;
/// Harsh opponents are at most this far from at least one such boundary.
pub const HARSH_MAX_DISTANCE: f64 = 0.01;
pub const OPPONENTS_PER_SETTING: usize = 15;

/// The 3×3 locally observable game:
/// `L = [[1,1,0],[0,1,1],[1,0,1]]`, `H = [[a,b,b],[b,a,b],[b,b,a]]`.
pub fn easy_game() -> Game {
    Game::from_matrices(
        "easy",
        vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0]],
        vec![vec!["a", "b", "b"], vec!["b", "a", "b"], vec!["b", "b", "a"]],
    )
    .expect("easy game is valid")
}

/// Discretized dynamic pricing with `n` prices and no-sale cost `c`.
///
/// Row `i` is the seller's price, column `j` the buyer's threshold: the
/// seller loses `c` if `j < i` (no sale, feedback `n`) and `j − i` otherwise
/// (sale below the buyer's maximum, feedback `y`).
pub fn dynamic_pricing(n: usize, m: usize, c: f64) -> Result<Game, GameError> {
    if n != m || n < 2 {
        return Err(GameError::BadShape(format!("dynamic pricing needs N = M ≥ 2, got {n}×{m}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(GameError::BadShape(format!("no-sale cost must be positive, got {c}")));
    }
    let loss = (0..n)
        .map(|i| (0..m).map(|j| if j < i { c } else { (j - i) as f64 }).collect())
        .collect();
    let feedback = (0..n)
        .map(|i| (0..m).map(|j| if j < i { "n" } else { "y" }).collect())
        .collect();
    Game::from_matrices(&format!("dynamic-pricing:{n},{m},{c}"), loss, feedback)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpponentLabel {
    Benign,
    Harsh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledOpponent {
    pub label: OpponentLabel,
    pub p: SimplexPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSetting {
    pub name: String,
    pub game: Game,
    pub opponents: Vec<LabeledOpponent>,
}

impl NamedSetting {
    /// The game description plus an `opponents` array.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self.game.description()).expect("serializable");
        v["setting"] = serde_json::Value::String(self.name.clone());
        v["opponents"] = serde_json::to_value(&self.opponents).expect("serializable");
        v
    }
}

// Generated by `generate_opponents` with seed 0; a unit test regenerates
// them and checks that they match.
const DP_BENIGN: [[f64; 5]; 15] = include!("data/dp_benign.in");
const DP_HARSH: [[f64; 5]; 15] = include!("data/dp_harsh.in");
const EASY_POINTS: [[f64; 3]; 15] = include!("data/easy.in");
const EASY_HARSH_COUNT: usize = 5;

fn labeled<const M: usize>(points: &[[f64; M]], label: impl Fn(usize) -> OpponentLabel) -> Vec<LabeledOpponent> {
    points
        .iter()
        .enumerate()
        .map(|(k, p)| LabeledOpponent {
            label: label(k),
            p: SimplexPoint::normalized(p.to_vec(), 1e-9).expect("committed point is in the simplex"),
        })
        .collect()
}

pub fn benign_setting() -> NamedSetting {
    NamedSetting {
        name: "benign".into(),
        game: dynamic_pricing(5, 5, 2.0).expect("valid"),
        opponents: labeled(&DP_BENIGN, |_| OpponentLabel::Benign),
    }
}

pub fn harsh_setting() -> NamedSetting {
    NamedSetting {
        name: "harsh".into(),
        game: dynamic_pricing(5, 5, 2.0).expect("valid"),
        opponents: labeled(&DP_HARSH, |_| OpponentLabel::Harsh),
    }
}

/// Ten opponents well inside cells, then five close to a cell boundary.
pub fn easy_setting() -> NamedSetting {
    NamedSetting {
        name: "easy".into(),
        game: easy_game(),
        opponents: labeled(&EASY_POINTS, |k| {
            if k >= OPPONENTS_PER_SETTING - EASY_HARSH_COUNT {
                OpponentLabel::Harsh
            } else {
                OpponentLabel::Benign
            }
        }),
    }
}

pub fn benchmark_settings() -> Vec<NamedSetting> {
    vec![benign_setting(), harsh_setting(), easy_setting()]
}

pub fn setting_by_name(name: &str) -> Option<NamedSetting> {
    match name {
        "benign" => Some(benign_setting()),
        "harsh" => Some(harsh_setting()),
        "easy" => Some(easy_setting()),
        _ => None,
    }
}

/// Smallest TV distance from `p` to a boundary `C_i ∩ C_j` over `pairs`.
pub fn distance_to_boundaries(game: &Game, pairs: &[Pair], p: &[f64]) -> Result<f64, LpError> {
    let mut best = f64::INFINITY;
    for &pair in pairs {
        if let Some(d) = tv_distance_to_boundary(game, pair, p)? {
            best = best.min(d);
        }
    }
    Ok(best)
}

/// Neighbor pairs that are not locally observable.
pub fn dangerous_pairs(cs: &CellStructure) -> Vec<Pair> {
    cs.neighbors.iter().copied().filter(|p| !cs.is_locally_observable(*p)).collect()
}

/// Uniform draw from the simplex, rounded to 4 decimals (renormalized on the
/// last coordinate) so that the committed constants are short.
fn uniform_simplex_point(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    let mut p: Vec<f64> = e.iter().map(|x| (x / s * 1e4).round() / 1e4).collect();
    let head: f64 = p[..m - 1].iter().sum();
    p[m - 1] = ((1.0 - head) * 1e4).round() / 1e4;
    p
}

/// Rejection-sample `count` points of `Δ_M` accepted by `accept`.
pub fn generate_opponents(
    m: usize,
    count: usize,
    seed: u64,
    mut accept: impl FnMut(&[f64]) -> Result<bool, LpError>,
) -> Result<Vec<Vec<f64>>, LpError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = uniform_simplex_point(m, &mut rng);
        if p.iter().all(|&x| x >= 0.0) && accept(&p)? {
            out.push(p);
        }
    }
    Ok(out)
}

type Points = Vec<Vec<f64>>;

/// Regenerate the committed opponent sets: `(benign, harsh, easy)`.
pub fn regenerate_settings() -> Result<(Points, Points, Points), LpError> {
    let tol = crate::geometry::Tolerances::default();
    let dp = dynamic_pricing(5, 5, 2.0).expect("valid");
    let cs = CellStructure::analyze(&dp, &tol)?;
    let danger = dangerous_pairs(&cs);
    let benign = generate_opponents(5, OPPONENTS_PER_SETTING, 0, |p| {
        Ok(distance_to_boundaries(&dp, &danger, p)? >= BENIGN_MIN_DISTANCE)
    })?;
    let harsh = generate_opponents(5, OPPONENTS_PER_SETTING, 0, |p| {
        Ok(distance_to_boundaries(&dp, &danger, p)? <= HARSH_MAX_DISTANCE)
    })?;

    let easy = easy_game();
    let ecs = CellStructure::analyze(&easy, &tol)?;
    let mut inner = 0;
    let mut near = 0;
    let mut points = generate_opponents(3, OPPONENTS_PER_SETTING, 0, |p| {
        let d = distance_to_boundaries(&easy, &ecs.neighbors, p)?;
        if d >= 0.05 && inner < OPPONENTS_PER_SETTING - EASY_HARSH_COUNT {
            inner += 1;
            Ok(true)
        } else if d <= 0.02 && near < EASY_HARSH_COUNT {
            near += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    })?;
    // Inner points first, then the near-boundary ones.
    points.sort_by_key(|p| distance_to_boundaries(&easy, &ecs.neighbors, p).map(|d| d <= 0.02).unwrap_or(false));
    Ok((benign, harsh, points))
}
