//! Stochastic opponents, episode simulation and regret aggregation.
//!
//! Run `r` of a configuration is seeded with `base_seed + r`. The opponent
//! and the policy draw from separate ChaCha8 streams of that seed, so a run
//! is reproducible on its own and independent of how runs are scheduled
//! across threads.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::Analysis;
use crate::baselines::{FixedAction, UniformRandom};
use crate::cbp::CbpPolicy;
use crate::error::HarnessError;
use crate::game::{dot, Game, SimplexPoint};
use crate::geometry::GameClass;
use crate::policy::Policy;

/// Growth ratio of the checkpoint schedule.
pub const CHECKPOINT_RATIO: f64 = 1.2;

const OPPONENT_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;

/// i.i.d. outcome distribution, sampled by inverse CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentStrategy {
    p: SimplexPoint,
    cdf: Vec<f64>,
}

impl OpponentStrategy {
    pub fn new(p: SimplexPoint) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .as_slice()
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        Self { p, cdf }
    }

    pub fn point(&self) -> &SimplexPoint {
        &self.p
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        sample_outcome(&self.cdf, rng)
    }
}

/// Smallest `j` with `u < cdf[j]`; outcomes with zero mass are never drawn.
pub fn sample_outcome(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let last = cdf.len() - 1;
    cdf.iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| (0..=last).rev().find(|&j| j == 0 || cdf[j] > cdf[j - 1]).unwrap_or(last))
}

/// `1, ⌈1.2⌉, …` geometrically up to and including `horizon`.
pub fn geometric_checkpoints(horizon: u64, ratio: f64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut t = 1u64;
    while t < horizon {
        out.push(t);
        t = ((t as f64 * ratio).ceil() as u64).max(t + 1);
    }
    out.push(horizon);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Cbp { alpha: f64 },
    UniformRandom,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub analysis: Arc<Analysis>,
    pub policy: PolicySpec,
    pub opponent: OpponentStrategy,
    pub horizon: u64,
    pub runs: usize,
    pub base_seed: u64,
    pub checkpoints: Vec<u64>,
}

impl SimulationConfig {
    pub fn new(
        analysis: Arc<Analysis>,
        policy: PolicySpec,
        opponent: SimplexPoint,
        horizon: u64,
        runs: usize,
        base_seed: u64,
    ) -> Result<Self, HarnessError> {
        let config = Self {
            checkpoints: geometric_checkpoints(horizon, CHECKPOINT_RATIO),
            analysis,
            policy,
            opponent: OpponentStrategy::new(opponent),
            horizon,
            runs,
            base_seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let game = &self.analysis.game;
        if self.horizon < game.actions() as u64 {
            return Err(HarnessError::InvalidConfig(format!(
                "horizon {} is shorter than the {} initialization rounds",
                self.horizon,
                game.actions()
            )));
        }
        if self.runs == 0 {
            return Err(HarnessError::InvalidConfig("need at least one run".into()));
        }
        if self.opponent.point().dim() != game.outcomes() {
            return Err(HarnessError::InvalidConfig(format!(
                "opponent has {} entries, game has {} outcomes",
                self.opponent.point().dim(),
                game.outcomes()
            )));
        }
        if self.checkpoints.last() != Some(&self.horizon) || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::InvalidConfig("checkpoints must increase and end at the horizon".into()));
        }
        Ok(())
    }

    fn build_policy(&self, seed: u64) -> Result<Box<dyn Policy>, HarnessError> {
        let n = self.analysis.game.actions();
        Ok(match self.policy {
            PolicySpec::Cbp { alpha } => {
                if self.analysis.class() == GameClass::Hopeless {
                    return Err(HarnessError::Hopeless);
                }
                Box::new(CbpPolicy::with_alpha(self.analysis.clone(), alpha)?)
            }
            PolicySpec::UniformRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(POLICY_STREAM);
                Box::new(UniformRandom::new(n, rng))
            }
            PolicySpec::Fixed(i) => Box::new(FixedAction::new(i, n)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: u64,
    pub realized_regret: f64,
    pub pseudo_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub run_id: usize,
    pub checkpoints: Vec<Checkpoint>,
}

impl RegretTrace {
    pub fn last(&self) -> Checkpoint {
        *self.checkpoints.last().expect("nonempty trace")
    }
}

/// Play `policy` against `opponent` for `checkpoints.last()` rounds.
///
/// The policy sees only `observe(I_t, J_t)`.
pub fn run_policy(
    game: &Game,
    opponent: &OpponentStrategy,
    checkpoints: &[u64],
    policy: &mut dyn Policy,
    rng: &mut impl Rng,
    run_id: usize,
) -> Result<RegretTrace, HarnessError> {
    let p = opponent.point().as_slice();
    let expected: Vec<f64> = (0..game.actions()).map(|i| dot(game.loss_row(i), p)).collect();
    let best = expected.iter().copied().fold(f64::INFINITY, f64::min);
    let gaps: Vec<f64> = expected.iter().map(|l| l - best).collect();

    let horizon = *checkpoints.last().expect("nonempty schedule");
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut loss = 0.0;
    let mut pseudo = 0.0;
    for t in 1..=horizon {
        let action = policy.select()?;
        let outcome = opponent.sample(rng);
        policy.update(action, game.observe(action, outcome))?;
        loss += game.loss(action, outcome);
        pseudo += gaps[action];
        if t == checkpoints[next] {
            out.push(Checkpoint {
                t,
                realized_regret: loss - t as f64 * best,
                pseudo_regret: pseudo,
            });
            next += 1;
        }
    }
    Ok(RegretTrace { run_id, checkpoints: out })
}

fn run_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(OPPONENT_STREAM);
    rng
}

pub fn run_episode(config: &SimulationConfig, run_id: usize) -> Result<RegretTrace, HarnessError> {
    config.validate()?;
    let seed = config.base_seed.wrapping_add(run_id as u64);
    let mut policy = config.build_policy(seed)?;
    let mut rng = run_rng(seed);
    run_policy(&config.analysis.game, &config.opponent, &config.checkpoints, policy.as_mut(), &mut rng, run_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanPoint {
    pub t: u64,
    pub mean_pseudo_regret: f64,
    pub mean_realized_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigReport {
    pub config_id: usize,
    pub runs: Vec<RegretTrace>,
    pub mean: Vec<MeanPoint>,
}

impl ConfigReport {
    fn from_runs(config_id: usize, runs: Vec<RegretTrace>) -> Self {
        let r = runs.len() as f64;
        let mean = (0..runs[0].checkpoints.len())
            .map(|c| {
                let (ps, rs) = runs.iter().fold((0.0, 0.0), |(ps, rs), tr| {
                    (ps + tr.checkpoints[c].pseudo_regret, rs + tr.checkpoints[c].realized_regret)
                });
                MeanPoint { t: runs[0].checkpoints[c].t, mean_pseudo_regret: ps / r, mean_realized_regret: rs / r }
            })
            .collect();
        Self { config_id, runs, mean }
    }

    pub fn final_mean(&self) -> MeanPoint {
        *self.mean.last().expect("nonempty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub configs: Vec<ConfigReport>,
    /// Pointwise maximum over configurations of the mean pseudo-regret.
    pub max: Vec<(u64, f64)>,
}

/// Run every configuration, average over runs, and take the pointwise
/// maximum across configurations.
///
/// All runs of all configurations go through one parallel iterator; results
/// are folded in `(config, run)` order, so the report does not depend on the
/// thread count.
pub fn run_batch(configs: &[SimulationConfig]) -> Result<BatchReport, HarnessError> {
    let Some(first) = configs.first() else {
        return Err(HarnessError::InvalidConfig("no configurations".into()));
    };
    if configs.iter().any(|c| c.horizon != first.horizon || c.checkpoints != first.checkpoints) {
        return Err(HarnessError::MixedSchedules);
    }
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..c.runs).map(move |r| (ci, r)))
        .collect();
    let traces: Vec<RegretTrace> = jobs
        .par_iter()
        .map(|&(ci, r)| run_episode(&configs[ci], r))
        .collect::<Result<_, _>>()?;
    let mut traces = traces.into_iter();
    let reports: Vec<ConfigReport> = configs
        .iter()
        .enumerate()
        .map(|(ci, c)| ConfigReport::from_runs(ci, traces.by_ref().take(c.runs).collect()))
        .collect();
    let max = (0..first.checkpoints.len())
        .map(|k| {
            let m = reports.iter().map(|r| r.mean[k].mean_pseudo_regret).fold(f64::NEG_INFINITY, f64::max);
            (first.checkpoints[k], m)
        })
        .collect();
    Ok(BatchReport { configs: reports, max })
}

fn csv_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Csv(e.to_string())
}

impl BatchReport {
    /// `config_id,run_id,t,realized_regret,pseudo_regret`
    pub fn write_runs_csv(&self, w: impl Write) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["config_id", "run_id", "t", "realized_regret", "pseudo_regret"]).map_err(csv_err)?;
        for c in &self.configs {
            for run in &c.runs {
                for cp in &run.checkpoints {
                    w.write_record([
                        c.config_id.to_string(),
                        run.run_id.to_string(),
                        cp.t.to_string(),
                        cp.realized_regret.to_string(),
                        cp.pseudo_regret.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush().map_err(csv_err)
    }

    /// `config_id,t,mean_pseudo_regret,mean_realized_regret`
    pub fn write_aggregate_csv(&self, w: impl Write) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["config_id", "t", "mean_pseudo_regret", "mean_realized_regret"]).map_err(csv_err)?;
        for c in &self.configs {
            for m in &c.mean {
                w.write_record([
                    c.config_id.to_string(),
                    m.t.to_string(),
                    m.mean_pseudo_regret.to_string(),
                    m.mean_realized_regret.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush().map_err(csv_err)
    }

    /// `t,max_mean_pseudo_regret`
    pub fn write_max_csv(&self, w: impl Write) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["t", "max_mean_pseudo_regret"]).map_err(csv_err)?;
        for (t, m) in &self.max {
            w.write_record([t.to_string(), m.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(csv_err)
    }
}

/// Least-squares slope of `ln y` against `ln t` over checkpoints with
/// `lo ≤ t ≤ hi` and `y > 0`.
pub fn log_log_slope(points: &[(u64, f64)], lo: u64, hi: u64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, y)| *t >= lo && *t <= hi && *y > 0.0)
        .map(|(t, y)| ((*t as f64).ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}
