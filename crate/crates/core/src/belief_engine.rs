//! Bayesian updating over latent ability on a fixed grid.
//!
//! Beliefs are discrete distributions on a strictly increasing `θ` grid.
//! Likelihoods are accumulated in log space and renormalised after a max
//! shift, so long observation sets do not underflow.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ability_model::{project_difficulty, ProjectionConfig, SuccessModel, TaskDomain};
use crate::error::{ensure_finite, ensure_strictly_increasing, Error, Result};
use crate::report::CheckReport;

/// Tolerance on the total mass of a prior.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Slack on pointwise CDF comparisons.
pub const FOSD_SLACK: f64 = 1e-12;
/// Shifted mass below which a posterior is declared degenerate.
const DEGENERATE_MASS: f64 = 1e-300;

/// Discrete distribution over ability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbilityPrior {
    grid: Vec<f64>,
    weights: Vec<f64>,
}

impl AbilityPrior {
    /// Weights must be non-negative and sum to one within [`WEIGHT_SUM_TOL`].
    pub fn new(grid: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::validate_shape(&grid, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Input(format!("prior weights sum to {total}, not 1")));
        }
        Ok(Self { grid, weights })
    }

    /// Normalises arbitrary non-negative weights.
    pub fn from_unnormalized(grid: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::validate_shape(&grid, &weights)?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Input("prior weights have no mass".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { grid, weights })
    }

    pub fn uniform(grid: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        Self::from_unnormalized(grid, vec![1.0; n])
    }

    /// All mass on the grid point equal to `theta`.
    pub fn point_mass(grid: Vec<f64>, theta: f64) -> Result<Self> {
        let idx = grid
            .iter()
            .position(|&t| t == theta)
            .ok_or_else(|| Error::Input(format!("theta {theta} is not a grid point")))?;
        let mut weights = vec![0.0; grid.len()];
        weights[idx] = 1.0;
        Self::new(grid, weights)
    }

    /// Normal density evaluated on the grid and renormalised.
    pub fn discretized_normal(grid: Vec<f64>, mean: f64, sd: f64) -> Result<Self> {
        ensure_finite("prior mean", mean)?;
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::Input(format!("prior sd must be positive, got {sd}")));
        }
        let weights = grid
            .iter()
            .map(|&t| (-0.5 * ((t - mean) / sd).powi(2)).exp())
            .collect();
        Self::from_unnormalized(grid, weights)
    }

    fn validate_shape(grid: &[f64], weights: &[f64]) -> Result<()> {
        ensure_strictly_increasing("ability grid", grid, 2)?;
        if weights.len() != grid.len() {
            return Err(Error::Input(format!(
                "{} weights for a grid of {} points",
                weights.len(),
                grid.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Input(format!(
                "prior weight {w} is negative or not finite"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of grid points carrying positive mass.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    pub fn is_degenerate(&self) -> bool {
        self.support_size() <= 1
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| t * w)
            .sum()
    }

    /// Grid point with the largest weight (the first one on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        self.grid[best]
    }

    pub fn expectation<F: FnMut(f64) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&t, &w) in self.grid.iter().zip(&self.weights) {
            if w > 0.0 {
                acc += w * f(t)?;
            }
        }
        Ok(acc)
    }

    /// Bayes update on observations given directly as `(difficulty, outcome)`.
    pub fn update(&self, model: &SuccessModel, observations: &[(f64, Outcome)]) -> Result<Self> {
        if observations.is_empty() {
            return Ok(self.clone());
        }
        self.reweight(|theta| {
            let mut acc = 0.0;
            for &(delta, outcome) in observations {
                let (ls, lf) = model.log_rates(theta, delta)?;
                acc += match outcome {
                    Outcome::Success => ls,
                    Outcome::Failure => lf,
                };
            }
            Ok(acc)
        })
    }

    /// Bayes update with an arbitrary log-likelihood `θ ↦ ln L(θ)`.
    pub fn reweight<F: FnMut(f64) -> Result<f64>>(&self, mut log_likelihood: F) -> Result<Self> {
        let mut log_w = Vec::with_capacity(self.grid.len());
        for (&theta, &w) in self.grid.iter().zip(&self.weights) {
            log_w.push(if w > 0.0 {
                w.ln() + log_likelihood(theta)?
            } else {
                f64::NEG_INFINITY
            });
        }
        let weights = normalize_log_weights(&log_w)?;
        Ok(Self {
            grid: self.grid.clone(),
            weights,
        })
    }
}

/// Exponentiates log-weights after a max shift and renormalises.
pub(crate) fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegeneratePosterior);
    }
    let mut w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    if !(total >= DEGENERATE_MASS) {
        return Err(Error::DegeneratePosterior);
    }
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    pub fn from_bool(success: bool) -> Self {
        if success {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }

    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub task_id: String,
    pub outcome: Outcome,
}

/// Observed performance, one entry per attempted task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub items: Vec<Observation>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(task_id: impl Into<String>, outcome: Outcome) -> Self {
        Self {
            items: vec![Observation {
                task_id: task_id.into(),
                outcome,
            }],
        }
    }

    pub fn push(&mut self, task_id: impl Into<String>, outcome: Outcome) -> &mut Self {
        self.items.push(Observation {
            task_id: task_id.into(),
            outcome,
        });
        self
    }

    pub fn concat(&self, other: &ObservationSet) -> ObservationSet {
        let mut items = self.items.clone();
        items.extend(other.items.iter().cloned());
        ObservationSet { items }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Which difficulty the believer attaches to an observed task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DifficultySource {
    /// Human difficulty (beliefs about a human, or full projection).
    Human,
    /// Projected AI difficulty per the configuration.
    AiProjected(ProjectionConfig),
    /// True AI difficulty; a correctly specified believer.
    AiTrue,
}

/// Difficulty the believer assigns to task `id` under `source`.
pub fn perceived_difficulty(
    domain: &TaskDomain,
    id: &str,
    source: DifficultySource,
) -> Result<f64> {
    let task = domain
        .task(id)
        .ok_or_else(|| Error::Input(format!("unknown task id `{id}`")))?;
    let ai = || {
        task.ai_difficulty
            .ok_or_else(|| Error::Input(format!("task `{id}` has no AI difficulty")))
    };
    match source {
        DifficultySource::Human => Ok(task.human_difficulty),
        DifficultySource::AiTrue => ai(),
        DifficultySource::AiProjected(cfg) => match cfg.mode {
            crate::ability_model::ProjectionMode::FullProjection => Ok(task.human_difficulty),
            _ => project_difficulty(&cfg, task.human_difficulty, ai()?),
        },
    }
}

/// `π(δ) = Σ_k w_k · p(θ_k, δ)`, the prior expected success rate.
pub fn prior_expected_success(
    prior: &AbilityPrior,
    model: &SuccessModel,
    delta: f64,
) -> Result<f64> {
    prior.expectation(|t| model.success_rate(t, delta))
}

/// Posterior over ability after observing `data`.
pub fn posterior(
    prior: &AbilityPrior,
    model: &SuccessModel,
    domain: &TaskDomain,
    data: &ObservationSet,
    source: DifficultySource,
) -> Result<AbilityPrior> {
    let observations = data
        .items
        .iter()
        .map(|o| Ok((perceived_difficulty(domain, &o.task_id, source)?, o.outcome)))
        .collect::<Result<Vec<_>>>()?;
    prior.update(model, &observations)
}

/// Posterior expected success rate on a task of difficulty `target_delta`.
pub fn posterior_expected_success(
    prior: &AbilityPrior,
    model: &SuccessModel,
    domain: &TaskDomain,
    data: &ObservationSet,
    source: DifficultySource,
    target_delta: f64,
) -> Result<f64> {
    let post = posterior(prior, model, domain, data, source)?;
    prior_expected_success(&post, model, target_delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FosdViolation {
    pub theta: f64,
    pub cdf_dominant: f64,
    pub cdf_dominated: f64,
}

impl fmt::Display for FosdViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CDF of the dominant belief exceeds the other at theta={}: {} > {}",
            self.theta, self.cdf_dominant, self.cdf_dominated
        )
    }
}

/// Checks that `dominant` first-order stochastically dominates `dominated`:
/// `F_a(θ) ≤ F_b(θ) + 1e−12` at every grid point.
pub fn fosd_compare(
    dominant: &AbilityPrior,
    dominated: &AbilityPrior,
) -> Result<CheckReport<FosdViolation>> {
    if dominant.grid != dominated.grid {
        return Err(Error::Input(
            "beliefs are defined on different grids".into(),
        ));
    }
    let (ca, cb) = (dominant.cdf(), dominated.cdf());
    for (k, (a, b)) in ca.iter().zip(&cb).enumerate() {
        if *a > *b + FOSD_SLACK {
            return Ok(CheckReport::fail(
                k + 1,
                FosdViolation {
                    theta: dominant.grid[k],
                    cdf_dominant: *a,
                    cdf_dominated: *b,
                },
            ));
        }
    }
    Ok(CheckReport::pass(ca.len()))
}
