//! TOML run configuration. Every table and key is optional; command-line
//! flags override file values. Relative paths resolve against the directory
//! of the configuration file.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use hproj::adoption_path::BudgetFn;
use hproj::delegation_sim::AbilityPriorSpec;
use hproj::diagnostics::DifficultyScale;
use hproj::reasonableness::DEFAULT_SUPPORT;
use hproj::{
    BeliefKind, DecisionRule, FrontierSpec, LinkKind, LookupTable, SuccessModel, TaskDomain,
    TruthModel,
};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub model: ModelConfig,
    pub truth: TruthConfig,
    pub frontier: FrontierConfig,
    pub sim: SimConfig,
    pub reasonableness: ReasonablenessConfig,
    pub distortion: DistortionConfig,
    /// Whether the file had a `[model]` table.
    #[serde(skip)]
    pub model_section: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let bad = |e: toml::de::Error| CliError::Usage(format!("{}: {e}", path.display()));
        let mut cfg: RunConfig = toml::from_str(&text).map_err(bad)?;
        cfg.model_section = toml::from_str::<toml::Table>(&text)
            .map_err(bad)?
            .contains_key("model");
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        resolve(&mut cfg.out);
        resolve(&mut cfg.model.table);
        resolve(&mut cfg.reasonableness.similarity);
        resolve(&mut cfg.distortion.items);
        resolve(&mut cfg.distortion.beliefs);
        Ok(cfg)
    }
}

pub fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub link: LinkKind,
    pub discrimination: f64,
    /// CSV `theta,delta,p`, required for `link = "lookup"`.
    pub table: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            link: LinkKind::Logistic,
            discrimination: 1.0,
            table: None,
        }
    }
}

impl ModelConfig {
    /// With `checked = false` a lookup table is accepted even if it breaks the
    /// model axioms, so that `verify` can report the violation.
    pub fn build(&self, checked: bool) -> Result<SuccessModel, CliError> {
        match self.link {
            LinkKind::Lookup => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("lookup model needs `model.table`".into()))?;
                let table = LookupTable::from_csv(open(path)?)?;
                Ok(if checked {
                    SuccessModel::lookup(table)?
                } else {
                    SuccessModel::lookup_unchecked(table)
                })
            }
            kind => Ok(SuccessModel::parametric(kind, self.discrimination)?),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    pub human_theta: f64,
    /// Human success rates; difficulties are inferred from them.
    pub q_human: Option<Vec<f64>>,
    /// Explicit difficulties; alternative to `q_human`.
    pub deltas: Option<Vec<f64>>,
    pub q_ai: Vec<f64>,
    pub rewards: Option<Vec<f64>>,
}

impl Default for TruthConfig {
    fn default() -> Self {
        Self {
            human_theta: 0.0,
            q_human: None,
            deltas: None,
            q_ai: vec![0.66, 0.66],
            rewards: None,
        }
    }
}

impl TruthConfig {
    pub fn build(&self, model: SuccessModel) -> Result<TruthModel, CliError> {
        let truth = match (&self.q_human, &self.deltas) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "give either `truth.q_human` or `truth.deltas`, not both".into(),
                ))
            }
            (None, Some(d)) => TruthModel::new(
                model,
                TaskDomain::from_difficulties(d)?,
                self.human_theta,
                self.q_ai.clone(),
            )?,
            (q, None) => {
                let q = q.clone().unwrap_or_else(|| vec![0.78, 0.23]);
                TruthModel::from_human_rates(model, self.human_theta, &q, self.q_ai.clone())?
            }
        };
        Ok(match &self.rewards {
            Some(r) => truth.with_rewards(r)?,
            None => truth,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontierConfig {
    pub weights_a: Vec<f64>,
    /// Linear budget `b(τ) = rate·τ`.
    pub rate: Option<f64>,
    /// Tabulated budget, used when `rate` is absent.
    pub budget_taus: Option<Vec<f64>>,
    pub budget_values: Option<Vec<f64>>,
    /// Defaults to `Σa / rate` for linear budgets.
    pub tau_bar: Option<f64>,
    pub tau_points: usize,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        Self {
            weights_a: vec![2.0, 1.0],
            rate: Some(3.0),
            budget_taus: None,
            budget_values: None,
            tau_bar: None,
            tau_points: 101,
        }
    }
}

impl FrontierConfig {
    pub fn build(&self) -> Result<FrontierSpec, CliError> {
        let total: f64 = self.weights_a.iter().sum();
        let (budget, default_bar) = match (self.rate, &self.budget_taus, &self.budget_values) {
            (Some(c), None, None) => (BudgetFn::linear(c)?, total / c),
            (None, Some(t), Some(v)) => (
                BudgetFn::tabulated(t.clone(), v.clone())?,
                *t.last().unwrap(),
            ),
            _ => {
                return Err(CliError::Usage(
                    "frontier needs either `rate` or both `budget_taus` and `budget_values`".into(),
                ))
            }
        };
        Ok(FrontierSpec::new(
            self.weights_a.clone(),
            budget,
            self.tau_bar.unwrap_or(default_bar),
        )?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub agent: BeliefKind,
    pub exploration: f64,
    pub decision_rule: DecisionRule,
    pub ability_prior: AbilityPriorSpec,
    pub pool_grid_points: usize,
    pub episodes: usize,
    pub rounds_per_pool: usize,
    pub human: [f64; 2],
    pub ai: [f64; 2],
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            agent: BeliefKind::SingleIndexHp,
            exploration: 0.1,
            decision_rule: DecisionRule::KlPointBelief,
            ability_prior: AbilityPriorSpec::Uniform,
            pool_grid_points: hproj::delegation_sim::DEFAULT_POOL_GRID,
            episodes: 1000,
            rounds_per_pool: 30,
            human: [0.78, 0.23],
            ai: [0.66, 0.66],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReasonablenessConfig {
    pub support: Vec<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    /// Previously observed scores.
    pub scores: Vec<f64>,
    /// Square similarity CSV; with `useful` and `answer`, scores one answer.
    pub similarity: Option<PathBuf>,
    pub useful: Vec<String>,
    pub answer: Option<String>,
}

impl Default for ReasonablenessConfig {
    fn default() -> Self {
        Self {
            support: DEFAULT_SUPPORT.to_vec(),
            theta_min: -3.0,
            theta_max: 3.0,
            theta_points: 61,
            scores: Vec::new(),
            similarity: None,
            useful: Vec::new(),
            answer: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortionConfig {
    /// CSV `item_id,difficulty,correct`.
    pub items: Option<PathBuf>,
    /// CSV `item_id,difficulty,belief`; fitted by least squares.
    pub beliefs: Option<PathBuf>,
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    pub scale: DifficultyScale,
    pub clamp: bool,
}

impl Default for DistortionConfig {
    fn default() -> Self {
        Self {
            items: None,
            beliefs: None,
            intercept: None,
            slope: None,
            scale: DifficultyScale::Unit,
            clamp: true,
        }
    }
}
