//! Beliefs about AI ability formed by projecting human inference onto it,
//! and the adoption decisions those beliefs support.
//!
//! - [`ability_model`]: success-rate models `p(θ, δ)`, task domains and
//!   difficulty projection.
//! - [`belief_engine`]: grid posteriors over ability and stochastic dominance.
//! - [`kl_equilibrium`]: KL-best beliefs, adoption equilibria and their
//!   classification against the task-by-task optimum.
//! - [`adoption_path`]: thresholds along an expanding technology frontier.
//! - [`reasonableness`]: scoring failed answers and learning from the scores.
//! - [`delegation_sim`]: Monte Carlo delegation episodes over two task pools.
//! - [`diagnostics`]: level, slope and error-belief distortion metrics.
//! - [`suites`]: randomised property suites.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ability_model;
pub mod adoption_path;
pub mod belief_engine;
pub mod delegation_sim;
pub mod diagnostics;
pub mod error;
pub mod kl_equilibrium;
pub mod reasonableness;
pub mod report;
pub mod suites;

pub use ability_model::{
    LinkKind, LookupTable, ProjectionConfig, ProjectionMode, SuccessModel, Task, TaskDomain,
};
pub use adoption_path::{BudgetFn, FrontierSpec, PathThresholds};
pub use belief_engine::{AbilityPrior, DifficultySource, Observation, ObservationSet, Outcome};
pub use delegation_sim::{
    AgentSpec, BeliefKind, DecisionRule, FinalAdoption, PoolBelief, PoolEnvironment,
};
pub use diagnostics::{BeliefRule, ItemOutcome};
pub use error::{Error, Result};
pub use kl_equilibrium::{
    AdoptionClass, Assignee, DelegationProfile, Distortion, EquilibriumRecord, TruthModel,
};
pub use reasonableness::{ReasonablenessModel, SimilarityTable};
pub use report::CheckReport;
