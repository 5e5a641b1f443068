//! Berk-Nash adoption equilibria under full human projection.
//!
//! A decision-maker delegates each of `n` tasks to a human of known ability
//! `θᴴ` or to an AI with unknown true success rates `qᴬ`. Beliefs about the AI
//! live on a single ability index; the belief that best explains the data a
//! profile generates is the KL minimiser `θ*(x)`, and a profile is an
//! equilibrium when it is a best response to its own `θ*(x)`.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::ability_model::{
    project_difficulty, ProjectionConfig, ProjectionMode, SuccessModel, TaskDomain,
};
use crate::error::{ensure_finite, Error, Result};

/// Lower clamp for true success rates.
pub const Q_MIN: f64 = 1e-6;
/// Upper clamp for true success rates.
pub const Q_MAX: f64 = 1.0 - 1e-6;
/// Default search interval for the KL minimiser.
pub const DEFAULT_THETA_BOUNDS: (f64, f64) = (-12.0, 12.0);
/// Indifference width shared by best responses and equilibrium checks.
pub const TIE_EPS: f64 = 1e-9;
/// `|σ|` below which adoption is reported as a boundary case.
pub const SIGMA_BOUNDARY: f64 = 1e-6;
/// Largest domain accepted by exhaustive enumeration.
pub const MAX_ENUMERATION_TASKS: usize = 20;

const BISECTION_WIDTH: f64 = 1e-12;

/// Objective environment: true AI rates and the human benchmark.
#[derive(Debug, Clone)]
pub struct TruthModel {
    model: SuccessModel,
    domain: TaskDomain,
    human_theta: f64,
    q_ai: Vec<f64>,
    q_human: Vec<f64>,
    theta_bounds: (f64, f64),
}

impl TruthModel {
    /// Difficulties come from the domain's human difficulties; `qᴴ_j = p(θᴴ, δ_j)`.
    pub fn new(
        model: SuccessModel,
        domain: TaskDomain,
        human_theta: f64,
        q_ai: Vec<f64>,
    ) -> Result<Self> {
        ensure_finite("human theta", human_theta)?;
        let q_human = domain
            .tasks()
            .iter()
            .map(|t| model.success_rate(human_theta, t.human_difficulty))
            .collect::<Result<Vec<_>>>()?;
        let mut truth = Self {
            model,
            domain,
            human_theta,
            q_ai: Vec::new(),
            q_human,
            theta_bounds: DEFAULT_THETA_BOUNDS,
        };
        truth.set_q_ai(q_ai)?;
        truth.check_bounds()?;
        Ok(truth)
    }

    /// Builds the domain so that the human succeeds at the given rates:
    /// `δ_j` solves `p(θᴴ, δ_j) = qᴴ_j`.
    pub fn from_human_rates(
        model: SuccessModel,
        human_theta: f64,
        q_human: &[f64],
        q_ai: Vec<f64>,
    ) -> Result<Self> {
        let deltas = q_human
            .iter()
            .map(|&q| model.difficulty_for_rate(human_theta, q))
            .collect::<Result<Vec<_>>>()?;
        let domain = TaskDomain::from_difficulties(&deltas)?;
        Self::new(model, domain, human_theta, q_ai)
    }

    fn set_q_ai(&mut self, q_ai: Vec<f64>) -> Result<()> {
        if q_ai.len() != self.domain.len() {
            return Err(Error::Input(format!(
                "{} AI success rates for {} tasks",
                q_ai.len(),
                self.domain.len()
            )));
        }
        self.q_ai = q_ai
            .into_iter()
            .map(|q| {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::Input(format!(
                        "AI success rate {q} is not a probability"
                    )));
                }
                if !(Q_MIN..=Q_MAX).contains(&q) {
                    log::debug!("AI success rate {q} clamped to [{Q_MIN}, {Q_MAX}]");
                }
                Ok(q.clamp(Q_MIN, Q_MAX))
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    fn check_bounds(&self) -> Result<()> {
        let (lo, hi) = self.theta_bounds;
        if !(lo < self.human_theta && self.human_theta < hi) {
            return Err(Error::Input(format!(
                "human theta {} must lie inside the ability interval [{lo}, {hi}]",
                self.human_theta
            )));
        }
        Ok(())
    }

    /// Same environment with a different AI technology.
    pub fn with_q_ai(&self, q_ai: Vec<f64>) -> Result<Self> {
        let mut t = self.clone();
        t.set_q_ai(q_ai)?;
        Ok(t)
    }

    pub fn with_rewards(&self, rewards: &[f64]) -> Result<Self> {
        let mut t = self.clone();
        t.domain = t.domain.with_rewards(rewards)?;
        Ok(t)
    }

    pub fn with_theta_bounds(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Input(format!(
                "invalid ability interval [{lo}, {hi}]"
            )));
        }
        self.theta_bounds = (lo, hi);
        self.check_bounds()?;
        Ok(self)
    }

    pub fn model(&self) -> &SuccessModel {
        &self.model
    }

    pub fn domain(&self) -> &TaskDomain {
        &self.domain
    }

    pub fn human_theta(&self) -> f64 {
        self.human_theta
    }

    pub fn q_ai(&self) -> &[f64] {
        &self.q_ai
    }

    pub fn q_human(&self) -> &[f64] {
        &self.q_human
    }

    pub fn theta_bounds(&self) -> (f64, f64) {
        self.theta_bounds
    }

    pub fn n_tasks(&self) -> usize {
        self.domain.len()
    }

    fn delta(&self, j: usize) -> f64 {
        self.domain.tasks()[j].human_difficulty
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assignee {
    Ai,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdoptionClass {
    None,
    Partial,
    Full,
}

impl fmt::Display for AdoptionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdoptionClass::None => "none",
            AdoptionClass::Partial => "partial",
            AdoptionClass::Full => "full",
        })
    }
}

/// Who handles each task. Displays as one letter per task, `A` or `H`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DelegationProfile {
    assignment: Vec<Assignee>,
}

impl DelegationProfile {
    pub fn new(assignment: Vec<Assignee>) -> Self {
        Self { assignment }
    }

    pub fn all_ai(n: usize) -> Self {
        Self::new(vec![Assignee::Ai; n])
    }

    pub fn all_human(n: usize) -> Self {
        Self::new(vec![Assignee::Human; n])
    }

    /// Bit `j` of `mask` set means task `j` goes to the AI.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self::new(
            (0..n)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        Assignee::Ai
                    } else {
                        Assignee::Human
                    }
                })
                .collect(),
        )
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                'A' | 'a' => Ok(Assignee::Ai),
                'H' | 'h' => Ok(Assignee::Human),
                _ => Err(Error::Input(format!("profile `{s}` must consist of A/H"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[Assignee] {
        &self.assignment
    }

    pub fn ai_tasks(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == Assignee::Ai)
            .map(|(j, _)| j)
    }

    pub fn class(&self) -> AdoptionClass {
        let k = self.ai_tasks().count();
        if k == 0 {
            AdoptionClass::None
        } else if k == self.len() {
            AdoptionClass::Full
        } else {
            AdoptionClass::Partial
        }
    }
}

impl fmt::Display for DelegationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.assignment {
            f.write_str(if *a == Assignee::Ai { "A" } else { "H" })?;
        }
        Ok(())
    }
}

impl Serialize for DelegationProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn check_profile(truth: &TruthModel, profile: &DelegationProfile) -> Result<()> {
    if profile.len() != truth.n_tasks() {
        return Err(Error::Input(format!(
            "profile has {} entries for {} tasks",
            profile.len(),
            truth.n_tasks()
        )));
    }
    Ok(())
}

/// One weighted Bernoulli term of a KL objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerm {
    pub delta: f64,
    /// Target success frequency; 0 and 1 are allowed.
    pub target: f64,
    pub weight: f64,
}

/// `Σ w [q ln(q/p) + (1−q) ln((1−q)/(1−p))]` at ability `theta`.
pub fn kl_objective(model: &SuccessModel, terms: &[KlTerm], theta: f64) -> Result<f64> {
    let mut total = 0.0;
    for t in terms {
        let (ls, lf) = model.log_rates(theta, t.delta)?;
        let q = t.target;
        let mut term = 0.0;
        if q > 0.0 {
            term += q * (q.ln() - ls);
        }
        if q < 1.0 {
            term += (1.0 - q) * ((-q).ln_1p() - lf);
        }
        total += t.weight * term;
    }
    Ok(total)
}

/// `∂/∂θ` of [`kl_objective`], equal to `Σ w h(θ) (p − q)`.
pub fn kl_objective_slope(model: &SuccessModel, terms: &[KlTerm], theta: f64) -> Result<f64> {
    let mut total = 0.0;
    for t in terms {
        let (ds, df) = model.log_rate_slopes(theta, t.delta)?;
        total -= t.weight * (t.target * ds + (1.0 - t.target) * df);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlMinimum {
    pub theta: f64,
    pub kl_value: f64,
    /// The derivative did not change sign on the interval; `theta` is an endpoint.
    pub boundary: bool,
}

/// Minimises a KL objective over `[lo, hi]` by bisection on its derivative.
pub fn minimize_kl(
    model: &SuccessModel,
    terms: &[KlTerm],
    bounds: (f64, f64),
) -> Result<KlMinimum> {
    if terms.is_empty() || terms.iter().all(|t| t.weight <= 0.0) {
        return Err(Error::Precondition("KL objective has no data".into()));
    }
    for t in terms {
        if !(0.0..=1.0).contains(&t.target) || !(t.weight >= 0.0) {
            return Err(Error::Input(format!("invalid KL term {t:?}")));
        }
    }
    let (mut lo, mut hi) = bounds;
    let g_lo = kl_objective_slope(model, terms, lo)?;
    let g_hi = kl_objective_slope(model, terms, hi)?;
    let finish = |theta: f64, boundary: bool| -> Result<KlMinimum> {
        Ok(KlMinimum {
            theta,
            kl_value: kl_objective(model, terms, theta)?.max(0.0),
            boundary,
        })
    };
    if g_lo >= 0.0 {
        return finish(lo, g_lo > 0.0);
    }
    if g_hi <= 0.0 {
        return finish(hi, g_hi < 0.0);
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = kl_objective_slope(model, terms, mid)?;
        if g == 0.0 {
            return finish(mid, false);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    finish(0.5 * (lo + hi), false)
}

fn profile_terms(truth: &TruthModel, profile: &DelegationProfile) -> Vec<KlTerm> {
    profile
        .ai_tasks()
        .map(|j| KlTerm {
            delta: truth.delta(j),
            target: truth.q_ai[j],
            weight: 1.0,
        })
        .collect()
}

fn check_theta(truth: &TruthModel, theta: f64) -> Result<()> {
    ensure_finite("theta", theta)?;
    let (lo, hi) = truth.theta_bounds;
    if theta < lo || theta > hi {
        return Err(Error::Input(format!(
            "theta {theta} outside the ability interval [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// `K(x, θ)`: divergence between the true outcome distribution under profile
/// `x` and the one implied by AI ability `θ`. Zero when nothing is delegated.
pub fn kl_divergence(truth: &TruthModel, profile: &DelegationProfile, theta: f64) -> Result<f64> {
    check_profile(truth, profile)?;
    check_theta(truth, theta)?;
    kl_objective(&truth.model, &profile_terms(truth, profile), theta)
}

/// `∂K(x, θ)/∂θ`.
pub fn kl_derivative(truth: &TruthModel, profile: &DelegationProfile, theta: f64) -> Result<f64> {
    check_profile(truth, profile)?;
    check_theta(truth, theta)?;
    kl_objective_slope(&truth.model, &profile_terms(truth, profile), theta)
}

/// The unique minimiser `θ*(x)` of `K(x, ·)` on the ability interval.
pub fn kl_minimizer(truth: &TruthModel, profile: &DelegationProfile) -> Result<KlMinimum> {
    check_profile(truth, profile)?;
    if profile.class() == AdoptionClass::None {
        return Err(Error::Precondition(
            "no task is delegated to the AI, so no belief is pinned down".into(),
        ));
    }
    minimize_kl(
        &truth.model,
        &profile_terms(truth, profile),
        truth.theta_bounds,
    )
}

/// `w_j = (∂p(θᴴ, δ_j)/∂θ) / (qᴴ_j (1 − qᴴ_j))`: normal of the adoption hyperplane.
pub fn hyperplane_weights(truth: &TruthModel) -> Result<Vec<f64>> {
    (0..truth.n_tasks())
        .map(|j| {
            let q = truth.q_human[j];
            let w = truth.model.slope(truth.human_theta, truth.delta(j))? / (q * (1.0 - q));
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!(
                    "hyperplane weight {w} for task {j} is not positive"
                )));
            }
            Ok(w)
        })
        .collect()
}

/// `σ(q) = Σ w_j (q_j − qᴴ_j)` for an arbitrary technology `q`.
pub fn score_of(truth: &TruthModel, q: &[f64]) -> Result<f64> {
    if q.len() != truth.n_tasks() {
        return Err(Error::Input(format!(
            "{} rates for {} tasks",
            q.len(),
            truth.n_tasks()
        )));
    }
    let w = hyperplane_weights(truth)?;
    Ok(w.iter()
        .zip(q)
        .zip(&truth.q_human)
        .map(|((w, q), h)| w * (q - h))
        .sum())
}

/// `σ(qᴬ)`; positive exactly when the AI lies strictly above the hyperplane.
pub fn score_sigma(truth: &TruthModel) -> Result<f64> {
    score_of(truth, &truth.q_ai)
}

/// How the believer maps one ability belief to task-level success rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeliefStructure {
    /// Full projection: every task evaluated at its human difficulty.
    /// Delegates everything iff `θ > θᴴ + TIE_EPS`, nothing otherwise.
    SingleIndex,
    /// Task-by-task comparison at perceived AI difficulties.
    PerTask(ProjectionConfig),
}

/// Subjective best response to believed AI ability `theta`. Ties go to the human.
pub fn best_response(
    truth: &TruthModel,
    theta: f64,
    structure: BeliefStructure,
) -> Result<DelegationProfile> {
    ensure_finite("theta", theta)?;
    let n = truth.n_tasks();
    match structure {
        BeliefStructure::SingleIndex => Ok(if theta - truth.human_theta > TIE_EPS {
            DelegationProfile::all_ai(n)
        } else {
            DelegationProfile::all_human(n)
        }),
        BeliefStructure::PerTask(cfg) => {
            let assignment = truth
                .domain
                .tasks()
                .iter()
                .zip(&truth.q_human)
                .map(|(task, &qh)| {
                    let delta = match cfg.mode {
                        ProjectionMode::FullProjection => task.human_difficulty,
                        _ => {
                            let ai = task.ai_difficulty.ok_or_else(|| {
                                Error::Input(format!("task `{}` has no AI difficulty", task.id))
                            })?;
                            project_difficulty(&cfg, task.human_difficulty, ai)?
                        }
                    };
                    Ok(if truth.model.success_rate(theta, delta)? > qh + TIE_EPS {
                        Assignee::Ai
                    } else {
                        Assignee::Human
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DelegationProfile::new(assignment))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfitBasis {
    /// AI success judged by `p(θ, δ_j)` at the believed ability.
    Subjective(f64),
    /// AI success at the true rates `qᴬ`.
    Objective,
}

/// `Σ_j R_j · (success probability of whoever handles task j)`.
pub fn expected_profit(
    truth: &TruthModel,
    profile: &DelegationProfile,
    basis: ProfitBasis,
) -> Result<f64> {
    check_profile(truth, profile)?;
    let mut total = 0.0;
    for (j, (task, who)) in truth
        .domain
        .tasks()
        .iter()
        .zip(profile.assignment())
        .enumerate()
    {
        let rate = match (who, basis) {
            (Assignee::Human, _) => truth.q_human[j],
            (Assignee::Ai, ProfitBasis::Objective) => truth.q_ai[j],
            (Assignee::Ai, ProfitBasis::Subjective(theta)) => {
                truth.model.success_rate(theta, task.human_difficulty)?
            }
        };
        total += task.reward * rate;
    }
    Ok(total)
}

/// A delegation profile with its KL-best belief and equilibrium status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRecord {
    pub profile: DelegationProfile,
    /// `None` when nothing is delegated: no data pins the belief, and any
    /// `θ ≤ θᴴ` supports the profile.
    pub theta_star: Option<f64>,
    pub kl_value: f64,
    pub is_equilibrium: bool,
    pub adoption_class: AdoptionClass,
    pub boundary_belief: bool,
}

/// Computes `θ*(x)` and re-derives the best response to check the fixed point.
pub fn evaluate_profile(
    truth: &TruthModel,
    profile: &DelegationProfile,
) -> Result<EquilibriumRecord> {
    check_profile(truth, profile)?;
    let class = profile.class();
    if class == AdoptionClass::None {
        return Ok(EquilibriumRecord {
            profile: profile.clone(),
            theta_star: None,
            kl_value: 0.0,
            is_equilibrium: true,
            adoption_class: class,
            boundary_belief: false,
        });
    }
    let min = kl_minimizer(truth, profile)?;
    let response = best_response(truth, min.theta, BeliefStructure::SingleIndex)?;
    Ok(EquilibriumRecord {
        profile: profile.clone(),
        theta_star: Some(min.theta),
        kl_value: min.kl_value,
        is_equilibrium: response == *profile,
        adoption_class: class,
        boundary_belief: min.boundary,
    })
}

/// All pure equilibria, found by checking every one of the `2ⁿ` profiles.
/// Records are ordered by profile mask (bit `j` = task `j` to AI).
pub fn enumerate_equilibria(truth: &TruthModel) -> Result<Vec<EquilibriumRecord>> {
    let n = truth.n_tasks();
    if n > MAX_ENUMERATION_TASKS {
        return Err(Error::Capacity {
            what: "tasks",
            got: n,
            limit: MAX_ENUMERATION_TASKS,
        });
    }
    let records = (0..1u64 << n)
        .into_par_iter()
        .map(|mask| evaluate_profile(truth, &DelegationProfile::from_mask(n, mask)))
        .collect::<Result<Vec<_>>>()?;
    Ok(records.into_iter().filter(|r| r.is_equilibrium).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distortion {
    OverAdoption,
    UnderAdoption,
    Aligned,
    Boundary,
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distortion::OverAdoption => "over-adoption",
            Distortion::UnderAdoption => "under-adoption",
            Distortion::Aligned => "aligned",
            Distortion::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdoptionReport {
    pub sigma: f64,
    pub weights: Vec<f64>,
    /// Task-by-task optimum: AI exactly where `qᴬ_j > qᴴ_j`.
    pub optimal_profile: DelegationProfile,
    pub optimal_class: AdoptionClass,
    pub equilibria: Vec<EquilibriumRecord>,
    pub full_adoption_equilibrium: bool,
    pub no_adoption_equilibrium: bool,
    pub distortion: Distortion,
}

/// Task-by-task optimal profile.
pub fn optimal_profile(truth: &TruthModel) -> DelegationProfile {
    DelegationProfile::new(
        truth
            .q_ai
            .iter()
            .zip(&truth.q_human)
            .map(|(a, h)| {
                if *a > *h + TIE_EPS {
                    Assignee::Ai
                } else {
                    Assignee::Human
                }
            })
            .collect(),
    )
}

/// Compares the equilibrium set with the task-by-task optimum.
pub fn classify_adoption(truth: &TruthModel) -> Result<AdoptionReport> {
    let weights = hyperplane_weights(truth)?;
    let sigma = score_sigma(truth)?;
    let equilibria = enumerate_equilibria(truth)?;
    let optimal = optimal_profile(truth);
    let optimal_class = optimal.class();
    let full = equilibria
        .iter()
        .any(|r| r.adoption_class == AdoptionClass::Full);
    let none = equilibria
        .iter()
        .any(|r| r.adoption_class == AdoptionClass::None);
    let only_none = equilibria
        .iter()
        .all(|r| r.adoption_class == AdoptionClass::None);
    let distortion = if sigma.abs() < SIGMA_BOUNDARY {
        Distortion::Boundary
    } else if full && optimal_class != AdoptionClass::Full {
        Distortion::OverAdoption
    } else if only_none && optimal_class != AdoptionClass::None {
        Distortion::UnderAdoption
    } else {
        Distortion::Aligned
    };
    Ok(AdoptionReport {
        sigma,
        weights,
        optimal_profile: optimal,
        optimal_class,
        equilibria,
        full_adoption_equilibrium: full,
        no_adoption_equilibrium: none,
        distortion,
    })
}

/// One cell of a two-task technology sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCell {
    pub qa1: f64,
    pub qa2: f64,
    pub sigma: f64,
    pub full_bne: bool,
    pub no_bne: bool,
    pub optimal_profile: DelegationProfile,
    pub distortion: Distortion,
}

/// Classifies every technology `(k₁/(g+1), k₂/(g+1))`, `k ∈ 1..=g`.
/// Rows are ordered with `qa1` outer and `qa2` inner.
pub fn region_sweep(template: &TruthModel, resolution: usize) -> Result<Vec<RegionCell>> {
    if template.n_tasks() != 2 {
        return Err(Error::Input(format!(
            "region sweeps need exactly two tasks, got {}",
            template.n_tasks()
        )));
    }
    if resolution == 0 {
        return Err(Error::Input("grid resolution must be at least 1".into()));
    }
    let step = 1.0 / (resolution + 1) as f64;
    (0..resolution * resolution)
        .into_par_iter()
        .map(|cell| {
            let qa1 = (cell / resolution + 1) as f64 * step;
            let qa2 = (cell % resolution + 1) as f64 * step;
            let report = classify_adoption(&template.with_q_ai(vec![qa1, qa2])?)?;
            Ok(RegionCell {
                qa1,
                qa2,
                sigma: report.sigma,
                full_bne: report.full_adoption_equilibrium,
                no_bne: report.no_adoption_equilibrium,
                optimal_profile: report.optimal_profile,
                distortion: report.distortion,
            })
        })
        .collect()
}

pub const REGION_CSV_HEADER: &str = "qa1,qa2,sigma,full_bne,no_bne,optimal_profile,distortion";

pub fn write_region_csv<W: Write>(cells: &[RegionCell], mut out: W) -> Result<()> {
    writeln!(out, "{REGION_CSV_HEADER}")?;
    for c in cells {
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{},{},{},{}",
            c.qa1, c.qa2, c.sigma, c.full_bne, c.no_bne, c.optimal_profile, c.distortion
        )?;
    }
    Ok(())
}
