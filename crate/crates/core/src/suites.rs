//! Randomised property suites over the whole library.
//!
//! Each suite draws its instances from `ChaCha8Rng::seed_from_u64(seed)` and
//! stops at the first counterexample, which is described in the report.

use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ability_model::{linspace, LinkKind, SuccessModel, TaskDomain};
use crate::adoption_path::{knapsack_fill, sigma_star_point, thresholds, FrontierSpec};
use crate::belief_engine::{fosd_compare, prior_expected_success, AbilityPrior, Outcome};
use crate::error::{Error, Result};
use crate::kl_equilibrium::{
    enumerate_equilibria, hyperplane_weights, kl_derivative, kl_minimizer, score_sigma,
    AdoptionClass, DelegationProfile, TruthModel, SIGMA_BOUNDARY,
};
use crate::reasonableness::{
    predicted_usefulness, score_posterior, verify_score_mlrp, ReasonablenessModel,
};

/// Required margin of each strict decrease in prior expected success.
pub const PROP1_MARGIN: f64 = 1e-12;
/// Slack on the predicted-success orderings after one observation.
pub const PROP2_SLACK: f64 = 1e-10;
/// Largest tolerated `|∂K/∂θ|` at an interior KL minimiser.
pub const FOC_TOL: f64 = 1e-8;
/// Tolerance of the knapsack solution against the vertex oracle.
pub const KNAPSACK_TOL: f64 = 1e-6;
/// Half-width of the band around `τ̃` skipped by the equilibrium check.
pub const TAU_TILDE_BAND: f64 = 1e-4;
/// Required margin of each strict increase in predicted usefulness.
pub const USEFULNESS_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Props,
    Theorem1,
    Path,
    Reasonableness,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Props,
        Suite::Theorem1,
        Suite::Path,
        Suite::Reasonableness,
    ];

    pub fn default_instances(self) -> usize {
        match self {
            Suite::Props => 100,
            Suite::Theorem1 => 1000,
            Suite::Path => 200,
            Suite::Reasonableness => 100,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Props => "props",
            Suite::Theorem1 => "theorem1",
            Suite::Path => "path",
            Suite::Reasonableness => "reasonableness",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    /// Instances fully checked.
    pub cases: usize,
    pub counterexample: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.counterexample {
            None => write!(f, "{}: pass ({} instances)", self.suite, self.cases),
            Some(c) => write!(
                f,
                "{}: FAIL after {} instances: {c}",
                self.suite, self.cases
            ),
        }
    }
}

/// Runs one suite with its default instance count unless overridden.
/// `model` pins the success model used by the `props` suite.
pub fn run_suite(
    suite: Suite,
    instances: Option<usize>,
    seed: u64,
    model: Option<&SuccessModel>,
) -> Result<SuiteReport> {
    let n = instances.unwrap_or(suite.default_instances());
    match suite {
        Suite::Props => props_suite(n, seed, model),
        Suite::Theorem1 => theorem1_suite(n, seed),
        Suite::Path => path_suite(n, seed),
        Suite::Reasonableness => reasonableness_suite(n, seed),
    }
}

struct Tracker {
    suite: Suite,
    cases: usize,
}

impl Tracker {
    fn new(suite: Suite) -> Self {
        Self { suite, cases: 0 }
    }

    fn fail(&self, msg: String) -> Result<SuiteReport> {
        Ok(SuiteReport {
            suite: self.suite,
            cases: self.cases,
            counterexample: Some(msg),
        })
    }

    fn pass(&self) -> Result<SuiteReport> {
        Ok(SuiteReport {
            suite: self.suite,
            cases: self.cases,
            counterexample: None,
        })
    }
}

fn random_model<R: Rng>(rng: &mut R, disc: (f64, f64)) -> SuccessModel {
    let kind = if rng.random_bool(0.5) {
        LinkKind::Logistic
    } else {
        LinkKind::NormalOgive
    };
    SuccessModel::parametric(kind, rng.random_range(disc.0..disc.1))
        .expect("positive discrimination")
}

fn describe(model: &SuccessModel) -> String {
    format!("{:?}(a={})", model.kind(), model.discrimination())
}

/// Full-support prior with random weights on a uniform grid inside `range`.
fn random_prior<R: Rng>(rng: &mut R, range: (f64, f64), points: (usize, usize)) -> AbilityPrior {
    let n = rng.random_range(points.0..=points.1);
    let span = range.1 - range.0;
    let lo = range.0 + rng.random_range(0.0..0.25) * span;
    let hi = range.1 - rng.random_range(0.0..0.25) * span;
    let weights = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    AbilityPrior::from_unnormalized(linspace(lo, hi, n), weights).expect("valid random prior")
}

/// `k` increasing values in `range` with adjacent gaps of at least `min_gap`.
fn spaced<R: Rng>(rng: &mut R, k: usize, range: (f64, f64), min_gap: f64) -> Vec<f64> {
    let step = (range.1 - range.0) / k as f64;
    let mut v = Vec::with_capacity(k);
    let mut x = range.0 + rng.random_range(0.0..0.5 * step);
    for _ in 0..k {
        v.push(x);
        x += rng.random_range(min_gap.min(step)..=step);
    }
    v
}

fn model_ranges(model: Option<&SuccessModel>) -> ((f64, f64), (f64, f64)) {
    match model.and_then(|m| m.table()) {
        Some(t) => (
            (t.thetas()[0], *t.thetas().last().unwrap()),
            (t.deltas()[0], *t.deltas().last().unwrap()),
        ),
        None => ((-5.0, 5.0), (-3.0, 3.0)),
    }
}

/// Axioms of the configured model, then expected success falling in
/// difficulty and the posterior orderings after single observations.
pub fn props_suite(configs: usize, seed: u64, model: Option<&SuccessModel>) -> Result<SuiteReport> {
    let mut t = Tracker::new(Suite::Props);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (theta_range, delta_range) = model_ranges(model);

    if let Some(m) = model {
        let tg = linspace(theta_range.0, theta_range.1, 41);
        let dg = linspace(delta_range.0, delta_range.1, 21);
        let mono = m.verify_monotonicity(&tg, &dg)?;
        if let Some(v) = mono.violation {
            return t.fail(format!("configured model: {v}"));
        }
        let mlrp = m.verify_mlrp(&tg, &dg)?;
        if let Some(v) = mlrp.violation {
            return t.fail(format!("configured model: {v}"));
        }
    }

    for _ in 0..configs {
        let m = match model {
            Some(m) => m.clone(),
            None => random_model(&mut rng, (0.2, 3.0)),
        };
        let prior = random_prior(&mut rng, theta_range, (5, 81));
        let k = rng.random_range(2..=8);
        let deltas = spaced(&mut rng, k, delta_range, 0.05);
        let ctx = || {
            format!(
                "model {}, prior grid [{}, {}] x{}, deltas {deltas:?}",
                describe(&m),
                prior.grid()[0],
                prior.grid().last().unwrap(),
                prior.support_size()
            )
        };

        if model.is_none() {
            let tg = linspace(prior.grid()[0], *prior.grid().last().unwrap(), 21);
            if let Some(v) = m.verify_mlrp(&tg, &deltas)?.violation {
                return t.fail(format!("{}: {v}", ctx()));
            }
        }

        let e = deltas
            .iter()
            .map(|&d| prior_expected_success(&prior, &m, d))
            .collect::<Result<Vec<_>>>()?;
        for w in 0..k - 1 {
            if !(e[w + 1] < e[w] - PROP1_MARGIN) {
                return t.fail(format!(
                    "{}: expected success {} at delta={} not below {} at delta={}",
                    ctx(),
                    e[w + 1],
                    deltas[w + 1],
                    e[w],
                    deltas[w]
                ));
            }
        }

        let (easy, hard) = (deltas[0], deltas[k - 1]);
        let post = |d: f64, o: Outcome| prior.update(&m, &[(d, o)]);
        let (hs, es) = (post(hard, Outcome::Success)?, post(easy, Outcome::Success)?);
        let (hf, ef) = (post(hard, Outcome::Failure)?, post(easy, Outcome::Failure)?);
        for (dom, sub, label) in [(&hs, &es, "success"), (&hf, &ef, "failure")] {
            if let Some(v) = fosd_compare(dom, sub)?.violation {
                return t.fail(format!(
                    "{}: hard {label} does not dominate easy {label}: {v}",
                    ctx()
                ));
            }
        }
        for &target in &deltas {
            for (dom, sub, label) in [(&hs, &es, "success"), (&hf, &ef, "failure")] {
                let (a, b) = (
                    prior_expected_success(dom, &m, target)?,
                    prior_expected_success(sub, &m, target)?,
                );
                if a < b - PROP2_SLACK {
                    return t.fail(format!(
                        "{}: predicted success at delta={target} after hard {label} {a} below easy {label} {b}",
                        ctx()
                    ));
                }
            }
        }
        t.cases += 1;
    }
    t.pass()
}

/// Random environments: equilibria are all-or-nothing, full adoption is an
/// equilibrium exactly when `σ > 0`, and no adoption always is.
pub fn theorem1_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tracker::new(Suite::Theorem1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let n = rng.random_range(2..=4);
        let model = random_model(&mut rng, (0.5, 2.0));
        let deltas: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let human_theta = rng.random_range(-2.0..2.0);
        let q_ai: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let truth = TruthModel::new(
            model.clone(),
            TaskDomain::from_difficulties(&deltas)?,
            human_theta,
            q_ai.clone(),
        )?;
        let ctx = format!(
            "model {}, deltas {deltas:?}, theta_H {human_theta}, qA {q_ai:?}",
            describe(&model)
        );

        let sigma = score_sigma(&truth)?;
        let eq = enumerate_equilibria(&truth)?;
        if let Some(r) = eq
            .iter()
            .find(|r| r.adoption_class == AdoptionClass::Partial)
        {
            return t.fail(format!("{ctx}: partial equilibrium {}", r.profile));
        }
        let full = eq.iter().any(|r| r.adoption_class == AdoptionClass::Full);
        let none = eq.iter().any(|r| r.adoption_class == AdoptionClass::None);
        if !none {
            return t.fail(format!("{ctx}: no-adoption equilibrium missing"));
        }
        if sigma.abs() >= SIGMA_BOUNDARY && full != (sigma > 0.0) {
            return t.fail(format!(
                "{ctx}: sigma {sigma} but full-adoption equilibrium = {full}"
            ));
        }
        if sigma <= -SIGMA_BOUNDARY && eq.len() != 1 {
            return t.fail(format!(
                "{ctx}: sigma {sigma} < 0 with {} equilibria",
                eq.len()
            ));
        }
        let all = DelegationProfile::all_ai(n);
        let min = kl_minimizer(&truth, &all)?;
        if !min.boundary {
            let g = kl_derivative(&truth, &all, min.theta)?;
            if g.abs() >= FOC_TOL {
                return t.fail(format!(
                    "{ctx}: KL derivative {g} at interior minimiser {}",
                    min.theta
                ));
            }
        }
        t.cases += 1;
    }
    t.pass()
}

/// `max Σ c_j q_j` over `{q ∈ [0,1]ⁿ : Σ a_j q_j ≤ budget}` by enumerating
/// every vertex: each coordinate at 0 or 1, except at most one set by the
/// budget.
pub fn knapsack_vertex_oracle(values: &[f64], weights_a: &[f64], budget: f64) -> f64 {
    let n = values.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0..1u64 << n {
        let bit = |j: usize| (mask >> j & 1) as f64;
        let used: f64 = (0..n).map(|j| weights_a[j] * bit(j)).sum();
        let base: f64 = (0..n).map(|j| values[j] * bit(j)).sum();
        if used <= budget + 1e-12 {
            best = best.max(base);
        }
        for free in (0..n).filter(|&j| mask >> j & 1 == 0) {
            let q = (budget - used) / weights_a[free];
            if (0.0..=1.0).contains(&q) {
                best = best.max(base + values[free] * q);
            }
        }
    }
    best
}

fn random_frontier<R: Rng>(rng: &mut R) -> Result<(FrontierSpec, TruthModel)> {
    let n = rng.random_range(2..=3);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let c = rng.random_range(1.0..3.0);
    let tau_bar = a.iter().sum::<f64>() / c * rng.random_range(1.0..1.5);
    let frontier = FrontierSpec::new(a, crate::adoption_path::BudgetFn::linear(c)?, tau_bar)?;
    let model = random_model(rng, (0.5, 2.0));
    let deltas: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let human_theta = rng.random_range(-1.0..1.0);
    let truth = TruthModel::new(
        model,
        TaskDomain::from_difficulties(&deltas)?,
        human_theta,
        vec![0.5; n],
    )?;
    Ok((frontier, truth))
}

/// Random budget frontiers: threshold ordering, monotone `σ*`, the knapsack
/// rule against the vertex oracle, and full adoption switching on at `τ̃`.
pub fn path_suite(specs: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tracker::new(Suite::Path);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..specs {
        let (f, truth) = random_frontier(&mut rng)?;
        let ctx = format!(
            "a {:?}, tau_bar {}, {}, deltas {:?}, theta_H {}",
            f.weights_a(),
            f.tau_bar(),
            describe(truth.model()),
            truth.domain().human_difficulties(),
            truth.human_theta()
        );
        let th = match thresholds(&f, &truth) {
            Ok(th) => th,
            Err(Error::Domain(msg)) => return t.fail(format!("{ctx}: {msg}")),
            Err(e) => return Err(e),
        };
        if !(th.tau1 < th.tau_tilde && th.tau_tilde <= th.tau2 && th.tau2 <= th.tau3) {
            return t.fail(format!("{ctx}: threshold ordering {th:?}"));
        }

        let taus = linspace(0.0, f.tau_bar(), 101);
        let mut prev = f64::NEG_INFINITY;
        for &tau in &taus {
            let s = sigma_star_point(&f, &truth, tau)?.sigma_star;
            if s < prev - 1e-12 {
                return t.fail(format!("{ctx}: sigma* decreases at tau={tau}"));
            }
            prev = s;
        }

        let w = hyperplane_weights(&truth)?;
        let budget = f.budget().eval(rng.random_range(0.0..f.tau_bar()));
        let q = knapsack_fill(&w, f.weights_a(), budget);
        let got: f64 = w.iter().zip(&q).map(|(w, q)| w * q).sum();
        let oracle = knapsack_vertex_oracle(&w, f.weights_a(), budget);
        if (got - oracle).abs() > KNAPSACK_TOL {
            return t.fail(format!(
                "{ctx}: knapsack value {got} vs vertex oracle {oracle} at budget {budget}"
            ));
        }

        for (tau, expect_full) in [
            (th.tau_tilde + TAU_TILDE_BAND, true),
            (th.tau_tilde - TAU_TILDE_BAND, false),
        ] {
            if !(0.0..=f.tau_bar()).contains(&tau) {
                continue;
            }
            let point = sigma_star_point(&f, &truth, tau)?.point;
            let eq = enumerate_equilibria(&truth.with_q_ai(point)?)?;
            let full = eq.iter().any(|r| r.adoption_class == AdoptionClass::Full);
            if full != expect_full {
                return t.fail(format!(
                    "{ctx}: at tau={tau} (tau~={}) full adoption equilibrium = {full}",
                    th.tau_tilde
                ));
            }
        }
        t.cases += 1;
    }
    t.pass()
}

/// `p̃(θ, r) ∝ g(r) exp(s θ h(r))` with increasing `h`: MLRP in `(θ, r)`.
fn random_score_model<R: Rng>(rng: &mut R, thetas: &[f64]) -> Result<ReasonablenessModel> {
    let k = rng.random_range(2..=6);
    let mut support = spaced(rng, k - 1, (0.0, 0.95), 0.02);
    support.push(1.0);
    if rng.random_bool(0.5) {
        return ReasonablenessModel::exponential_tilt(support);
    }
    let s = rng.random_range(0.5..2.0);
    let g: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let mut h = spaced(rng, k, (0.0, 1.0), 0.02);
    h.sort_by(f64::total_cmp);
    let probs = thetas
        .iter()
        .map(|&th| {
            let raw: Vec<f64> = g
                .iter()
                .zip(&h)
                .map(|(g, h)| g * (s * th * h).exp())
                .collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / z).collect()
        })
        .collect();
    ReasonablenessModel::lookup(support, thetas.to_vec(), probs)
}

/// Random MLRP score families: predicted usefulness rises with the observed
/// score, the useful-answer rate rises with ability, and posteriors ignore
/// the order of scores.
pub fn reasonableness_suite(configs: usize, seed: u64) -> Result<SuiteReport> {
    let mut t = Tracker::new(Suite::Reasonableness);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..configs {
        let prior = random_prior(&mut rng, (-3.0, 3.0), (5, 61));
        let model = random_score_model(&mut rng, prior.grid())?;
        let ctx = format!(
            "support {:?}, {:?} family, prior grid x{}",
            model.support(),
            std::mem::discriminant(model.family()),
            prior.support_size()
        );

        if let Some(v) = verify_score_mlrp(&model, prior.grid())?.violation {
            return t.fail(format!("{ctx}: {v}"));
        }
        let rates = prior
            .grid()
            .iter()
            .map(|&th| model.useful_rate(th))
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = (1..rates.len()).find(|&k| !(rates[k] > rates[k - 1])) {
            return t.fail(format!(
                "{ctx}: useful-answer rate not increasing at theta={}",
                prior.grid()[k]
            ));
        }
        let pis = model
            .support()
            .iter()
            .map(|&r| predicted_usefulness(&prior, &model, r))
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = (1..pis.len()).find(|&k| !(pis[k] > pis[k - 1] + USEFULNESS_MARGIN)) {
            return t.fail(format!(
                "{ctx}: predicted usefulness {} at score {} not above {} at score {}",
                pis[k],
                model.support()[k],
                pis[k - 1],
                model.support()[k - 1]
            ));
        }
        let mut history: Vec<f64> = (0..4)
            .map(|_| *model.support().choose(&mut rng).unwrap())
            .collect();
        let a = score_posterior(&prior, &model, &history)?;
        history.shuffle(&mut rng);
        let b = score_posterior(&prior, &model, &history)?;
        if a.weights()
            .iter()
            .zip(b.weights())
            .any(|(x, y)| (x - y).abs() > 1e-12)
        {
            return t.fail(format!(
                "{ctx}: posterior depends on score order {history:?}"
            ));
        }
        t.cases += 1;
    }
    t.pass()
}
