//! Adoption along an expanding technological frontier.
//!
//! The feasible AI technologies at time `τ` form the budget polytope
//! `P(τ) = {q ∈ [0,1]ⁿ : Σ a_j q_j ≤ b(τ)}`. The linear score `σ` is maximised
//! over `P(τ)` in closed form, and the thresholds `τ₁ < τ̃ ≤ τ₂ ≤ τ₃` split the
//! path into regimes for the optimal policy and for projection equilibria.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{ensure_finite, ensure_strictly_increasing, Error, Result};
use crate::kl_equilibrium::{hyperplane_weights, TruthModel};

const ROOT_WIDTH: f64 = 1e-12;

/// Strictly increasing budget `b(τ)` with `b(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum BudgetFn {
    /// `b(τ) = c τ`.
    Linear { rate: f64 },
    /// Piecewise-linear through `(taus[i], values[i])`; `taus[0] = values[0] = 0`.
    Tabulated { taus: Vec<f64>, values: Vec<f64> },
}

impl BudgetFn {
    pub fn linear(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Input(format!(
                "budget rate must be positive, got {rate}"
            )));
        }
        Ok(BudgetFn::Linear { rate })
    }

    pub fn tabulated(taus: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if taus.len() != values.len() {
            return Err(Error::Input("budget table columns differ in length".into()));
        }
        ensure_strictly_increasing("budget taus", &taus, 2)?;
        ensure_strictly_increasing("budget values", &values, 2)?;
        if taus[0] != 0.0 || values[0] != 0.0 {
            return Err(Error::Input("budget table must start at (0, 0)".into()));
        }
        Ok(BudgetFn::Tabulated { taus, values })
    }

    /// `b(τ)`; tabulated budgets extrapolate along their last segment.
    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            BudgetFn::Linear { rate } => rate * tau,
            BudgetFn::Tabulated { taus, values } => piecewise(taus, values, tau),
        }
    }

    /// `b⁻¹(v)`.
    pub fn inverse(&self, value: f64) -> f64 {
        match self {
            BudgetFn::Linear { rate } => value / rate,
            BudgetFn::Tabulated { taus, values } => piecewise(values, taus, value),
        }
    }
}

fn piecewise(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Weighted-budget frontier family on `[0, τ̄]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierSpec {
    weights_a: Vec<f64>,
    budget: BudgetFn,
    tau_bar: f64,
}

impl FrontierSpec {
    pub fn new(weights_a: Vec<f64>, budget: BudgetFn, tau_bar: f64) -> Result<Self> {
        if weights_a.is_empty() {
            return Err(Error::Input(
                "frontier needs at least one budget weight".into(),
            ));
        }
        for &a in &weights_a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Input(format!("budget weight {a} must be positive")));
            }
        }
        ensure_finite("tau_bar", tau_bar)?;
        if tau_bar <= 0.0 {
            return Err(Error::Input(format!(
                "tau_bar must be positive, got {tau_bar}"
            )));
        }
        let total: f64 = weights_a.iter().sum();
        if budget.eval(tau_bar) < total {
            return Err(Error::Input(format!(
                "b(tau_bar) = {} does not reach sum of budget weights {total}",
                budget.eval(tau_bar)
            )));
        }
        Ok(Self {
            weights_a,
            budget,
            tau_bar,
        })
    }

    /// Linear budget `b(τ) = cτ` with `τ̄ = Σ a_j / c`.
    pub fn linear(weights_a: Vec<f64>, rate: f64) -> Result<Self> {
        let tau_bar = weights_a.iter().sum::<f64>() / rate;
        Self::new(weights_a, BudgetFn::linear(rate)?, tau_bar)
    }

    pub fn weights_a(&self) -> &[f64] {
        &self.weights_a
    }

    pub fn budget(&self) -> &BudgetFn {
        &self.budget
    }

    pub fn tau_bar(&self) -> f64 {
        self.tau_bar
    }

    pub fn len(&self) -> usize {
        self.weights_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights_a.is_empty()
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        ensure_finite("tau", tau)?;
        if !(0.0..=self.tau_bar).contains(&tau) {
            return Err(Error::Input(format!(
                "tau {tau} outside [0, {}]",
                self.tau_bar
            )));
        }
        Ok(())
    }

    fn check_truth(&self, truth: &TruthModel) -> Result<()> {
        if truth.n_tasks() != self.len() {
            return Err(Error::Input(format!(
                "frontier has {} coordinates, environment has {} tasks",
                self.len(),
                truth.n_tasks()
            )));
        }
        Ok(())
    }
}

/// Maximiser of `Σ c_j q_j` over `{q ∈ [0,1]ⁿ : Σ a_j q_j ≤ budget}` for
/// positive `c`: fill coordinates by decreasing `c_j / a_j`.
pub fn knapsack_fill(values: &[f64], weights_a: &[f64], budget: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        (values[j] / weights_a[j])
            .total_cmp(&(values[i] / weights_a[i]))
            .then(i.cmp(&j))
    });
    let mut left = budget.max(0.0);
    let mut q = vec![0.0; values.len()];
    for j in order {
        q[j] = (left / weights_a[j]).min(1.0);
        left = (left - weights_a[j] * q[j]).max(0.0);
    }
    q
}

/// `σ*(τ)` together with the frontier point attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierOptimum {
    pub sigma_star: f64,
    pub point: Vec<f64>,
}

pub fn sigma_star_point(
    frontier: &FrontierSpec,
    truth: &TruthModel,
    tau: f64,
) -> Result<FrontierOptimum> {
    frontier.check_truth(truth)?;
    frontier.check_tau(tau)?;
    let w = hyperplane_weights(truth)?;
    Ok(optimum(frontier, truth, &w, tau))
}

fn optimum(frontier: &FrontierSpec, truth: &TruthModel, w: &[f64], tau: f64) -> FrontierOptimum {
    let point = knapsack_fill(w, &frontier.weights_a, frontier.budget.eval(tau));
    let sigma_star = w
        .iter()
        .zip(&point)
        .zip(truth.q_human())
        .map(|((w, q), h)| w * (q - h))
        .sum();
    FrontierOptimum { sigma_star, point }
}

/// `σ*(τ) = max_{q ∈ P(τ)} σ(q)`.
pub fn sigma_star(frontier: &FrontierSpec, truth: &TruthModel, tau: f64) -> Result<f64> {
    Ok(sigma_star_point(frontier, truth, tau)?.sigma_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathThresholds {
    /// Last time at which no feasible technology beats the human on any task.
    pub tau1: f64,
    /// `σ*(τ̃) = 0`: full adoption becomes sustainable under projection.
    pub tau_tilde: f64,
    /// First time the human vector `qᴴ` itself is feasible.
    pub tau2: f64,
    /// From here full adoption beats every partial policy by the margin
    /// `min_j R_j (1 − qᴴ_j)`.
    pub tau3: f64,
}

/// Smallest `τ ∈ [lo, hi]` where the monotone predicate turns true.
fn first_true(mut lo: f64, mut hi: f64, mut pred: impl FnMut(f64) -> bool) -> f64 {
    if pred(lo) {
        return lo;
    }
    while hi - lo > ROOT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn thresholds(frontier: &FrontierSpec, truth: &TruthModel) -> Result<PathThresholds> {
    frontier.check_truth(truth)?;
    let n = frontier.len();
    if n < 2 {
        return Err(Error::NonDegeneracy(n));
    }
    let a = &frontier.weights_a;
    let qh = truth.q_human();
    let w = hyperplane_weights(truth)?;
    let b = &frontier.budget;

    let tau1 = b.inverse(
        a.iter()
            .zip(qh)
            .map(|(a, q)| a * q)
            .fold(f64::INFINITY, f64::min),
    );
    let tau2 = b.inverse(a.iter().zip(qh).map(|(a, q)| a * q).sum());
    let tau_tilde = first_true(0.0, frontier.tau_bar, |t| {
        optimum(frontier, truth, &w, t).sigma_star >= 0.0
    });

    let rewards = truth.domain().rewards();
    let total: f64 = rewards.iter().sum();
    let margin = rewards
        .iter()
        .zip(qh)
        .map(|(r, q)| r * (1.0 - q))
        .fold(f64::INFINITY, f64::min);
    let tau3 = first_true(0.0, frontier.tau_bar, |t| {
        let p = optimum(frontier, truth, &w, t).point;
        rewards.iter().zip(&p).map(|(r, q)| r * q).sum::<f64>() > total - margin
    });

    let th = PathThresholds {
        tau1,
        tau_tilde,
        tau2,
        tau3,
    };
    let slack = 1e-9;
    if !(tau1 < tau_tilde && tau_tilde <= tau2 + slack && tau2 <= tau3 + slack) {
        return Err(Error::Domain(format!(
            "threshold ordering violated: {th:?}"
        )));
    }
    Ok(th)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimalRegime {
    None,
    Partial,
    PartialOrFull,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HpRegime {
    None,
    FullPossible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathDistortion {
    Aligned,
    DelayedAdoption,
    OverAdoptionRisk,
}

impl fmt::Display for OptimalRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimalRegime::None => "none",
            OptimalRegime::Partial => "partial",
            OptimalRegime::PartialOrFull => "partial-or-full",
            OptimalRegime::Full => "full",
        })
    }
}

impl fmt::Display for HpRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HpRegime::None => "none",
            HpRegime::FullPossible => "full-possible",
        })
    }
}

impl fmt::Display for PathDistortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathDistortion::Aligned => "aligned",
            PathDistortion::DelayedAdoption => "delayed-adoption",
            PathDistortion::OverAdoptionRisk => "over-adoption-risk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub tau: f64,
    pub sigma_star: f64,
    pub optimal_regime: OptimalRegime,
    pub hp_regime: HpRegime,
    pub distortion: PathDistortion,
}

pub fn classify_tau(th: &PathThresholds, tau: f64) -> (OptimalRegime, HpRegime, PathDistortion) {
    let optimal = if tau <= th.tau1 {
        OptimalRegime::None
    } else if tau < th.tau2 {
        OptimalRegime::Partial
    } else if tau < th.tau3 {
        OptimalRegime::PartialOrFull
    } else {
        OptimalRegime::Full
    };
    let hp = if tau > th.tau_tilde {
        HpRegime::FullPossible
    } else {
        HpRegime::None
    };
    let distortion = if tau > th.tau1 && tau < th.tau_tilde {
        PathDistortion::DelayedAdoption
    } else if tau > th.tau_tilde && tau < th.tau2 {
        PathDistortion::OverAdoptionRisk
    } else {
        PathDistortion::Aligned
    };
    (optimal, hp, distortion)
}

pub fn regime_table(
    frontier: &FrontierSpec,
    truth: &TruthModel,
    tau_grid: &[f64],
) -> Result<Vec<RegimeRow>> {
    let th = thresholds(frontier, truth)?;
    let w = hyperplane_weights(truth)?;
    tau_grid
        .iter()
        .map(|&tau| {
            frontier.check_tau(tau)?;
            let (optimal_regime, hp_regime, distortion) = classify_tau(&th, tau);
            Ok(RegimeRow {
                tau,
                sigma_star: optimum(frontier, truth, &w, tau).sigma_star,
                optimal_regime,
                hp_regime,
                distortion,
            })
        })
        .collect()
}

pub const REGIME_CSV_HEADER: &str = "tau,sigma_star,optimal_regime,hp_regime,distortion";

pub fn write_regime_csv<W: Write>(rows: &[RegimeRow], mut out: W) -> Result<()> {
    writeln!(out, "{REGIME_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.6},{:.6},{},{},{}",
            r.tau, r.sigma_star, r.optimal_regime, r.hp_regime, r.distortion
        )?;
    }
    Ok(())
}

pub const THRESHOLDS_CSV_HEADER: &str = "tau1,tau_tilde,tau2,tau3";

pub fn write_thresholds_csv<W: Write>(th: &PathThresholds, mut out: W) -> Result<()> {
    writeln!(out, "{THRESHOLDS_CSV_HEADER}")?;
    writeln!(
        out,
        "{:.6},{:.6},{:.6},{:.6}",
        th.tau1, th.tau_tilde, th.tau2, th.tau3
    )?;
    Ok(())
}
