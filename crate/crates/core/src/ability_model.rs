//! Subjective success-rate functions `p(θ, δ)` and the task domain they act on.
//!
//! A [`SuccessModel`] maps latent ability `θ` and task difficulty `δ` to a
//! success probability. The parametric kinds apply a link to `a·(θ − δ)`:
//!
//! * logistic: `p = 1 / (1 + exp(−a(θ − δ)))` (Rasch when `a = 1`)
//! * normal ogive: `p = Φ(a(θ − δ))`
//!
//! A lookup kind interpolates a rectangular `(θ, δ) → p` table bilinearly.
//!
//! All three must satisfy the ability-model axioms: strictly increasing in `θ`,
//! strictly decreasing in `δ`, and the monotone likelihood ratio property for
//! both successes and failures. The verifiers below check those axioms on
//! finite grids and report the first violation found.
//!
//! Log-probabilities are computed directly from the link (never as `ln(p)`
//! of a rounded `p`), so the tails stay accurate far beyond the range where
//! `p` itself saturates to 0 or 1 in `f64`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{ensure_finite, ensure_strictly_increasing, Error, Result};
use crate::report::CheckReport;

/// Lower end of the default ability grid.
pub const DEFAULT_THETA_MIN: f64 = -6.0;
/// Upper end of the default ability grid.
pub const DEFAULT_THETA_MAX: f64 = 6.0;
/// Number of points on the default ability grid.
pub const DEFAULT_THETA_POINTS: usize = 2001;

/// Slack on MLRP log-ratio comparisons, absorbing rounding only.
pub const MLRP_SLACK: f64 = 1e-12;
/// Slack on the log-concavity chord test.
pub const CONCAVITY_SLACK: f64 = 1e-12;

const FD_STEP: f64 = 1e-6;
const HULL_EPS: f64 = 1e-12;

/// `n` evenly spaced points from `lo` to `hi` inclusive; endpoints are exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            v
        }
    }
}

/// The default ability grid, `θ ∈ [−6, 6]` with 2001 points.
pub fn default_theta_grid() -> Vec<f64> {
    linspace(DEFAULT_THETA_MIN, DEFAULT_THETA_MAX, DEFAULT_THETA_POINTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    Logistic,
    NormalOgive,
    Lookup,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Logistic => "logistic",
            LinkKind::NormalOgive => "normal-ogive",
            LinkKind::Lookup => "lookup",
        })
    }
}

/// Rectangular table of success rates on a `(θ, δ)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    thetas: Vec<f64>,
    deltas: Vec<f64>,
    /// Row-major: `values[i * deltas.len() + j] = p(thetas[i], deltas[j])`.
    values: Vec<f64>,
}

impl LookupTable {
    pub fn new(thetas: Vec<f64>, deltas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure_strictly_increasing("lookup theta axis", &thetas, 2)?;
        ensure_strictly_increasing("lookup delta axis", &deltas, 2)?;
        if values.len() != thetas.len() * deltas.len() {
            return Err(Error::Input(format!(
                "lookup table has {} values, expected {}x{}",
                values.len(),
                thetas.len(),
                deltas.len()
            )));
        }
        if let Some(p) = values.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Input(format!("lookup value {p} is not in (0,1)")));
        }
        Ok(Self {
            thetas,
            deltas,
            values,
        })
    }

    /// Tabulates a parametric model on the given axes.
    pub fn tabulate(model: &SuccessModel, thetas: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(thetas.len() * deltas.len());
        for &t in &thetas {
            for &d in &deltas {
                values.push(model.success_rate(t, d)?);
            }
        }
        Self::new(thetas, deltas, values)
    }

    /// Builds a table from scattered `(θ, δ, p)` triples that must cover a full grid.
    pub fn from_points(points: &[(f64, f64, f64)]) -> Result<Self> {
        let mut thetas: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut deltas: Vec<f64> = points.iter().map(|p| p.1).collect();
        for v in thetas.iter().chain(deltas.iter()) {
            ensure_finite("lookup coordinate", *v)?;
        }
        thetas.sort_by(f64::total_cmp);
        thetas.dedup();
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        let nd = deltas.len();
        let mut values = vec![f64::NAN; thetas.len() * nd];
        for &(t, d, p) in points {
            let i = thetas.binary_search_by(|x| x.total_cmp(&t)).unwrap_or(0);
            let j = deltas.binary_search_by(|x| x.total_cmp(&d)).unwrap_or(0);
            if !values[i * nd + j].is_nan() {
                return Err(Error::Input(format!("duplicate lookup cell ({t}, {d})")));
            }
            values[i * nd + j] = p;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Input(
                "lookup points do not cover a full theta x delta grid".into(),
            ));
        }
        Self::new(thetas, deltas, values)
    }

    /// Reads CSV with header `theta,delta,p`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            theta: f64,
            delta: f64,
            p: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["theta", "delta", "p"] {
            return Err(Error::Input(format!(
                "lookup CSV header must be `theta,delta,p`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            points.push((row.theta, row.delta, row.p));
        }
        Self::from_points(&points)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.deltas.len() + j]
    }

    /// Returns a copy with one cell replaced.
    pub fn with_cell(&self, i: usize, j: usize, p: f64) -> Result<Self> {
        let mut values = self.values.clone();
        values[i * self.deltas.len() + j] = p;
        Self::new(self.thetas.clone(), self.deltas.clone(), values)
    }

    fn contains(&self, theta: f64, delta: f64) -> bool {
        let (t0, t1) = (self.thetas[0], *self.thetas.last().unwrap());
        let (d0, d1) = (self.deltas[0], *self.deltas.last().unwrap());
        theta >= t0 - HULL_EPS
            && theta <= t1 + HULL_EPS
            && delta >= d0 - HULL_EPS
            && delta <= d1 + HULL_EPS
    }

    fn interpolate(&self, theta: f64, delta: f64) -> Result<f64> {
        if !self.contains(theta, delta) {
            return Err(Error::Domain(format!(
                "({theta}, {delta}) lies outside the lookup table hull"
            )));
        }
        let (i, u) = bracket(&self.thetas, theta);
        let (j, v) = bracket(&self.deltas, delta);
        let p00 = self.get(i, j);
        let p01 = self.get(i, j + 1);
        let p10 = self.get(i + 1, j);
        let p11 = self.get(i + 1, j + 1);
        Ok((1.0 - u) * ((1.0 - v) * p00 + v * p01) + u * ((1.0 - v) * p10 + v * p11))
    }
}

/// Index of the cell containing `x` and the fractional position inside it.
fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    let i = match axis.binary_search_by(|a| a.total_cmp(&x)) {
        Ok(i) => i.min(last),
        Err(0) => 0,
        Err(i) => (i - 1).min(last),
    };
    let u = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, u)
}

/// A success-rate function `p(θ, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessModel {
    kind: LinkKind,
    discrimination: f64,
    table: Option<Arc<LookupTable>>,
}

impl Default for SuccessModel {
    fn default() -> Self {
        Self {
            kind: LinkKind::Logistic,
            discrimination: 1.0,
            table: None,
        }
    }
}

impl SuccessModel {
    pub fn logistic(discrimination: f64) -> Result<Self> {
        Self::parametric(LinkKind::Logistic, discrimination)
    }

    pub fn normal_ogive(discrimination: f64) -> Result<Self> {
        Self::parametric(LinkKind::NormalOgive, discrimination)
    }

    pub fn parametric(kind: LinkKind, discrimination: f64) -> Result<Self> {
        if kind == LinkKind::Lookup {
            return Err(Error::Input("lookup models are built from a table".into()));
        }
        if !(discrimination.is_finite() && discrimination > 0.0) {
            return Err(Error::Input(format!(
                "discrimination must be positive and finite, got {discrimination}"
            )));
        }
        Ok(Self {
            kind,
            discrimination,
            table: None,
        })
    }

    /// Lookup model, validated against monotonicity and MLRP on the table's own nodes.
    pub fn lookup(table: LookupTable) -> Result<Self> {
        let model = Self::lookup_unchecked(table);
        let table = model.table.as_ref().unwrap();
        let (thetas, deltas) = (table.thetas.clone(), table.deltas.clone());
        let mono = model.verify_monotonicity(&thetas, &deltas)?;
        if let Some(v) = mono.violation {
            return Err(Error::Axiom(v.to_string()));
        }
        let mlrp = model.verify_mlrp(&thetas, &deltas)?;
        if let Some(v) = mlrp.violation {
            return Err(Error::Axiom(v.to_string()));
        }
        Ok(model)
    }

    /// Lookup model without axiom validation; used to diagnose suspect tables.
    pub fn lookup_unchecked(table: LookupTable) -> Self {
        Self {
            kind: LinkKind::Lookup,
            discrimination: 1.0,
            table: Some(Arc::new(table)),
        }
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    pub fn discrimination(&self) -> f64 {
        self.discrimination
    }

    pub fn table(&self) -> Option<&LookupTable> {
        self.table.as_deref()
    }

    fn check_args(theta: f64, delta: f64) -> Result<()> {
        ensure_finite("theta", theta)?;
        ensure_finite("delta", delta)?;
        Ok(())
    }

    /// `p(θ, δ)`, always strictly inside `(0, 1)`.
    pub fn success_rate(&self, theta: f64, delta: f64) -> Result<f64> {
        Self::check_args(theta, delta)?;
        let p = match self.kind {
            LinkKind::Logistic => sigmoid(self.discrimination * (theta - delta)),
            LinkKind::NormalOgive => norm_cdf(self.discrimination * (theta - delta)),
            LinkKind::Lookup => self.table.as_ref().unwrap().interpolate(theta, delta)?,
        };
        Ok(clamp_open_unit(p))
    }

    /// `1 − p(θ, δ)`, evaluated without cancellation.
    pub fn failure_rate(&self, theta: f64, delta: f64) -> Result<f64> {
        Self::check_args(theta, delta)?;
        let q = match self.kind {
            LinkKind::Logistic => sigmoid(-self.discrimination * (theta - delta)),
            LinkKind::NormalOgive => norm_cdf(-self.discrimination * (theta - delta)),
            LinkKind::Lookup => 1.0 - self.table.as_ref().unwrap().interpolate(theta, delta)?,
        };
        Ok(clamp_open_unit(q))
    }

    /// `(ln p, ln(1 − p))` at `(θ, δ)`.
    pub fn log_rates(&self, theta: f64, delta: f64) -> Result<(f64, f64)> {
        Self::check_args(theta, delta)?;
        let x = self.discrimination * (theta - delta);
        Ok(match self.kind {
            LinkKind::Logistic => (-softplus(-x), -softplus(x)),
            LinkKind::NormalOgive => (ln_norm_cdf(x), ln_norm_cdf(-x)),
            LinkKind::Lookup => {
                let p = self.table.as_ref().unwrap().interpolate(theta, delta)?;
                (p.ln(), (-p).ln_1p())
            }
        })
    }

    /// `(∂θ ln p, ∂θ ln(1 − p))`; the first is positive, the second negative.
    pub fn log_rate_slopes(&self, theta: f64, delta: f64) -> Result<(f64, f64)> {
        Self::check_args(theta, delta)?;
        let a = self.discrimination;
        let x = a * (theta - delta);
        Ok(match self.kind {
            LinkKind::Logistic => (a * sigmoid(-x), -a * sigmoid(x)),
            LinkKind::NormalOgive => {
                let ln_pdf = -0.5 * x * x - 0.5 * (2.0 * PI).ln();
                (
                    a * (ln_pdf - ln_norm_cdf(x)).exp(),
                    -a * (ln_pdf - ln_norm_cdf(-x)).exp(),
                )
            }
            LinkKind::Lookup => {
                let (lo, hi) = self.fd_points(theta);
                let (ls_lo, lf_lo) = self.log_rates(lo, delta)?;
                let (ls_hi, lf_hi) = self.log_rates(hi, delta)?;
                ((ls_hi - ls_lo) / (hi - lo), (lf_hi - lf_lo) / (hi - lo))
            }
        })
    }

    /// `∂p/∂θ`. Closed form for the parametric kinds, central difference for lookups.
    pub fn slope(&self, theta: f64, delta: f64) -> Result<f64> {
        Self::check_args(theta, delta)?;
        let a = self.discrimination;
        let x = a * (theta - delta);
        Ok(match self.kind {
            LinkKind::Logistic => a * sigmoid(x) * sigmoid(-x),
            LinkKind::NormalOgive => a * (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            LinkKind::Lookup => {
                let (lo, hi) = self.fd_points(theta);
                (self.success_rate(hi, delta)? - self.success_rate(lo, delta)?) / (hi - lo)
            }
        })
    }

    /// `h(θ, δ) = (∂p/∂θ) / (p(1 − p))`, the per-task weight in the KL
    /// first-order condition. Equal to `a` for the logistic link.
    pub fn information_weight(&self, theta: f64, delta: f64) -> Result<f64> {
        let (ds, df) = self.log_rate_slopes(theta, delta)?;
        Ok(ds - df)
    }

    fn fd_points(&self, theta: f64) -> (f64, f64) {
        let (t0, t1) = match &self.table {
            Some(t) => (t.thetas[0], *t.thetas.last().unwrap()),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        ((theta - FD_STEP).max(t0), (theta + FD_STEP).min(t1))
    }

    /// The difficulty `δ` at which an agent of ability `θ` succeeds with probability `rate`.
    pub fn difficulty_for_rate(&self, theta: f64, rate: f64) -> Result<f64> {
        ensure_finite("theta", theta)?;
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::Input(format!("success rate {rate} is not in (0,1)")));
        }
        let a = self.discrimination;
        let (mut lo, mut hi) = match self.kind {
            LinkKind::Logistic => return Ok(theta - (rate / (1.0 - rate)).ln() / a),
            LinkKind::NormalOgive => (theta - 40.0 / a, theta + 40.0 / a),
            LinkKind::Lookup => {
                let t = self.table.as_ref().unwrap();
                (t.deltas[0], *t.deltas.last().unwrap())
            }
        };
        if self.success_rate(theta, lo)? < rate || self.success_rate(theta, hi)? > rate {
            return Err(Error::Domain(format!(
                "no difficulty in [{lo}, {hi}] yields success rate {rate} at theta {theta}"
            )));
        }
        // p is decreasing in δ
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.success_rate(theta, mid)? > rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn log_grid(&self, thetas: &[f64], deltas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut ls = Vec::with_capacity(thetas.len() * deltas.len());
        let mut lf = Vec::with_capacity(thetas.len() * deltas.len());
        for &t in thetas {
            for &d in deltas {
                let (s, f) = self.log_rates(t, d)?;
                ls.push(s);
                lf.push(f);
            }
        }
        Ok((ls, lf))
    }

    /// Strict monotonicity on the grid: increasing in `θ`, decreasing in `δ`,
    /// checked on every adjacent pair.
    ///
    /// A pair passes when `ln p` and `ln(1 − p)` move in the required
    /// directions with no reversal and at least one strict change, which keeps
    /// the check meaningful where `p` saturates in `f64`.
    pub fn verify_monotonicity(
        &self,
        theta_grid: &[f64],
        delta_grid: &[f64],
    ) -> Result<CheckReport<MonotonicityViolation>> {
        ensure_strictly_increasing("theta grid", theta_grid, 2)?;
        ensure_strictly_increasing("delta grid", delta_grid, 2)?;
        let (ls, lf) = self.log_grid(theta_grid, delta_grid)?;
        let nd = delta_grid.len();
        let mut checked = 0;
        let strictly_up = |a: usize, b: usize| {
            ls[b] >= ls[a] && lf[b] <= lf[a] && (ls[b] > ls[a] || lf[b] < lf[a])
        };
        for j in 0..nd {
            for i in 0..theta_grid.len() - 1 {
                checked += 1;
                if !strictly_up(i * nd + j, (i + 1) * nd + j) {
                    return Ok(CheckReport::fail(
                        checked,
                        MonotonicityViolation::Ability {
                            theta: theta_grid[i],
                            theta_next: theta_grid[i + 1],
                            delta: delta_grid[j],
                        },
                    ));
                }
            }
        }
        for i in 0..theta_grid.len() {
            for j in 0..nd - 1 {
                checked += 1;
                if !strictly_up(i * nd + j + 1, i * nd + j) {
                    return Ok(CheckReport::fail(
                        checked,
                        MonotonicityViolation::Difficulty {
                            theta: theta_grid[i],
                            delta: delta_grid[j],
                            delta_next: delta_grid[j + 1],
                        },
                    ));
                }
            }
        }
        Ok(CheckReport::pass(checked))
    }

    /// Checks both MLRP inequalities for every `θ < θ′`, `δ < δ′` on the grids.
    ///
    /// Ratios are compared in log space with an absolute slack of
    /// [`MLRP_SLACK`]. Quadruples are visited in lexicographic order of
    /// `(θ, θ′, δ, δ′)` indices and the first violation is reported.
    pub fn verify_mlrp(
        &self,
        theta_grid: &[f64],
        delta_grid: &[f64],
    ) -> Result<CheckReport<MlrpViolation>> {
        ensure_strictly_increasing("theta grid", theta_grid, 2)?;
        ensure_strictly_increasing("delta grid", delta_grid, 2)?;
        let (ls, lf) = self.log_grid(theta_grid, delta_grid)?;
        let nd = delta_grid.len();
        let at = |i: usize, j: usize| i * nd + j;
        let mut checked = 0;
        for i in 0..theta_grid.len() {
            for k in i + 1..theta_grid.len() {
                for j in 0..nd {
                    for l in j + 1..nd {
                        checked += 1;
                        let quad = |condition, lhs, rhs| MlrpViolation {
                            theta: theta_grid[i],
                            theta_hi: theta_grid[k],
                            delta: delta_grid[j],
                            delta_hi: delta_grid[l],
                            condition,
                            lhs,
                            rhs,
                        };
                        // p(θ′,δ′)/p(θ,δ′) ≥ p(θ′,δ)/p(θ,δ)
                        let lhs = ls[at(k, l)] - ls[at(i, l)];
                        let rhs = ls[at(k, j)] - ls[at(i, j)];
                        if lhs < rhs - MLRP_SLACK {
                            return Ok(CheckReport::fail(
                                checked,
                                quad(MlrpCondition::Success, lhs, rhs),
                            ));
                        }
                        // (1−p(θ,δ′))/(1−p(θ′,δ′)) ≤ (1−p(θ,δ))/(1−p(θ′,δ))
                        let lhs = lf[at(i, l)] - lf[at(k, l)];
                        let rhs = lf[at(i, j)] - lf[at(k, j)];
                        if lhs > rhs + MLRP_SLACK {
                            return Ok(CheckReport::fail(
                                checked,
                                quad(MlrpCondition::Failure, lhs, rhs),
                            ));
                        }
                    }
                }
            }
        }
        Ok(CheckReport::pass(checked))
    }

    /// Concavity of `ln p` and `ln(1 − p)` along `θ` for each `δ`.
    ///
    /// Each interior grid value must lie on or above the chord through its
    /// neighbours, up to [`CONCAVITY_SLACK`]. On a uniform grid this is half
    /// the second difference.
    pub fn verify_log_concavity(
        &self,
        theta_grid: &[f64],
        delta_grid: &[f64],
    ) -> Result<CheckReport<ConcavityViolation>> {
        ensure_strictly_increasing("theta grid", theta_grid, 3)?;
        ensure_strictly_increasing("delta grid", delta_grid, 1)?;
        let (ls, lf) = self.log_grid(theta_grid, delta_grid)?;
        let nd = delta_grid.len();
        let mut checked = 0;
        for j in 0..nd {
            for i in 1..theta_grid.len() - 1 {
                let h0 = theta_grid[i] - theta_grid[i - 1];
                let h1 = theta_grid[i + 1] - theta_grid[i];
                for (series, failure) in [(&ls, false), (&lf, true)] {
                    checked += 1;
                    let chord =
                        (h1 * series[(i - 1) * nd + j] + h0 * series[(i + 1) * nd + j]) / (h0 + h1);
                    let excess = chord - series[i * nd + j];
                    if excess > CONCAVITY_SLACK {
                        return Ok(CheckReport::fail(
                            checked,
                            ConcavityViolation {
                                theta: theta_grid[i],
                                delta: delta_grid[j],
                                failure_branch: failure,
                                excess,
                            },
                        ));
                    }
                }
            }
        }
        Ok(CheckReport::pass(checked))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MlrpCondition {
    /// Success likelihood ratio fails to increase with difficulty.
    Success,
    /// Failure likelihood ratio fails to decrease with difficulty.
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlrpViolation {
    pub theta: f64,
    pub theta_hi: f64,
    pub delta: f64,
    pub delta_hi: f64,
    pub condition: MlrpCondition,
    /// Log of the left-hand ratio.
    pub lhs: f64,
    /// Log of the right-hand ratio.
    pub rhs: f64,
}

impl fmt::Display for MlrpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MLRP ({:?}) violated at theta={} theta'={} delta={} delta'={} (log ratios {:.6e} vs {:.6e})",
            self.condition, self.theta, self.theta_hi, self.delta, self.delta_hi, self.lhs, self.rhs
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MonotonicityViolation {
    Ability {
        theta: f64,
        theta_next: f64,
        delta: f64,
    },
    Difficulty {
        theta: f64,
        delta: f64,
        delta_next: f64,
    },
}

impl fmt::Display for MonotonicityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ability {
                theta,
                theta_next,
                delta,
            } => write!(
                f,
                "not strictly increasing in theta between {theta} and {theta_next} at delta={delta}"
            ),
            Self::Difficulty {
                theta,
                delta,
                delta_next,
            } => write!(
                f,
                "not strictly decreasing in delta between {delta} and {delta_next} at theta={theta}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityViolation {
    pub theta: f64,
    pub delta: f64,
    /// `true` when the violation is in `ln(1 − p)` rather than `ln p`.
    pub failure_branch: bool,
    pub excess: f64,
}

impl fmt::Display for ConcavityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let which = if self.failure_branch {
            "ln(1-p)"
        } else {
            "ln p"
        };
        write!(
            f,
            "{which} not concave at theta={} delta={} (chord excess {:.3e})",
            self.theta, self.delta, self.excess
        )
    }
}

fn clamp_open_unit(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln Φ(x)`, accurate in both tails.
pub(crate) fn ln_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-0.5 * erfc(x / SQRT_2)).ln_1p()
    } else if x > -30.0 {
        (0.5 * erfc(-x / SQRT_2)).ln()
    } else {
        // Asymptotic Mills-ratio series; the first omitted term is below 2e-14 at x = -30.
        let z = 1.0 / (x * x);
        let series =
            1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z * (1.0 - 9.0 * z))));
        -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Task with its human difficulty, an optional true AI difficulty and a reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub human_difficulty: f64,
    #[serde(default)]
    pub ai_difficulty: Option<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskDomain {
    tasks: Vec<Task>,
}

impl TaskDomain {
    pub fn new(tasks: Vec<Task>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Input("task domain is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &tasks {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::Input(format!("duplicate task id `{}`", t.id)));
            }
            ensure_finite("human difficulty", t.human_difficulty)?;
            if let Some(d) = t.ai_difficulty {
                ensure_finite("ai difficulty", d)?;
            }
            if !(t.reward.is_finite() && t.reward > 0.0) {
                return Err(Error::Input(format!(
                    "reward for `{}` must be strictly positive, got {}",
                    t.id, t.reward
                )));
            }
        }
        Ok(Self { tasks })
    }

    /// Tasks `t1..tn` with the given human difficulties and unit rewards.
    pub fn from_difficulties(human: &[f64]) -> Result<Self> {
        Self::new(
            human
                .iter()
                .enumerate()
                .map(|(i, &d)| Task {
                    id: format!("t{}", i + 1),
                    human_difficulty: d,
                    ai_difficulty: None,
                    reward: 1.0,
                })
                .collect(),
        )
    }

    pub fn with_rewards(mut self, rewards: &[f64]) -> Result<Self> {
        if rewards.len() != self.tasks.len() {
            return Err(Error::Input(format!(
                "{} rewards for {} tasks",
                rewards.len(),
                self.tasks.len()
            )));
        }
        for (t, &r) in self.tasks.iter_mut().zip(rewards) {
            t.reward = r;
        }
        Self::new(self.tasks)
    }

    pub fn with_ai_difficulties(mut self, ai: &[f64]) -> Result<Self> {
        if ai.len() != self.tasks.len() {
            return Err(Error::Input(format!(
                "{} AI difficulties for {} tasks",
                ai.len(),
                self.tasks.len()
            )));
        }
        for (t, &d) in self.tasks.iter_mut().zip(ai) {
            t.ai_difficulty = Some(d);
        }
        Self::new(self.tasks)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn human_difficulties(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.human_difficulty).collect()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.reward).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    /// Perceived AI difficulty equals human difficulty.
    FullProjection,
    /// Convex combination with anchoring weight `λ`.
    Partial,
    /// Perceived AI difficulty equals the true AI difficulty.
    None,
}

/// How perceived AI difficulty is anchored on human difficulty.
///
/// With a normal prior on AI difficulty centred at the human difficulty
/// (sd `prior_sd`) and a noisy signal of the AI difficulty (sd
/// `signal_noise_sd`), the expected posterior mean is
/// `λ·δᴴ + (1 − λ)·δᴬ` with `λ = σ_s² / (σ_s² + σ_H²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub lambda: f64,
    #[serde(default)]
    pub signal_noise_sd: Option<f64>,
    #[serde(default)]
    pub prior_sd: Option<f64>,
    pub mode: ProjectionMode,
}

impl ProjectionConfig {
    pub fn full() -> Self {
        Self {
            lambda: 1.0,
            signal_noise_sd: None,
            prior_sd: None,
            mode: ProjectionMode::FullProjection,
        }
    }

    pub fn none() -> Self {
        Self {
            lambda: 0.0,
            signal_noise_sd: None,
            prior_sd: None,
            mode: ProjectionMode::None,
        }
    }

    pub fn partial(lambda: f64) -> Result<Self> {
        let cfg = Self {
            lambda,
            signal_noise_sd: None,
            prior_sd: None,
            mode: ProjectionMode::Partial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Anchoring weight from the signal-noise and prior standard deviations.
    pub fn from_noise(signal_noise_sd: f64, prior_sd: f64) -> Result<Self> {
        for (name, v) in [("signal_noise_sd", signal_noise_sd), ("prior_sd", prior_sd)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        let s2 = signal_noise_sd * signal_noise_sd;
        let cfg = Self {
            lambda: s2 / (s2 + prior_sd * prior_sd),
            signal_noise_sd: Some(signal_noise_sd),
            prior_sd: Some(prior_sd),
            mode: ProjectionMode::Partial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Input(format!(
                "lambda {} is not in [0,1]",
                self.lambda
            )));
        }
        if let (Some(s), Some(h)) = (self.signal_noise_sd, self.prior_sd) {
            if !(s > 0.0 && h > 0.0) {
                return Err(Error::Input("standard deviations must be positive".into()));
            }
            let implied = s * s / (s * s + h * h);
            if (implied - self.lambda).abs() > 1e-12 {
                return Err(Error::Input(format!(
                    "lambda {} is inconsistent with the variances (implied {implied})",
                    self.lambda
                )));
            }
        }
        Ok(())
    }
}

/// Perceived AI difficulty of a task.
pub fn project_difficulty(
    config: &ProjectionConfig,
    human_delta: f64,
    ai_delta: f64,
) -> Result<f64> {
    config.validate()?;
    ensure_finite("human difficulty", human_delta)?;
    ensure_finite("ai difficulty", ai_delta)?;
    Ok(match config.mode {
        ProjectionMode::FullProjection => human_delta,
        ProjectionMode::None => ai_delta,
        ProjectionMode::Partial => config.lambda * human_delta + (1.0 - config.lambda) * ai_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn logistic() -> SuccessModel {
        SuccessModel::logistic(1.0).unwrap()
    }

    #[test]
    fn logistic_reference_values() {
        let m = logistic();
        assert_eq!(m.success_rate(0.0, 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(
            m.success_rate(1.0, 0.0).unwrap(),
            0.731_058_578_630_004_9,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            m.success_rate(0.0, 1.0).unwrap(),
            0.268_941_421_369_995_1,
            epsilon = 1e-9
        );
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let m = logistic();
        assert!(matches!(
            m.success_rate(f64::NAN, 0.0),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            m.success_rate(0.0, f64::INFINITY),
            Err(Error::Input(_))
        ));
        assert!(SuccessModel::logistic(0.0).is_err());
        assert!(SuccessModel::normal_ogive(-1.0).is_err());
    }

    #[test]
    fn rates_stay_inside_open_unit_interval() {
        for m in [logistic(), SuccessModel::normal_ogive(3.0).unwrap()] {
            for x in [-2000.0, -40.0, 0.0, 40.0, 2000.0] {
                let p = m.success_rate(x, 0.0).unwrap();
                assert!(p > 0.0 && p < 1.0, "{p}");
            }
        }
    }

    #[test]
    fn log_rates_match_direct_logs_in_the_bulk() {
        for m in [logistic(), SuccessModel::normal_ogive(1.3).unwrap()] {
            for t in linspace(-4.0, 4.0, 17) {
                let (ls, lf) = m.log_rates(t, 0.3).unwrap();
                assert_abs_diff_eq!(ls, m.success_rate(t, 0.3).unwrap().ln(), epsilon = 1e-12);
                assert_abs_diff_eq!(lf, m.failure_rate(t, 0.3).unwrap().ln(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ln_norm_cdf_is_continuous_across_series_switch() {
        let below = ln_norm_cdf(-30.0 - 1e-9);
        let above = ln_norm_cdf(-30.0 + 1e-9);
        // derivative is about 30, so the gap should be ~6e-8
        assert!(
            (above - below - 30.0 * 2e-9).abs() < 1e-10,
            "{below} {above}"
        );
    }

    #[test]
    fn slopes_match_finite_differences() {
        for m in [logistic(), SuccessModel::normal_ogive(0.7).unwrap()] {
            for t in [-2.0, -0.4, 0.0, 1.1, 3.0] {
                let h = 1e-5;
                let fd = (m.success_rate(t + h, 0.2).unwrap()
                    - m.success_rate(t - h, 0.2).unwrap())
                    / (2.0 * h);
                assert_abs_diff_eq!(m.slope(t, 0.2).unwrap(), fd, epsilon = 1e-8);
                let p = m.success_rate(t, 0.2).unwrap();
                assert_abs_diff_eq!(
                    m.information_weight(t, 0.2).unwrap(),
                    fd / (p * (1.0 - p)),
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn mlrp_passes_for_parametric_links() {
        let thetas = linspace(-2.0, 2.0, 9);
        let deltas = [-1.0, 0.0, 1.0];
        for m in [logistic(), SuccessModel::normal_ogive(1.0).unwrap()] {
            let r = m.verify_mlrp(&thetas, &deltas).unwrap();
            assert!(r.passed(), "{r}");
            assert_eq!(r.checked, 36 * 3);
        }
    }

    #[test]
    fn mlrp_reports_swapped_cell() {
        let thetas = linspace(-2.0, 2.0, 9);
        let deltas = vec![-1.0, 0.0, 1.0];
        let table = LookupTable::tabulate(&logistic(), thetas.clone(), deltas.clone()).unwrap();
        let (i, j) = (4, 1);
        let swapped = table
            .with_cell(i, j, table.get(i + 1, j))
            .unwrap()
            .with_cell(i + 1, j, table.get(i, j))
            .unwrap();
        let model = SuccessModel::lookup_unchecked(swapped.clone());
        let report = model.verify_mlrp(&thetas, &deltas).unwrap();
        let v = report.violation.expect("planted violation must be found");
        let involves_theta = [thetas[i], thetas[i + 1]].contains(&v.theta)
            || [thetas[i], thetas[i + 1]].contains(&v.theta_hi);
        let involves_delta = v.delta == deltas[j] || v.delta_hi == deltas[j];
        assert!(involves_theta && involves_delta, "{v}");
        assert!(matches!(
            SuccessModel::lookup(swapped),
            Err(Error::Axiom(_))
        ));
        assert!(SuccessModel::lookup(table).is_ok());
    }

    #[test]
    fn degenerate_grids_are_input_errors() {
        let m = logistic();
        assert!(matches!(
            m.verify_mlrp(&[0.0], &[0.0, 1.0]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            m.verify_mlrp(&[0.0, 0.0], &[0.0, 1.0]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            m.verify_monotonicity(&[1.0, 0.0], &[0.0, 1.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn default_grid_is_monotone_and_log_concave() {
        let thetas = default_theta_grid();
        let deltas = [-3.0, -1.0, 0.0, 1.0, 3.0];
        for m in [logistic(), SuccessModel::normal_ogive(1.0).unwrap()] {
            assert!(m.verify_monotonicity(&thetas, &deltas).unwrap().passed());
            let r = m.verify_log_concavity(&thetas, &deltas).unwrap();
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn lookup_interpolates_and_rejects_out_of_hull() {
        let table = LookupTable::tabulate(
            &logistic(),
            linspace(-3.0, 3.0, 61),
            linspace(-2.0, 2.0, 41),
        )
        .unwrap();
        let m = SuccessModel::lookup(table).unwrap();
        assert_abs_diff_eq!(m.success_rate(0.0, 0.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            m.success_rate(0.55, -0.35).unwrap(),
            0.710_949_502_625_004,
            epsilon = 1e-3
        );
        assert!(matches!(m.success_rate(3.5, 0.0), Err(Error::Domain(_))));
        assert!(matches!(m.success_rate(0.0, -2.1), Err(Error::Domain(_))));
    }

    #[test]
    fn lookup_csv_round_trip() {
        let csv = "theta,delta,p\n0,0,0.5\n0,1,0.3\n1,0,0.7\n1,1,0.5\n";
        let t = LookupTable::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.thetas(), &[0.0, 1.0]);
        assert_eq!(t.get(1, 0), 0.7);
        assert!(LookupTable::from_csv("a,b,c\n0,0,0.5\n".as_bytes()).is_err());
        assert!(
            LookupTable::from_csv("theta,delta,p\n0,0,0.5\n0,1,0.3\n1,0,0.7\n".as_bytes()).is_err()
        );
    }

    #[test]
    fn difficulty_inversion() {
        for m in [logistic(), SuccessModel::normal_ogive(1.7).unwrap()] {
            for q in [0.05, 0.23, 0.5, 0.78, 0.99] {
                let d = m.difficulty_for_rate(0.4, q).unwrap();
                assert_abs_diff_eq!(m.success_rate(0.4, d).unwrap(), q, epsilon = 1e-12);
            }
        }
        assert!(logistic().difficulty_for_rate(0.0, 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = ProjectionConfig::partial(0.5).unwrap();
        assert_abs_diff_eq!(
            project_difficulty(&p, 0.2, 0.8).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let p = ProjectionConfig::partial(1.0).unwrap();
        assert_eq!(project_difficulty(&p, 0.2, 17.0).unwrap(), 0.2);
        let p = ProjectionConfig::partial(0.25).unwrap();
        assert_eq!(project_difficulty(&p, 0.0, 1.0).unwrap(), 0.75);
        assert_eq!(
            project_difficulty(&ProjectionConfig::full(), 0.2, 0.8).unwrap(),
            0.2
        );
        assert_eq!(
            project_difficulty(&ProjectionConfig::none(), 0.2, 0.8).unwrap(),
            0.8
        );
        assert!(ProjectionConfig::partial(1.5).is_err());
    }

    #[test]
    fn lambda_from_variances() {
        let cfg = ProjectionConfig::from_noise(1.0, 1.0).unwrap();
        assert_eq!(cfg.lambda, 0.5);
        let cfg = ProjectionConfig::from_noise(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(cfg.lambda, 0.8, epsilon = 1e-15);
        let bad = ProjectionConfig { lambda: 0.3, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn task_domain_validation() {
        assert!(TaskDomain::from_difficulties(&[]).is_err());
        let d = TaskDomain::from_difficulties(&[0.0, 1.0]).unwrap();
        assert!(d.clone().with_rewards(&[1.0, 0.0]).is_err());
        let dup = vec![d.tasks()[0].clone(), d.tasks()[0].clone()];
        assert!(TaskDomain::new(dup).is_err());
    }
}
