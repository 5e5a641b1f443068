//! Reasonableness of answers and what it teaches about ability.
//!
//! A failed answer is scored by its similarity to the closest useful answer.
//! Scores follow a question-invariant distribution `p̃(θ, r)` over a finite
//! support, so an observer who sees scores learns about `θ` and predicts the
//! chance of a useful answer, `p̃(θ, 1)`.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;

use serde::Serialize;

use crate::belief_engine::AbilityPrior;
use crate::error::{ensure_finite, ensure_strictly_increasing, Error, Result};
use crate::report::CheckReport;

const SYMMETRY_TOL: f64 = 1e-12;
const SCORE_MATCH_TOL: f64 = 1e-12;
/// Default score support.
pub const DEFAULT_SUPPORT: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Pairwise answer similarity `S(w, w')`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Vec<f64>,
}

impl SimilarityTable {
    /// `matrix` is row-major `n × n`. Requires `S(w,w) = 1`, off-diagonal
    /// entries in `[0, 1)` and symmetry.
    pub fn new(ids: Vec<String>, matrix: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if n == 0 || matrix.len() != n * n {
            return Err(Error::Input(format!(
                "similarity matrix has {} entries for {n} answers",
                matrix.len()
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (k, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), k).is_some() {
                return Err(Error::Input(format!("duplicate answer id `{id}`")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let s = matrix[i * n + j];
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::Input(format!(
                        "similarity {s} for ({}, {}) outside [0, 1]",
                        ids[i], ids[j]
                    )));
                }
                if i == j && s != 1.0 {
                    return Err(Error::Input(format!(
                        "self-similarity of `{}` is {s}, not 1",
                        ids[i]
                    )));
                }
                if i != j && s >= 1.0 {
                    return Err(Error::Input(format!(
                        "distinct answers `{}` and `{}` have similarity 1",
                        ids[i], ids[j]
                    )));
                }
                if (s - matrix[j * n + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::Input(format!(
                        "similarity of `{}` and `{}` is not symmetric",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        Ok(Self { ids, index, matrix })
    }

    /// Square CSV: the header row lists answer ids after one leading cell,
    /// and each row starts with its answer id in the same order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let ids: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_owned).collect();
        let mut matrix = Vec::with_capacity(ids.len() * ids.len());
        let mut row = 0;
        for rec in rdr.records() {
            let rec = rec?;
            let Some(id) = ids.get(row) else {
                return Err(Error::Input(
                    "similarity CSV has more rows than columns".into(),
                ));
            };
            if rec.get(0) != Some(id.as_str()) {
                return Err(Error::Input(format!(
                    "row {} should be labelled `{id}`, found `{}`",
                    row + 1,
                    rec.get(0).unwrap_or("")
                )));
            }
            if rec.len() != ids.len() + 1 {
                return Err(Error::Input(format!(
                    "row `{id}` has {} values",
                    rec.len() - 1
                )));
            }
            for field in rec.iter().skip(1) {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Input(format!("bad similarity value `{field}` in row `{id}`"))
                })?;
                matrix.push(v);
            }
            row += 1;
        }
        if row != ids.len() {
            return Err(Error::Input(format!(
                "similarity CSV has {row} rows for {} answers",
                ids.len()
            )));
        }
        Self::new(ids, matrix)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Input(format!("unknown answer id `{id}`")))
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (i, j) = (self.position(a)?, self.position(b)?);
        Ok(self.matrix[i * self.ids.len() + j])
    }
}

/// `r = max_{u ∈ useful} S(answer, u)`; equals 1 exactly for useful answers.
pub fn reasonableness_score<S: AsRef<str>>(
    useful: &[S],
    answer: &str,
    table: &SimilarityTable,
) -> Result<f64> {
    if useful.is_empty() {
        return Err(Error::Input("useful answer set is empty".into()));
    }
    let mut best = 0.0f64;
    for u in useful {
        best = best.max(table.similarity(answer, u.as_ref())?);
    }
    Ok(best)
}

/// Score distribution family over ability.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreFamily {
    /// `p̃(θ, r) ∝ exp(θ r)`.
    ExponentialTilt,
    /// Rows `probs[k]` give the score distribution at `thetas[k]`; rows are
    /// mixed linearly between grid points.
    Lookup {
        thetas: Vec<f64>,
        probs: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasonablenessModel {
    support: Vec<f64>,
    family: ScoreFamily,
}

impl ReasonablenessModel {
    pub fn exponential_tilt(support: Vec<f64>) -> Result<Self> {
        Self::validate_support(&support)?;
        Ok(Self {
            support,
            family: ScoreFamily::ExponentialTilt,
        })
    }

    /// Exponential tilt on [`DEFAULT_SUPPORT`].
    pub fn default_tilt() -> Self {
        Self {
            support: DEFAULT_SUPPORT.to_vec(),
            family: ScoreFamily::ExponentialTilt,
        }
    }

    /// Rows must be strictly positive and sum to one. MLRP is not enforced
    /// here; see [`verify_score_mlrp`].
    pub fn lookup(support: Vec<f64>, thetas: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        Self::validate_support(&support)?;
        ensure_strictly_increasing("lookup thetas", &thetas, 1)?;
        if probs.len() != thetas.len() {
            return Err(Error::Input(format!(
                "{} rows for {} thetas",
                probs.len(),
                thetas.len()
            )));
        }
        for (row, &theta) in probs.iter().zip(&thetas) {
            if row.len() != support.len() {
                return Err(Error::Input(format!(
                    "row at theta={theta} has {} entries",
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
                return Err(Error::Input(format!(
                    "row at theta={theta} has a non-positive probability"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Input(format!(
                    "row at theta={theta} sums to {total}"
                )));
            }
        }
        Ok(Self {
            support,
            family: ScoreFamily::Lookup { thetas, probs },
        })
    }

    fn validate_support(support: &[f64]) -> Result<()> {
        ensure_strictly_increasing("score support", support, 1)?;
        if support[0] < 0.0 || *support.last().unwrap() != 1.0 {
            return Err(Error::Input(
                "score support must lie in [0, 1] and contain 1".into(),
            ));
        }
        Ok(())
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn family(&self) -> &ScoreFamily {
        &self.family
    }

    fn score_index(&self, r: f64) -> Result<usize> {
        ensure_finite("score", r)?;
        self.support
            .iter()
            .position(|&s| (s - r).abs() <= SCORE_MATCH_TOL)
            .ok_or_else(|| {
                Error::Input(format!(
                    "score {r} is not in the support {:?}",
                    self.support
                ))
            })
    }

    /// `ln p̃(θ, ·)` over the whole support.
    pub fn log_distribution(&self, theta: f64) -> Result<Vec<f64>> {
        ensure_finite("theta", theta)?;
        match &self.family {
            ScoreFamily::ExponentialTilt => {
                let max = self
                    .support
                    .iter()
                    .map(|r| theta * r)
                    .fold(f64::NEG_INFINITY, f64::max);
                let lse = max
                    + self
                        .support
                        .iter()
                        .map(|r| (theta * r - max).exp())
                        .sum::<f64>()
                        .ln();
                Ok(self.support.iter().map(|r| theta * r - lse).collect())
            }
            ScoreFamily::Lookup { thetas, probs } => {
                let (lo, hi) = (thetas[0], *thetas.last().unwrap());
                if theta < lo || theta > hi {
                    return Err(Error::Domain(format!(
                        "theta {theta} outside lookup range [{lo}, {hi}]"
                    )));
                }
                let k = thetas.partition_point(|&t| t <= theta);
                if k == 0 || thetas[k - 1] == theta || k == thetas.len() {
                    let row = &probs[k.saturating_sub(1)];
                    return Ok(row.iter().map(|p| p.ln()).collect());
                }
                let t = (theta - thetas[k - 1]) / (thetas[k] - thetas[k - 1]);
                Ok(probs[k - 1]
                    .iter()
                    .zip(&probs[k])
                    .map(|(a, b)| ((1.0 - t) * a + t * b).ln())
                    .collect())
            }
        }
    }

    /// `p̃(θ, r)`.
    pub fn prob(&self, theta: f64, r: f64) -> Result<f64> {
        let i = self.score_index(r)?;
        Ok(self.log_distribution(theta)?[i].exp())
    }

    /// `p̃(θ, 1)`: chance that an answer is useful.
    pub fn useful_rate(&self, theta: f64) -> Result<f64> {
        Ok(self.log_distribution(theta)?.last().unwrap().exp())
    }
}

/// Bayes update on observed scores; the result depends only on their multiset.
pub fn score_posterior(
    prior: &AbilityPrior,
    model: &ReasonablenessModel,
    scores: &[f64],
) -> Result<AbilityPrior> {
    let idx = scores
        .iter()
        .map(|&r| model.score_index(r))
        .collect::<Result<Vec<_>>>()?;
    if idx.is_empty() {
        return Ok(prior.clone());
    }
    prior.reweight(|theta| {
        let ld = model.log_distribution(theta)?;
        Ok(idx.iter().map(|&i| ld[i]).sum())
    })
}

/// `π(z | r)`: posterior expected `p̃(θ, 1)` after seeing one score.
pub fn predicted_usefulness(
    prior: &AbilityPrior,
    model: &ReasonablenessModel,
    score: f64,
) -> Result<f64> {
    predicted_usefulness_after(prior, model, &[score])
}

/// Posterior expected `p̃(θ, 1)` after a history of scores.
pub fn predicted_usefulness_after(
    prior: &AbilityPrior,
    model: &ReasonablenessModel,
    scores: &[f64],
) -> Result<f64> {
    score_posterior(prior, model, scores)?.expectation(|theta| model.useful_rate(theta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreMlrpViolation {
    pub theta: f64,
    pub theta_hi: f64,
    pub r: f64,
    pub r_hi: f64,
    /// `ln p̃(θ', r') − ln p̃(θ', r)`.
    pub log_ratio_hi: f64,
    /// `ln p̃(θ, r') − ln p̃(θ, r)`.
    pub log_ratio_lo: f64,
}

impl fmt::Display for ScoreMlrpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "score likelihood ratio not increasing in ability between theta={} and {} at scores {} < {}: {} <= {}",
            self.theta, self.theta_hi, self.r, self.r_hi, self.log_ratio_hi, self.log_ratio_lo
        )
    }
}

/// Strict MLRP of `p̃` on `theta_grid × support`. Checking adjacent pairs is
/// enough: the log cross-difference of any pair is a sum of adjacent ones.
pub fn verify_score_mlrp(
    model: &ReasonablenessModel,
    theta_grid: &[f64],
) -> Result<CheckReport<ScoreMlrpViolation>> {
    ensure_strictly_increasing("theta grid", theta_grid, 1)?;
    let rows = theta_grid
        .iter()
        .map(|&t| model.log_distribution(t))
        .collect::<Result<Vec<_>>>()?;
    let s = &model.support;
    let mut checked = 0;
    for k in 1..rows.len() {
        for i in 1..s.len() {
            checked += 1;
            let hi = rows[k][i] - rows[k][i - 1];
            let lo = rows[k - 1][i] - rows[k - 1][i - 1];
            if !(hi > lo) {
                return Ok(CheckReport::fail(
                    checked,
                    ScoreMlrpViolation {
                        theta: theta_grid[k - 1],
                        theta_hi: theta_grid[k],
                        r: s[i - 1],
                        r_hi: s[i],
                        log_ratio_hi: hi,
                        log_ratio_lo: lo,
                    },
                ));
            }
        }
    }
    Ok(CheckReport::pass(checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief_engine::fosd_compare;
    use approx::assert_abs_diff_eq;

    fn table() -> SimilarityTable {
        let ids = ["w1", "w2", "w3"].map(String::from).to_vec();
        SimilarityTable::new(ids, vec![1.0, 0.4, 0.2, 0.4, 1.0, 0.9, 0.2, 0.9, 1.0]).unwrap()
    }

    fn three() -> (AbilityPrior, ReasonablenessModel) {
        (
            AbilityPrior::uniform(vec![-1.0, 0.0, 1.0]).unwrap(),
            ReasonablenessModel::exponential_tilt(vec![0.0, 0.5, 1.0]).unwrap(),
        )
    }

    #[test]
    fn scores() {
        let t = table();
        assert_eq!(reasonableness_score(&["w2"], "w2", &t).unwrap(), 1.0);
        assert_eq!(reasonableness_score(&["w1"], "w2", &t).unwrap(), 0.4);
        assert_eq!(reasonableness_score(&["w1", "w3"], "w2", &t).unwrap(), 0.9);
        assert!(reasonableness_score::<&str>(&[], "w2", &t).is_err());
        assert!(reasonableness_score(&["w9"], "w2", &t).is_err());
    }

    #[test]
    fn table_validation() {
        let ids = || ["a", "b"].map(String::from).to_vec();
        assert!(SimilarityTable::new(ids(), vec![1.0, 0.3, 0.4, 1.0]).is_err());
        assert!(SimilarityTable::new(ids(), vec![1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(SimilarityTable::new(ids(), vec![0.9, 0.3, 0.3, 1.0]).is_err());
        let csv = "id,a,b\na,1,0.3\nb,0.3,1\n";
        let t = SimilarityTable::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.similarity("b", "a").unwrap(), 0.3);
        assert!(SimilarityTable::from_csv("id,a,b\nb,1,0.3\na,0.3,1\n".as_bytes()).is_err());
    }

    #[test]
    fn three_by_three_posterior() {
        let (prior, m) = three();
        // exp(θr)/Z(θ), Z(θ) = 1 + e^{θ/2} + e^θ, 40-digit reference
        let post = score_posterior(&prior, &m, &[1.0]).unwrap();
        let expect = [
            0.181_577_744_442_462_82,
            0.324_842_772_387_010_1,
            0.493_579_483_170_527_1,
        ];
        for (w, e) in post.weights().iter().zip(expect) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-12);
        }
        let low = score_posterior(&prior, &m, &[0.0]).unwrap();
        for (w, e) in low.weights().iter().zip(expect.iter().rev()) {
            assert_abs_diff_eq!(*w, *e, epsilon = 1e-12);
        }
        assert!(fosd_compare(&post, &low).unwrap().passed());
        assert_abs_diff_eq!(
            predicted_usefulness(&prior, &m, 1.0).unwrap(),
            0.392_101_495_181_730_7,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            predicted_usefulness(&prior, &m, 0.0).unwrap(),
            0.292_212_058_153_447_7,
            epsilon = 1e-12
        );
        assert!(score_posterior(&prior, &m, &[0.3]).is_err());
    }

    #[test]
    fn histories_and_degenerate_priors() {
        let (prior, m) = three();
        let bad = predicted_usefulness_after(&prior, &m, &[0.0, 0.0]).unwrap();
        let good = predicted_usefulness_after(&prior, &m, &[1.0, 1.0]).unwrap();
        assert!(good > bad);
        let a = score_posterior(&prior, &m, &[0.0, 0.5, 1.0]).unwrap();
        let b = score_posterior(&prior, &m, &[1.0, 0.0, 0.5]).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-15);
        }
        let point = AbilityPrior::point_mass(vec![-1.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(score_posterior(&point, &m, &[0.0]).unwrap(), point);
        let rate = m.useful_rate(1.0).unwrap();
        for r in [0.0, 0.5, 1.0] {
            assert_abs_diff_eq!(
                predicted_usefulness(&point, &m, r).unwrap(),
                rate,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn mlrp_checks() {
        let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
        assert!(
            verify_score_mlrp(&ReasonablenessModel::default_tilt(), &grid)
                .unwrap()
                .passed()
        );
        let single = ReasonablenessModel::exponential_tilt(vec![1.0]).unwrap();
        let rep = verify_score_mlrp(&single, &grid).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.checked, 0);

        let support = vec![0.0, 0.5, 1.0];
        let good = ReasonablenessModel::lookup(
            support.clone(),
            vec![0.0, 1.0],
            vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]],
        )
        .unwrap();
        assert!(verify_score_mlrp(&good, &[0.0, 0.5, 1.0]).unwrap().passed());
        let planted = ReasonablenessModel::lookup(
            support,
            vec![0.0, 1.0],
            vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.1, 0.7]],
        )
        .unwrap();
        let rep = verify_score_mlrp(&planted, &[0.0, 1.0]).unwrap();
        assert!(!rep.passed());
        let v = rep.violation.unwrap();
        assert_eq!((v.r, v.r_hi), (0.0, 0.5));
        assert!(matches!(good.prob(2.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn support_validation() {
        assert!(ReasonablenessModel::exponential_tilt(vec![0.0, 0.5]).is_err());
        assert!(ReasonablenessModel::exponential_tilt(vec![0.5, 0.2, 1.0]).is_err());
        assert!(ReasonablenessModel::exponential_tilt(vec![-0.5, 1.0]).is_err());
    }
}
