//! Distortion metrics for a linear belief rule against realised performance.
//!
//! Difficulty is on `[0, 1]`. A belief rule predicts `p̂_i = â + b̂ d_i`,
//! clamped to `[0, 1]` by default.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Scale of the difficulty column in ingested files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DifficultyScale {
    #[default]
    Unit,
    /// 0–100, divided by 100 on ingestion.
    Percent,
}

impl DifficultyScale {
    fn normalize(self, d: f64) -> f64 {
        match self {
            DifficultyScale::Unit => d,
            DifficultyScale::Percent => d / 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeliefRule {
    pub intercept: f64,
    pub slope: f64,
    pub clamp: bool,
    /// Residual sum of squares of the fit, when estimated from data.
    pub residual_ss: Option<f64>,
}

impl BeliefRule {
    pub fn new(intercept: f64, slope: f64) -> Result<Self> {
        ensure_finite("intercept", intercept)?;
        ensure_finite("slope", slope)?;
        Ok(Self {
            intercept,
            slope,
            clamp: true,
            residual_ss: None,
        })
    }

    /// Flat rule `p̂ ≡ level`.
    pub fn flat(level: f64) -> Result<Self> {
        Self::new(level, 0.0)
    }

    pub fn unclamped(mut self) -> Self {
        self.clamp = false;
        self
    }

    pub fn raw(&self, d: f64) -> f64 {
        self.intercept + self.slope * d
    }

    pub fn predict(&self, d: f64) -> f64 {
        let p = self.raw(d);
        if self.clamp {
            p.clamp(0.0, 1.0)
        } else {
            p
        }
    }

    /// Whether the clamp changes the prediction at `d`.
    pub fn is_clamped_at(&self, d: f64) -> bool {
        self.clamp && !(0.0..=1.0).contains(&self.raw(d))
    }
}

/// `(intercept, slope, residual SS)` of the least-squares line.
fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if x.len() < 2 || !(sxx > 0.0) {
        return Err(Error::Input(
            "regression needs at least two distinct difficulties".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok((intercept, slope, rss))
}

fn check_difficulty(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Input(format!("difficulty {d} outside [0, 1]")));
    }
    Ok(())
}

/// Least-squares line through `(d_i, stated belief)`.
pub fn fit_belief_rule(beliefs: &[(f64, f64)]) -> Result<BeliefRule> {
    for &(d, b) in beliefs {
        check_difficulty(d)?;
        ensure_finite("belief", b)?;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = beliefs.iter().copied().unzip();
    let (intercept, slope, rss) = ols(&x, &y)?;
    Ok(BeliefRule {
        residual_ss: Some(rss),
        ..BeliefRule::new(intercept, slope)?
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Item {
    pub difficulty: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemOutcome {
    items: Vec<Item>,
}

impl ItemOutcome {
    pub fn new(items: Vec<Item>) -> Result<Self> {
        for it in &items {
            check_difficulty(it.difficulty)?;
        }
        Ok(Self { items })
    }

    pub fn from_pairs(pairs: &[(f64, bool)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(difficulty, correct)| Item {
                    difficulty,
                    correct,
                })
                .collect(),
        )
    }

    /// CSV with header `item_id,difficulty,correct`; `correct` is 0/1.
    pub fn from_csv<R: Read>(reader: R, scale: DifficultyScale) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            #[allow(dead_code)]
            item_id: String,
            difficulty: f64,
            correct: u8,
        }
        let mut items = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: Row = row?;
            if row.correct > 1 {
                return Err(Error::Input(format!(
                    "correct must be 0 or 1, got {}",
                    row.correct
                )));
            }
            items.push(Item {
                difficulty: scale.normalize(row.difficulty),
                correct: row.correct == 1,
            });
        }
        Self::new(items)
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn accuracy(&self) -> f64 {
        self.items.iter().filter(|i| i.correct).count() as f64 / self.items.len() as f64
    }
}

/// Reads `item_id,difficulty,belief` rows as `(d_i, belief)` pairs.
pub fn read_beliefs_csv<R: Read>(reader: R, scale: DifficultyScale) -> Result<Vec<(f64, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        #[allow(dead_code)]
        item_id: String,
        difficulty: f64,
        belief: f64,
    }
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|row| {
            let row: Row = row?;
            Ok((scale.normalize(row.difficulty), row.belief))
        })
        .collect()
}

/// Mean realised accuracy minus mean predicted accuracy.
pub fn level_wedge(rule: &BeliefRule, outcomes: &ItemOutcome) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Input("no items".into()));
    }
    let n = outcomes.len() as f64;
    let predicted = outcomes
        .items
        .iter()
        .map(|i| rule.predict(i.difficulty))
        .sum::<f64>()
        / n;
    Ok(outcomes.accuracy() - predicted)
}

/// `b̂ − β̂`, with `β̂` the least-squares slope of correctness on difficulty.
pub fn slope_gap(rule: &BeliefRule, outcomes: &ItemOutcome) -> Result<f64> {
    let x: Vec<f64> = outcomes.items.iter().map(|i| i.difficulty).collect();
    let y: Vec<f64> = outcomes
        .items
        .iter()
        .map(|i| i.correct as u8 as f64)
        .collect();
    let (_, beta, _) = ols(&x, &y)?;
    Ok(rule.slope - beta)
}

/// Mean predicted accuracy over the items answered incorrectly.
pub fn avg_belief_at_errors(rule: &BeliefRule, outcomes: &ItemOutcome) -> Result<f64> {
    let errs: Vec<f64> = outcomes
        .items
        .iter()
        .filter(|i| !i.correct)
        .map(|i| rule.predict(i.difficulty))
        .collect();
    if errs.is_empty() {
        return Err(Error::Undefined("no incorrect items".into()));
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionReport {
    pub items: usize,
    pub accuracy: f64,
    pub level_wedge: f64,
    pub slope_gap: Option<f64>,
    pub avg_belief_at_errors: Option<f64>,
    pub clamped_items: usize,
}

/// All three metrics; metrics that are undefined for the data are `None`.
pub fn distortion_report(rule: &BeliefRule, outcomes: &ItemOutcome) -> Result<DistortionReport> {
    Ok(DistortionReport {
        items: outcomes.len(),
        accuracy: outcomes.accuracy(),
        level_wedge: level_wedge(rule, outcomes)?,
        slope_gap: slope_gap(rule, outcomes).ok(),
        avg_belief_at_errors: avg_belief_at_errors(rule, outcomes).ok(),
        clamped_items: outcomes
            .items
            .iter()
            .filter(|i| rule.is_clamped_at(i.difficulty))
            .count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fit_examples() {
        let r = fit_belief_rule(&[(0.0, 0.9), (1.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(r.intercept, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(r.slope, -0.4, epsilon = 1e-12);
        let flat = fit_belief_rule(&[(0.1, 0.6), (0.5, 0.6), (0.9, 0.6)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        let pts: Vec<(f64, f64)> = (0..=20)
            .map(|k| (k as f64 / 20.0, 0.83 - 0.313 * k as f64 / 20.0))
            .collect();
        let r = fit_belief_rule(&pts).unwrap();
        assert_abs_diff_eq!(r.intercept, 0.83, epsilon = 1e-12);
        assert_abs_diff_eq!(r.slope, -0.313, epsilon = 1e-12);
        assert!(r.residual_ss.unwrap() < 1e-24);
        assert!(fit_belief_rule(&[(0.3, 0.6), (0.3, 0.7)]).is_err());
        assert!(fit_belief_rule(&[(1.3, 0.6), (0.3, 0.7)]).is_err());
    }

    #[test]
    fn level_wedge_examples() {
        let items = ItemOutcome::from_pairs(
            &(0..10)
                .map(|k| (k as f64 / 10.0, k != 0))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            level_wedge(&BeliefRule::flat(0.8).unwrap(), &items).unwrap(),
            0.1,
            epsilon = 1e-15
        );

        // calibrated per bin: d=0 always right, d=1 right half the time
        let items = ItemOutcome::from_pairs(&[(0.0, true), (0.0, true), (1.0, true), (1.0, false)])
            .unwrap();
        let rule = BeliefRule::new(1.0, -0.5).unwrap();
        assert_abs_diff_eq!(level_wedge(&rule, &items).unwrap(), 0.0, epsilon = 1e-15);

        let n = 500;
        let items = ItemOutcome::from_pairs(
            &(0..n)
                .map(|k| ((k % 101) as f64 / 100.0, k >= 11))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_abs_diff_eq!(items.accuracy(), 0.978, epsilon = 1e-15);
        assert_abs_diff_eq!(
            level_wedge(&BeliefRule::flat(0.815).unwrap(), &items).unwrap(),
            0.163,
            epsilon = 1e-12
        );
    }

    #[test]
    fn slope_gap_examples() {
        // β̂ = 0: equal accuracy at both difficulties
        let flat = ItemOutcome::from_pairs(&[(0.0, true), (0.0, false), (1.0, true), (1.0, false)])
            .unwrap();
        let rule = BeliefRule::new(0.8, -0.31).unwrap();
        assert_abs_diff_eq!(slope_gap(&rule, &flat).unwrap(), -0.31, epsilon = 1e-15);

        // β̂ = −0.5: always right at d=0, half at d=1
        let planted =
            ItemOutcome::from_pairs(&[(0.0, true), (0.0, true), (1.0, true), (1.0, false)])
                .unwrap();
        assert_abs_diff_eq!(
            slope_gap(&BeliefRule::new(0.9, -0.2).unwrap(), &planted).unwrap(),
            0.3,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            slope_gap(&BeliefRule::new(0.9, -0.5).unwrap(), &planted).unwrap(),
            0.0,
            epsilon = 1e-15
        );

        let single = ItemOutcome::from_pairs(&[(0.5, true), (0.5, false)]).unwrap();
        assert!(slope_gap(&rule, &single).is_err());
    }

    #[test]
    fn avg_belief_examples() {
        let rule = BeliefRule::new(0.9, -0.4).unwrap();
        let at_zero = ItemOutcome::from_pairs(&[(0.0, false), (0.0, false), (1.0, true)]).unwrap();
        assert_abs_diff_eq!(
            avg_belief_at_errors(&rule, &at_zero).unwrap(),
            0.9,
            epsilon = 1e-15
        );
        let spread = ItemOutcome::from_pairs(&[(0.0, false), (1.0, false), (0.5, true)]).unwrap();
        assert_abs_diff_eq!(
            avg_belief_at_errors(&rule, &spread).unwrap(),
            0.7,
            epsilon = 1e-15
        );
        let none = ItemOutcome::from_pairs(&[(0.0, true)]).unwrap();
        assert!(matches!(
            avg_belief_at_errors(&rule, &none),
            Err(Error::Undefined(_))
        ));

        // jagged: errors concentrated on easy items sit above the item-average belief
        let jagged =
            ItemOutcome::from_pairs(&[(0.0, false), (0.1, false), (0.9, true), (1.0, true)])
                .unwrap();
        let mean_belief = jagged
            .items()
            .iter()
            .map(|i| rule.predict(i.difficulty))
            .sum::<f64>()
            / 4.0;
        assert!(avg_belief_at_errors(&rule, &jagged).unwrap() > mean_belief);
    }

    #[test]
    fn clamping() {
        let rule = BeliefRule::new(1.2, -0.4).unwrap();
        assert_eq!(rule.predict(0.0), 1.0);
        assert!(rule.is_clamped_at(0.0));
        assert!(!rule.is_clamped_at(1.0));
        assert_abs_diff_eq!(rule.unclamped().predict(0.0), 1.2, epsilon = 1e-15);
    }

    #[test]
    fn csv_ingest() {
        let csv = "item_id,difficulty,correct\na,0,1\nb,50,0\nc,100,1\n";
        let items = ItemOutcome::from_csv(csv.as_bytes(), DifficultyScale::Percent).unwrap();
        assert_eq!(items.items()[1].difficulty, 0.5);
        assert!(ItemOutcome::from_csv(csv.as_bytes(), DifficultyScale::Unit).is_err());
        let b = read_beliefs_csv(
            "item_id,difficulty,belief\na,0.2,0.7\n".as_bytes(),
            DifficultyScale::Unit,
        )
        .unwrap();
        assert_eq!(b, vec![(0.2, 0.7)]);
        assert!(ItemOutcome::from_csv(
            "item_id,difficulty,correct\na,0,2\n".as_bytes(),
            DifficultyScale::Unit
        )
        .is_err());
    }
}
