use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores paired with binary outcomes for one model, window and timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSet {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Schema("scores must be finite".into()));
        }
        Ok(ScoredSet { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    /// Rows drawn by index, with repetition.
    pub fn resample(&self, idx: &[usize]) -> ScoredSet {
        ScoredSet {
            scores: idx.iter().map(|&i| self.scores[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Groups of tied scores in descending score order: `(score, pos, neg)`.
    pub(crate) fn tie_groups_desc(&self) -> Vec<(f64, u64, u64)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        let mut groups: Vec<(f64, u64, u64)> = Vec::new();
        for i in order {
            let (s, l) = (self.scores[i], self.labels[i]);
            match groups.last_mut() {
                Some(g) if g.0 == s => {
                    if l {
                        g.1 += 1
                    } else {
                        g.2 += 1
                    }
                }
                _ => groups.push((s, u64::from(l), u64::from(!l))),
            }
        }
        groups
    }
}

/// Area under the ROC curve: `P(s₊ > s₋) + ½ P(s₊ = s₋)`.
pub fn roc_auc(s: &ScoredSet) -> Result<f64> {
    let (p, n) = (s.positives() as u128, s.negatives() as u128);
    if p == 0 || n == 0 {
        return Err(Error::UndefinedMetric("AUCROC needs both classes"));
    }
    // twice the concordant-pair count plus ties, in integers
    let mut twice = 0u128;
    let mut neg_below = n;
    for (_, gp, gn) in s.tie_groups_desc() {
        neg_below -= gn as u128;
        twice += 2 * gp as u128 * neg_below + gp as u128 * gn as u128;
    }
    Ok(twice as f64 / (2 * p * n) as f64)
}

/// Step-wise average precision, `Σ (Rᵢ − Rᵢ₋₁)·Pᵢ` over descending score
/// cuts; tied scores form one cut.
pub fn average_precision(s: &ScoredSet) -> Result<f64> {
    let p = s.positives() as f64;
    if p == 0.0 {
        return Err(Error::UndefinedMetric("AP needs at least one positive"));
    }
    let (mut tp, mut fp, mut ap) = (0u64, 0u64, 0.0);
    for (_, gp, gn) in s.tie_groups_desc() {
        tp += gp;
        fp += gn;
        if gp > 0 {
            ap += (gp as f64 / p) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// ROC vertices from threshold +∞ down to the lowest score.
pub fn roc_curve(s: &ScoredSet) -> Result<Vec<RocPoint>> {
    let (p, n) = (s.positives() as f64, s.negatives() as f64);
    if p == 0.0 || n == 0.0 {
        return Err(Error::UndefinedMetric("ROC curve needs both classes"));
    }
    let mut out = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (score, gp, gn) in s.tie_groups_desc() {
        tp += gp;
        fp += gn;
        out.push(RocPoint {
            threshold: score,
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
        });
    }
    Ok(out)
}

/// Precision-recall points, one per distinct score.
pub fn pr_curve(s: &ScoredSet) -> Result<Vec<PrPoint>> {
    let p = s.positives() as f64;
    if p == 0.0 {
        return Err(Error::UndefinedMetric("PR curve needs a positive"));
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    Ok(s.tie_groups_desc()
        .into_iter()
        .map(|(score, gp, gn)| {
            tp += gp;
            fp += gn;
            PrPoint {
                threshold: score,
                recall: tp as f64 / p,
                precision: tp as f64 / (tp + fp) as f64,
            }
        })
        .collect())
}
