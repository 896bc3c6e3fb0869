use serde::{Deserialize, Serialize};

use super::metrics::ScoredSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(a: u64, b: u64) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// True negative rate.
    pub fn tnr(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    /// Negative predictive value.
    pub fn npv(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fn_)
    }

    /// False negative rate.
    pub fn fnr(&self) -> Option<f64> {
        ratio(self.fn_, self.tp + self.fn_)
    }
}

/// Predicts positive iff `score ≥ threshold`.
pub fn confusion_at_threshold(s: &ScoredSet, threshold: f64) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for (&x, &y) in s.scores.iter().zip(&s.labels) {
        match (x >= threshold, y) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, true) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub target_precision: f64,
    pub threshold: f64,
    pub matrix: ConfusionMatrix,
    /// False when no threshold reaches the target; the point is then the
    /// one whose precision is closest below it.
    pub reachable: bool,
}

/// Chooses among observed scores (and +∞) the threshold with the highest
/// recall whose precision meets `target`; ties keep the higher threshold.
pub fn threshold_for_precision(s: &ScoredSet, target: f64) -> OperatingPoint {
    let positives = s.positives() as u64;
    let negatives = s.negatives() as u64;
    let mut candidates = vec![(f64::INFINITY, ConfusionMatrix { tn: negatives, fn_: positives, ..Default::default() })];
    let (mut tp, mut fp) = (0, 0);
    for (score, gp, gn) in s.tie_groups_desc() {
        tp += gp;
        fp += gn;
        candidates.push((
            score,
            ConfusionMatrix {
                tp,
                fp,
                tn: negatives - fp,
                fn_: positives - tp,
            },
        ));
    }
    let mut best: Option<(f64, ConfusionMatrix)> = None;
    for &(thr, m) in &candidates {
        if m.precision().is_some_and(|p| p >= target)
            && best.is_none_or(|(_, b)| m.tp > b.tp)
        {
            best = Some((thr, m));
        }
    }
    if let Some((threshold, matrix)) = best {
        return OperatingPoint { target_precision: target, threshold, matrix, reachable: true };
    }
    let mut closest: Option<(f64, ConfusionMatrix)> = None;
    for &(thr, m) in &candidates {
        let Some(p) = m.precision() else { continue };
        let better = match closest {
            None => true,
            Some((_, b)) => {
                let bp = b.precision().unwrap_or(0.0);
                p > bp || (p == bp && m.tp > b.tp)
            }
        };
        if better {
            closest = Some((thr, m));
        }
    }
    let (threshold, matrix) = closest.unwrap_or(candidates[0]);
    OperatingPoint { target_precision: target, threshold, matrix, reachable: false }
}
