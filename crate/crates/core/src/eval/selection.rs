use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapCi;
use super::operating::OperatingPoint;
use crate::ranking::RankMethod;

/// Metrics of one prediction timestep (evidence up to `timestep`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestepMetrics {
    pub timestep: usize,
    pub n: usize,
    pub positives: usize,
    pub auc: Option<BootstrapCi>,
    pub ap: Option<BootstrapCi>,
    /// Why a metric is missing, if one is.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// e.g. `IG-DBN`, `LR`.
    pub model: String,
    pub method: Option<RankMethod>,
    pub window: usize,
    pub timesteps: Vec<TimestepMetrics>,
    pub operating_point: Option<OperatingPoint>,
    pub selection_rank: Option<usize>,
}

impl EvalReport {
    fn last_defined(&self, f: impl Fn(&TimestepMetrics) -> Option<f64>) -> Option<f64> {
        self.timesteps.iter().rev().find_map(f)
    }

    pub fn final_ap(&self) -> Option<f64> {
        self.last_defined(|m| m.ap.map(|c| c.point))
    }

    pub fn final_auc(&self) -> Option<f64> {
        self.last_defined(|m| m.auc.map(|c| c.point))
    }

    pub fn mean_ap(&self) -> Option<f64> {
        let aps: Vec<f64> = self.timesteps.iter().filter_map(|m| m.ap.map(|c| c.point)).collect();
        (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriterion {
    #[default]
    FinalAp,
    MeanAp,
    FinalAuc,
}

impl SelectionCriterion {
    pub fn value(self, r: &EvalReport) -> Option<f64> {
        match self {
            SelectionCriterion::FinalAp => r.final_ap(),
            SelectionCriterion::MeanAp => r.mean_ap(),
            SelectionCriterion::FinalAuc => r.final_auc(),
        }
    }
}

/// Indices of `reports`, best first. Reports without a value go last; ties
/// follow the method order CV, CHI2, IG, then input order.
pub fn select_models(reports: &[EvalReport], criterion: SelectionCriterion) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..reports.len()).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (criterion.value(&reports[a]), criterion.value(&reports[b]));
        let by_value = match (va, vb) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        let rank = |m: Option<RankMethod>| m.map_or(RankMethod::ALL.len(), |m| m as usize);
        by_value.then(rank(reports[a].method).cmp(&rank(reports[b].method)))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(method: RankMethod, ap: f64) -> EvalReport {
        let ci = BootstrapCi { point: ap, lo: ap, hi: ap, replicates: 1, degenerate: 0 };
        EvalReport {
            model: format!("{method}-DBN"),
            method: Some(method),
            window: 24,
            timesteps: vec![TimestepMetrics { timestep: 5, n: 10, positives: 2, auc: None, ap: Some(ci), note: None }],
            operating_point: None,
            selection_rank: None,
        }
    }

    #[test]
    fn orders_by_ap() {
        let rs = vec![report(RankMethod::Cv, 0.338), report(RankMethod::Chi2, 0.342), report(RankMethod::Ig, 0.363)];
        assert_eq!(select_models(&rs, SelectionCriterion::FinalAp), vec![2, 1, 0]);
    }

    #[test]
    fn ties_follow_method_order() {
        let rs = vec![report(RankMethod::Ig, 0.3), report(RankMethod::Cv, 0.3), report(RankMethod::Chi2, 0.3)];
        assert_eq!(select_models(&rs, SelectionCriterion::FinalAp), vec![1, 2, 0]);
        assert_eq!(select_models(&rs[..1], SelectionCriterion::MeanAp), vec![0]);
    }
}
