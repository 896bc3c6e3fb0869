//! Ingestion, discretization, labelling, splitting and balancing of
//! longitudinal panels.

mod discretize;
mod kdigo;
mod panel;
mod raw;
mod split;

pub use discretize::{
    apply_bins, discretize, fit_bins, BinKind, BinRule, BinningPolicy, BinningSpec, Discretization,
    EGFR_STAGE_EDGES,
};
pub use kdigo::{apply_kdigo_labels, KdigoLabels, KdigoRule};
pub use panel::{DiscretePanel, DiscreteVariable};
pub use raw::{load_panel, read_panel, CsvFormat, RawPanel, SubjectRecord};
pub use split::{
    stratified_folds, stratified_indices, stratified_split, undersample_balance, Balanced, BalancedSubset, SplitResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{chi_squared, pooled_table, ObservationPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub alpha: f64,
    pub retained: Vec<String>,
    /// `(variable, p)` for every variable, in column order.
    pub p_values: Vec<(String, f64)>,
}

/// χ² test of each variable, pooled over all timesteps, against the label
/// at the same timestep. Keeps variables with `p < alpha`.
pub fn significance_filter(panel: &DiscretePanel, alpha: f64) -> Result<FilterResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let pairs: Vec<ObservationPair> = (0..panel.n_subjects())
        .flat_map(|s| (0..panel.horizon()).map(move |t| ObservationPair { subject: s, x_t: t, y_t: t }))
        .collect();
    let mut retained = Vec::new();
    let mut p_values = Vec::new();
    for (v, var) in panel.variables().iter().enumerate() {
        let table = pooled_table(panel, v, &pairs);
        let p = if table.n() == 0 { 1.0 } else { chi_squared(&table)?.p_value };
        if p < alpha {
            retained.push(var.name.clone());
        }
        p_values.push((var.name.clone(), p));
    }
    Ok(FilterResult {
        alpha,
        retained,
        p_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_predictor_is_retained() {
        let n = 200;
        let labels: Vec<Vec<bool>> = (0..n).map(|s| vec![s % 2 == 0, s % 3 == 0]).collect();
        let cells = (0..n)
            .map(|s| {
                vec![
                    labels[s].iter().map(|&l| Some(usize::from(l))).collect(),
                    vec![Some(s % 5 % 2), Some((s / 7) % 2)],
                ]
            })
            .collect();
        let panel = DiscretePanel::new(
            (0..n).map(|s| s.to_string()).collect(),
            vec![
                DiscreteVariable::with_cardinality("copy", 2),
                DiscreteVariable::with_cardinality("noise", 2),
            ],
            2,
            cells,
            labels,
        )
        .unwrap();
        let f = significance_filter(&panel, 0.01).unwrap();
        assert!(f.retained.contains(&"copy".to_string()));
        assert!(f.p_values[0].1 < 1e-30);
    }
}
