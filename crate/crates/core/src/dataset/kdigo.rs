//! Event labelling from serum creatinine (SCr, mg/dL) and eGFR series using
//! the KDIGO AKI criteria. Timesteps are 24 h apart and the admission value
//! (`t = 0`) is the SCr baseline.

use serde::{Deserialize, Serialize};

/// Comparison slack so that decimal boundary values (exactly 1.5× or
/// exactly +0.3 mg/dL) land on the intended side despite binary rounding.
const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdigoRule {
    /// SCr must exceed this multiple of baseline (strict).
    pub relative_rise: f64,
    /// Relative criterion only applies while eGFR is below this.
    pub egfr_threshold: f64,
    /// Number of timesteps after admission in which the relative rise counts.
    pub relative_window: usize,
    /// Absolute SCr rise (inclusive) ...
    pub absolute_rise: f64,
    /// ... against any measurement this many timesteps back or fewer.
    pub absolute_window: usize,
}

impl Default for KdigoRule {
    fn default() -> Self {
        KdigoRule {
            relative_rise: 1.5,
            egfr_threshold: 60.0,
            relative_window: 7,
            absolute_rise: 0.3,
            absolute_window: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdigoLabels {
    /// `None` for subjects excluded for lack of an admission SCr.
    pub labels: Vec<Option<Vec<bool>>>,
    pub excluded: usize,
}

impl KdigoRule {
    /// Labels one subject; `None` when the admission SCr is missing.
    pub fn label_series(&self, scr: &[Option<f64>], egfr: &[Option<f64>]) -> Option<Vec<bool>> {
        let baseline = (*scr.first()?)?;
        let labels = (0..scr.len())
            .map(|t| {
                let Some(now) = scr[t] else { return false };
                let relative = t < self.relative_window
                    && egfr.get(t).copied().flatten().is_some_and(|e| e < self.egfr_threshold)
                    && now > self.relative_rise * baseline + BOUNDARY_EPS;
                let absolute = (1..=self.absolute_window.min(t)).any(|k| {
                    scr[t - k].is_some_and(|before| now - before >= self.absolute_rise - BOUNDARY_EPS)
                });
                relative || absolute
            })
            .collect();
        Some(labels)
    }
}

pub fn apply_kdigo_labels(
    scr: &[Vec<Option<f64>>],
    egfr: &[Vec<Option<f64>>],
    rule: &KdigoRule,
) -> KdigoLabels {
    let labels: Vec<_> = scr
        .iter()
        .zip(egfr)
        .map(|(s, e)| rule.label_series(s, e))
        .collect();
    let excluded = labels.iter().filter(|l| l.is_none()).count();
    KdigoLabels { labels, excluded }
}
