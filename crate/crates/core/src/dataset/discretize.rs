use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::panel::{DiscretePanel, DiscreteVariable};
use super::raw::RawPanel;
use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinKind {
    /// `edges` are `{min, Q1, median, Q3, max}` after merging duplicates;
    /// the inner edges are the cut points and values outside the range clamp.
    Iqr,
    /// `edges` are fixed cut points with open-ended outer bins.
    Staged,
    /// Values are already category codes `0..k`; `edges` sit halfway
    /// between consecutive codes.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub variable: String,
    pub kind: BinKind,
    pub edges: Vec<f64>,
    pub labels: Vec<String>,
}

/// eGFR cut points for CKD staging from Stage 3a down.
pub const EGFR_STAGE_EDGES: [f64; 4] = [15.0, 30.0, 45.0, 60.0];

impl BinningSpec {
    pub fn egfr_stages(variable: impl Into<String>) -> Self {
        BinningSpec {
            variable: variable.into(),
            kind: BinKind::Staged,
            edges: EGFR_STAGE_EDGES.to_vec(),
            labels: vec![
                "<15 (Stage 5)".into(),
                "15–29 (Stage 4)".into(),
                "30–44 (Stage 3b)".into(),
                "45–59 (Stage 3a)".into(),
                "≥60".into(),
            ],
        }
    }

    fn cuts(&self) -> &[f64] {
        match self.kind {
            BinKind::Iqr => &self.edges[1..self.edges.len() - 1],
            BinKind::Staged | BinKind::Categorical => &self.edges,
        }
    }

    pub fn bin_count(&self) -> usize {
        self.cuts().len() + 1
    }

    /// Bin index for `x`. A value on an interior edge goes to the higher bin;
    /// values beyond the outer edges clamp to the extreme bins.
    pub fn bin(&self, x: f64) -> usize {
        self.cuts().partition_point(|&c| c <= x)
    }

    fn validate(&self) -> Result<()> {
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema(format!(
                "bin edges for `{}` are not strictly increasing",
                self.variable
            )));
        }
        if self.kind == BinKind::Iqr && self.edges.len() < 2 {
            return Err(Error::Schema(format!("IQR spec for `{}` needs two edges", self.variable)));
        }
        if self.labels.len() != self.bin_count() {
            return Err(Error::Schema(format!(
                "`{}` has {} labels for {} bins",
                self.variable,
                self.labels.len(),
                self.bin_count()
            )));
        }
        Ok(())
    }
}

/// How each variable is binned. Variables without an override use `default`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinningPolicy {
    pub default: BinRule,
    #[serde(default)]
    pub overrides: BTreeMap<String, BinRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinRule {
    Iqr,
    Egfr,
    Categorical,
    Fixed(BinningSpec),
}

impl Default for BinningPolicy {
    fn default() -> Self {
        BinningPolicy {
            default: BinRule::Iqr,
            overrides: BTreeMap::new(),
        }
    }
}

impl BinningPolicy {
    /// IQR everywhere, staged bins for any column named `egfr` (any case).
    pub fn clinical(variables: &[String]) -> Self {
        let mut p = BinningPolicy::default();
        for v in variables {
            if v.eq_ignore_ascii_case("egfr") {
                p.overrides.insert(v.clone(), BinRule::Egfr);
            }
        }
        p
    }

    pub fn categorical() -> Self {
        BinningPolicy {
            default: BinRule::Categorical,
            overrides: BTreeMap::new(),
        }
    }

    fn rule(&self, var: &str) -> &BinRule {
        self.overrides.get(var).unwrap_or(&self.default)
    }
}

#[derive(Debug, Clone)]
pub struct Discretization {
    pub panel: DiscretePanel,
    pub specs: Vec<BinningSpec>,
    /// Variables dropped because they could not be binned into ≥ 2 bins.
    pub degenerate: Vec<String>,
}

fn fmt_edge(x: f64) -> String {
    let s = format!("{x:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn iqr_spec(variable: &str, values: &mut [f64]) -> Result<BinningSpec> {
    values.sort_by(f64::total_cmp);
    let distinct = values.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!values.is_empty());
    if distinct < 2 {
        return Err(Error::DegenerateVariable(variable.into()));
    }
    let mut edges: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&q| quantile_sorted(values, q))
        .collect();
    edges.dedup();
    if edges.len() < 3 {
        return Err(Error::DegenerateVariable(variable.into()));
    }
    let labels = edges
        .windows(2)
        .map(|w| format!("{}–{}", fmt_edge(w[0]), fmt_edge(w[1])))
        .collect();
    Ok(BinningSpec {
        variable: variable.into(),
        kind: BinKind::Iqr,
        edges,
        labels,
    })
}

fn categorical_spec(variable: &str, values: &[f64]) -> Result<BinningSpec> {
    let mut max = 0usize;
    let mut seen = std::collections::BTreeSet::new();
    for &x in values {
        if x < 0.0 || x.fract() != 0.0 || x > u16::MAX as f64 {
            return Err(Error::Schema(format!(
                "`{variable}` is categorical but holds non-code value {x}"
            )));
        }
        max = max.max(x as usize);
        seen.insert(x as usize);
    }
    if seen.len() < 2 {
        return Err(Error::DegenerateVariable(variable.into()));
    }
    Ok(BinningSpec {
        variable: variable.into(),
        kind: BinKind::Categorical,
        edges: (0..max).map(|c| c as f64 + 0.5).collect(),
        labels: (0..=max).map(|c| c.to_string()).collect(),
    })
}

/// Resolves one spec per variable from the values of the given subjects,
/// pooled across timesteps. Returns the specs in variable order and the
/// names of degenerate variables.
pub fn fit_bins(
    raw: &RawPanel,
    subjects: &[usize],
    policy: &BinningPolicy,
) -> Result<(Vec<BinningSpec>, Vec<String>)> {
    let mut specs = Vec::new();
    let mut degenerate = Vec::new();
    for (v, name) in raw.variables.iter().enumerate() {
        let mut values: Vec<f64> = subjects
            .iter()
            .flat_map(|&s| (0..raw.horizon).filter_map(move |t| raw.value(s, v, t)))
            .collect();
        let spec = match policy.rule(name) {
            BinRule::Iqr => iqr_spec(name, &mut values),
            BinRule::Egfr => Ok(BinningSpec::egfr_stages(name.clone())),
            BinRule::Categorical => categorical_spec(name, &values),
            BinRule::Fixed(spec) => {
                spec.validate()?;
                Ok(BinningSpec {
                    variable: name.clone(),
                    ..spec.clone()
                })
            }
        };
        match spec {
            Ok(spec) => specs.push(spec),
            Err(Error::DegenerateVariable(name)) => degenerate.push(name),
            Err(e) => return Err(e),
        }
    }
    Ok((specs, degenerate))
}

/// Applies resolved specs. Variables without a spec are left out; labels
/// and statics carry over from the raw panel.
pub fn apply_bins(raw: &RawPanel, specs: &[BinningSpec]) -> Result<DiscretePanel> {
    let idx: Vec<usize> = specs
        .iter()
        .map(|s| {
            s.validate()?;
            raw.variable_index(&s.variable)
                .ok_or_else(|| Error::Schema(format!("no column `{}`", s.variable)))
        })
        .collect::<Result<_>>()?;
    let h = raw.horizon;
    let n = raw.subjects.len();
    let mut cells = Vec::with_capacity(n * specs.len() * h);
    for s in 0..n {
        for (spec, &v) in specs.iter().zip(&idx) {
            for t in 0..h {
                cells.push(raw.value(s, v, t).map(|x| spec.bin(x) as u16));
            }
        }
    }
    let labels = match &raw.labels {
        Some(l) => l.iter().flatten().copied().collect(),
        None => vec![false; n * h],
    };
    Ok(DiscretePanel::from_flat(
        raw.subjects.iter().map(|s| s.subject_id.clone()).collect(),
        specs
            .iter()
            .map(|s| DiscreteVariable::new(s.variable.clone(), s.labels.clone()))
            .collect(),
        h,
        cells,
        labels,
        raw.subjects.iter().map(|s| s.statics.clone()).collect(),
    ))
}

/// Fits bins on every subject and applies them.
pub fn discretize(raw: &RawPanel, policy: &BinningPolicy) -> Result<Discretization> {
    let all: Vec<usize> = (0..raw.subjects.len()).collect();
    let (specs, degenerate) = fit_bins(raw, &all, policy)?;
    let panel = apply_bins(raw, &specs)?;
    Ok(Discretization {
        panel,
        specs,
        degenerate,
    })
}
