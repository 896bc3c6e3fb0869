//! Filter statistics (Cramér's V, χ², information gain) and the variable
//! orderings built from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Balanced, DiscretePanel};
use crate::error::{Error, Result};
use crate::stats::{chi2_ln_sf, entropy_bits};

/// `rows × cols` grid of counts, row-major. Rows index the candidate
/// variable's categories, columns the target's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ContingencyTable {
            rows,
            cols,
            counts: vec![0; rows * cols],
            row_labels: (0..rows).map(|i| i.to_string()).collect(),
            col_labels: (0..cols).map(|j| j.to_string()).collect(),
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged table");
        let mut t = ContingencyTable::zeros(rows.len(), cols);
        t.counts = rows.iter().flatten().copied().collect();
        t
    }

    /// Tabulates aligned category sequences, dropping pairs with a missing `x`.
    pub fn from_pairs(x: &[Option<usize>], y: &[usize], rows: usize, cols: usize) -> Self {
        let mut t = ContingencyTable::zeros(rows, cols);
        for (xi, &yi) in x.iter().zip(y) {
            if let Some(xi) = *xi {
                t.add(xi, yi, 1);
            }
        }
        t
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, count: u64) {
        self.counts[row * self.cols + col] += count;
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.cols.max(1)).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Copy without all-zero rows and columns.
    pub fn drop_empty(&self) -> ContingencyTable {
        let rs = self.row_sums();
        let cs = self.col_sums();
        let keep_r: Vec<usize> = (0..self.rows).filter(|&i| rs[i] > 0).collect();
        let keep_c: Vec<usize> = (0..self.cols).filter(|&j| cs[j] > 0).collect();
        let mut t = ContingencyTable::zeros(keep_r.len(), keep_c.len());
        for (a, &i) in keep_r.iter().enumerate() {
            for (b, &j) in keep_c.iter().enumerate() {
                t.add(a, b, self.get(i, j));
            }
        }
        t.row_labels = keep_r.iter().map(|&i| self.row_labels[i].clone()).collect();
        t.col_labels = keep_c.iter().map(|&j| self.col_labels[j].clone()).collect();
        t
    }

    /// True when fewer than two non-empty rows or columns remain.
    pub fn is_degenerate(&self) -> bool {
        let t = self.drop_empty();
        t.rows < 2 || t.cols < 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquared {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// `ln p`, finite even when `p` underflows to zero.
    pub ln_p_value: f64,
}

/// Pearson's χ² test of independence. Empty rows and columns are dropped
/// first; a table left with a single row or column has `df = 0`,
/// statistic 0 and p 1.
pub fn chi_squared(table: &ContingencyTable) -> Result<ChiSquared> {
    if table.n() == 0 {
        return Err(Error::EmptyInput);
    }
    let t = table.drop_empty();
    let (r, c) = t.shape();
    let df = (r - 1) * (c - 1);
    if df == 0 {
        return Ok(ChiSquared {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            ln_p_value: 0.0,
        });
    }
    let n = t.n() as f64;
    let rs = t.row_sums();
    let cs = t.col_sums();
    let mut statistic = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = rs[i] as f64 * cs[j] as f64 / n;
            let d = t.get(i, j) as f64 - e;
            statistic += d * d / e;
        }
    }
    let ln_p_value = chi2_ln_sf(statistic, df);
    Ok(ChiSquared {
        statistic,
        df,
        p_value: ln_p_value.exp(),
        ln_p_value,
    })
}

/// Cramér's V, `sqrt(χ² / (n · min(r − 1, c − 1)))`.
pub fn cramers_v(table: &ContingencyTable) -> Result<f64> {
    if table.n() == 0 {
        return Err(Error::EmptyInput);
    }
    let t = table.drop_empty();
    let (r, c) = t.shape();
    if r.min(c) < 2 {
        return Err(Error::DegenerateVariable(table.row_labels.join("|")));
    }
    let chi = chi_squared(&t)?;
    let v = (chi.statistic / (t.n() as f64 * (r.min(c) - 1) as f64)).sqrt();
    Ok(v.min(1.0))
}

/// `H(Y) − H(Y | X)` in bits from a table with X on rows.
pub fn info_gain_table(table: &ContingencyTable) -> Result<f64> {
    let n = table.n();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let (rows, cols) = table.shape();
    let h_y = entropy_bits(&table.col_sums());
    let mut h_y_given_x = 0.0;
    for i in 0..rows {
        let row: Vec<u64> = (0..cols).map(|j| table.get(i, j)).collect();
        let ni: u64 = row.iter().sum();
        if ni > 0 {
            h_y_given_x += ni as f64 / n as f64 * entropy_bits(&row);
        }
    }
    Ok((h_y - h_y_given_x).clamp(0.0, h_y))
}

/// Information gain of `y` from `x`; pairs with a missing `x` are dropped.
pub fn info_gain(x: &[Option<usize>], y: &[usize]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Schema("info_gain: length mismatch".into()));
    }
    let rows = x.iter().flatten().max().map_or(0, |m| m + 1);
    let cols = y.iter().max().map_or(0, |m| m + 1);
    info_gain_table(&ContingencyTable::from_pairs(x, y, rows, cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    Cv,
    Chi2,
    Ig,
}

impl RankMethod {
    pub const ALL: [RankMethod; 3] = [RankMethod::Cv, RankMethod::Chi2, RankMethod::Ig];

    pub fn slug(self) -> &'static str {
        match self {
            RankMethod::Cv => "cv",
            RankMethod::Chi2 => "chi2",
            RankMethod::Ig => "ig",
        }
    }

    pub fn parse(s: &str) -> Option<RankMethod> {
        match s.to_ascii_lowercase().as_str() {
            "cv" => Some(RankMethod::Cv),
            "chi2" => Some(RankMethod::Chi2),
            "ig" => Some(RankMethod::Ig),
            _ => None,
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMethod::Cv => "CV",
            RankMethod::Chi2 => "CHI2",
            RankMethod::Ig => "IG",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    All,
    BestK(usize),
    Percentile(f64),
}

impl Selection {
    pub fn keep(self, count: usize) -> usize {
        match self {
            Selection::All => count,
            Selection::BestK(k) => k.min(count),
            // The small slack keeps e.g. 0.3 · 10 from rounding up to 4.
            Selection::Percentile(p) => ((p * count as f64 - 1e-9).ceil().max(0.0) as usize).min(count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScore {
    pub variable: String,
    pub method: RankMethod,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableRanking {
    pub method: RankMethod,
    pub scores: Vec<RankScore>,
    pub selection: Selection,
    pub selected: Vec<String>,
    /// Variables left out because their pooled table is degenerate.
    pub degenerate: Vec<String>,
}

impl VariableRanking {
    pub fn order(&self) -> Vec<String> {
        self.scores.iter().map(|s| s.variable.clone()).collect()
    }
}

/// One (predictor cell, target label) pairing used for pooling: the
/// variable at `x_t` against the label at `y_t` for a subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationPair {
    pub subject: usize,
    pub x_t: usize,
    pub y_t: usize,
}

/// Pairs every prediction timestep's balanced subjects with the label
/// `lookahead` steps ahead.
pub fn lagged_pairs(balanced: &Balanced) -> Vec<ObservationPair> {
    balanced
        .subsets
        .iter()
        .flat_map(|sub| {
            sub.subjects().map(move |s| ObservationPair {
                subject: s,
                x_t: sub.timestep,
                y_t: sub.timestep + balanced.lookahead,
            })
        })
        .collect()
}

/// Pooled variable × label table over the given pairs.
pub fn pooled_table(panel: &DiscretePanel, var: usize, pairs: &[ObservationPair]) -> ContingencyTable {
    let mut t = ContingencyTable::zeros(panel.cardinality(var), 2);
    t.row_labels = panel.variables()[var].labels.clone();
    t.col_labels = vec!["no-event".into(), "event".into()];
    for p in pairs {
        if let Some(x) = panel.cell(p.subject, var, p.x_t) {
            t.add(x, usize::from(panel.label(p.subject, p.y_t)), 1);
        }
    }
    t
}

struct Scored {
    var: usize,
    v: f64,
    chi: ChiSquared,
    ig: f64,
}

/// Orders the panel's variables from most to least informative about the
/// label, then applies `selection` as a prefix.
///
/// CV and IG sort by their statistic. χ² sorts by significance (smallest
/// p first, larger statistic breaking ties), so variables with more
/// categories pay for their extra degrees of freedom. All ties fall back to
/// column order.
pub fn rank_variables(
    panel: &DiscretePanel,
    pairs: &[ObservationPair],
    method: RankMethod,
    selection: Selection,
) -> Result<VariableRanking> {
    let mut scored = Vec::new();
    let mut degenerate = Vec::new();
    for var in 0..panel.variables().len() {
        let table = pooled_table(panel, var, pairs);
        if table.n() == 0 || table.is_degenerate() {
            degenerate.push(panel.variables()[var].name.clone());
            continue;
        }
        scored.push(Scored {
            var,
            v: cramers_v(&table)?,
            chi: chi_squared(&table)?,
            ig: info_gain_table(&table)?,
        });
    }
    if scored.is_empty() {
        return Err(Error::NoRankableVariables);
    }
    match method {
        RankMethod::Cv => scored.sort_by(|a, b| b.v.total_cmp(&a.v)),
        RankMethod::Ig => scored.sort_by(|a, b| b.ig.total_cmp(&a.ig)),
        RankMethod::Chi2 => scored.sort_by(|a, b| {
            a.chi
                .ln_p_value
                .total_cmp(&b.chi.ln_p_value)
                .then(b.chi.statistic.total_cmp(&a.chi.statistic))
        }),
    }
    let scores: Vec<RankScore> = scored
        .iter()
        .enumerate()
        .map(|(i, s)| RankScore {
            variable: panel.variables()[s.var].name.clone(),
            method,
            statistic: match method {
                RankMethod::Cv => s.v,
                RankMethod::Chi2 => s.chi.statistic,
                RankMethod::Ig => s.ig,
            },
            p_value: match method {
                RankMethod::Ig => None,
                _ => Some(s.chi.p_value),
            },
            rank: i + 1,
        })
        .collect();
    let keep = selection.keep(scores.len());
    let selected = scores[..keep].iter().map(|s| s.variable.clone()).collect();
    Ok(VariableRanking {
        method,
        scores,
        selection,
        selected,
        degenerate,
    })
}
