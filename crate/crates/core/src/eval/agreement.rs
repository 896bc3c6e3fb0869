use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{chi_squared, cramers_v, ContingencyTable};

/// Case identifiers by outcome class at one window's operating point.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowCases {
    pub window: usize,
    pub tp: BTreeSet<String>,
    #[serde(rename = "fn")]
    pub fn_: BTreeSet<String>,
    pub fp: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OutcomeClass {
    TP,
    FN,
    FP,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 3] = [OutcomeClass::TP, OutcomeClass::FN, OutcomeClass::FP];

    pub fn of(self, w: &WindowCases) -> &BTreeSet<String> {
        match self {
            OutcomeClass::TP => &w.tp,
            OutcomeClass::FN => &w.fn_,
            OutcomeClass::FP => &w.fp,
        }
    }
}

/// Share of one window's class set falling in one Venn region. `region`
/// lists the windows the case also belongs to (empty = this window only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionShare {
    pub class: OutcomeClass,
    pub window: usize,
    pub region: Vec<usize>,
    pub count: usize,
    /// `None` when the window's class set is empty.
    pub percent: Option<f64>,
}

/// Early true positives: misses at `from` caught at the shorter window `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyTruePositive {
    pub from: usize,
    pub to: usize,
    pub count: usize,
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseAgreement {
    pub shares: Vec<RegionShare>,
    pub etp: Vec<EarlyTruePositive>,
}

fn percent(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| 100.0 * a as f64 / b as f64)
}

/// For every window and outcome class, splits the window's cases by which
/// other windows also hold them (all, each single other window, none) and
/// reports the split as percentages. ETP(W → W′) = |FN_W ∩ TP_W′| / |FN_W|
/// for every shorter window W′.
pub fn case_agreement(windows: &[WindowCases]) -> CaseAgreement {
    let mut shares = Vec::new();
    for class in OutcomeClass::ALL {
        for (i, w) in windows.iter().enumerate() {
            let own = class.of(w);
            let others: Vec<&WindowCases> = windows.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, o)| o).collect();
            let mut counts: std::collections::BTreeMap<Vec<usize>, usize> = Default::default();
            for id in own {
                let region: Vec<usize> = others.iter().filter(|o| class.of(o).contains(id)).map(|o| o.window).collect();
                *counts.entry(region).or_default() += 1;
            }
            // every region is listed, the full intersection first and "none" last
            let mut regions: Vec<Vec<usize>> = (0..1usize << others.len())
                .map(|mask| {
                    (0..others.len())
                        .filter(|k| mask & (1 << k) != 0)
                        .map(|k| others[k].window)
                        .collect()
                })
                .collect();
            regions.sort_by(|a: &Vec<usize>, b| b.len().cmp(&a.len()).then(a.cmp(b)));
            for region in regions {
                let count = counts.get(&region).copied().unwrap_or(0);
                shares.push(RegionShare {
                    class,
                    window: w.window,
                    region,
                    count,
                    percent: percent(count, own.len()),
                });
            }
        }
    }
    let mut etp = Vec::new();
    for from in windows {
        for to in windows.iter().filter(|w| w.window < from.window) {
            let count = from.fn_.intersection(&to.tp).count();
            etp.push(EarlyTruePositive {
                from: from.window,
                to: to.window,
                count,
                percent: percent(count, from.fn_.len()),
            });
        }
    }
    CaseAgreement { shares, etp }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionShift {
    pub feature: String,
    /// Cramér's V of category × group membership.
    pub effect_size: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Compares a categorical feature inside and outside `group`. Rows with a
/// missing value are skipped.
pub fn compare_distributions(
    feature: &str,
    values: &[Option<usize>],
    cardinality: usize,
    group: &[bool],
) -> Result<DistributionShift> {
    if values.len() != group.len() {
        return Err(Error::Schema("values and group mask differ in length".into()));
    }
    let inside = group.iter().filter(|&&g| g).count();
    if inside == 0 || inside == group.len() {
        return Err(Error::Config("group must be a non-empty proper subset".into()));
    }
    let mut table = ContingencyTable::zeros(cardinality, 2);
    for (v, &g) in values.iter().zip(group) {
        if let Some(v) = v {
            table.add(*v, usize::from(g), 1);
        }
    }
    let table = table.drop_empty();
    if table.is_degenerate() {
        return Err(Error::DegenerateVariable(feature.to_string()));
    }
    Ok(DistributionShift {
        feature: feature.to_string(),
        effect_size: cramers_v(&table)?,
        p_value: chi_squared(&table)?.p_value,
        n: table.n() as usize,
    })
}
