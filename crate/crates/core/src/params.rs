//! Conditional probability tables for a 2-TBN: counting on complete data,
//! EM with junction-tree smoothing on data with gaps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{calibrate, compile_junction_tree, unroll_tables, unroll_topology, JunctionTree,
    DEFAULT_CLIQUE_STATE_CAP};
use crate::sequences::SequenceData;
use crate::structure::{ParentRef, TwoSliceStructure};

pub const DEFAULT_PSEUDOCOUNT: f64 = 1.0;
pub const DEFAULT_EM_TOL: f64 = 1e-4;
pub const DEFAULT_EM_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptParent {
    pub name: String,
    /// 0 = same slice, 1 = previous slice.
    pub lag: u8,
}

/// `table` is row-major over parent configurations (first parent most
/// significant), `cardinality` entries per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub node: String,
    pub cardinality: usize,
    pub parents: Vec<CptParent>,
    pub parent_cards: Vec<usize>,
    pub table: Vec<f64>,
}

impl Cpt {
    pub fn rows(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn row(&self, config: usize) -> &[f64] {
        &self.table[config * self.cardinality..(config + 1) * self.cardinality]
    }

    /// Rows sum to one within `tol` and no entry is negative.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.table.len() == self.rows() * self.cardinality
            && self.table.iter().all(|&p| p >= 0.0)
            && self
                .table
                .chunks(self.cardinality)
                .all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptSet {
    pub pseudocount: f64,
    /// Slice-0 tables, intra parents only.
    pub prior: Vec<Cpt>,
    /// Tables shared by every slice t ≥ 1: intra parents, then previous-slice parents.
    pub transition: Vec<Cpt>,
}

impl CptSet {
    /// Checks shapes against `structure` and normalization of every row.
    pub fn validate(&self, structure: &TwoSliceStructure) -> Result<()> {
        let n = structure.n_nodes();
        if self.prior.len() != n || self.transition.len() != n {
            return Err(Error::InvalidStructure("CPT count does not match node count".into()));
        }
        let cards = structure.cards();
        for v in 0..n {
            for (cpt, ps) in [
                (&self.prior[v], structure.prior_parents(v)),
                (&self.transition[v], structure.transition_parents(v)),
            ] {
                let want: Vec<usize> = ps.iter().map(|p| cards[p.node]).collect();
                if cpt.cardinality != cards[v] || cpt.parent_cards != want || !cpt.is_normalized(1e-9) {
                    return Err(Error::InvalidStructure(format!("CPT of `{}` is malformed", cpt.node)));
                }
            }
        }
        Ok(())
    }
}

/// EM progress. `loglik[i]` is the observed-data log-likelihood of the
/// parameters after `i` M-steps (entry 0 is the initialization);
/// `objective` adds the Dirichlet log-prior implied by the pseudocount and is
/// the quantity EM never decreases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmTrace {
    pub iterations: usize,
    pub loglik: Vec<f64>,
    pub objective: Vec<f64>,
    pub converged: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub pseudocount: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            pseudocount: DEFAULT_PSEUDOCOUNT,
            tol: DEFAULT_EM_TOL,
            max_iter: DEFAULT_EM_MAX_ITER,
            seed: 0,
        }
    }
}

/// Expected (or actual) family counts, same layout as the tables.
#[derive(Debug, Clone)]
struct Counts {
    prior: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
}

impl Counts {
    fn zeros(shape: &Shape) -> Self {
        Counts {
            prior: shape.prior.iter().map(|(_, len)| vec![0.0; *len]).collect(),
            transition: shape.transition.iter().map(|(_, len)| vec![0.0; *len]).collect(),
        }
    }

    fn add(&mut self, other: &Counts) {
        for (a, b) in self.prior.iter_mut().zip(&other.prior).chain(self.transition.iter_mut().zip(&other.transition)) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

/// Parents and table length for each prior and transition CPT.
struct Shape {
    cards: Vec<usize>,
    prior: Vec<(Vec<ParentRef>, usize)>,
    transition: Vec<(Vec<ParentRef>, usize)>,
}

impl Shape {
    fn new(structure: &TwoSliceStructure) -> Self {
        let cards = structure.cards();
        let len = |v: usize, ps: &[ParentRef]| ps.iter().map(|p| cards[p.node]).product::<usize>() * cards[v];
        let prior = (0..cards.len())
            .map(|v| {
                let ps = structure.prior_parents(v);
                let l = len(v, &ps);
                (ps, l)
            })
            .collect();
        let transition = (0..cards.len())
            .map(|v| {
                let ps = structure.transition_parents(v);
                let l = len(v, &ps);
                (ps, l)
            })
            .collect();
        Shape { cards, prior, transition }
    }
}

fn check_nodes(structure: &TwoSliceStructure, data: &SequenceData) -> Result<()> {
    if data.names() != structure.names().as_slice() || data.cards() != structure.cards().as_slice() {
        return Err(Error::Schema("data nodes do not match the structure".into()));
    }
    Ok(())
}

/// Counts rows whose whole family is observed.
fn complete_case_counts(structure: &TwoSliceStructure, data: &SequenceData) -> Counts {
    let shape = Shape::new(structure);
    let mut counts = Counts::zeros(&shape);
    let index = |ps: &[ParentRef], v: usize, cur: &[Option<u16>], prev: Option<&[Option<u16>]>| {
        let mut j = 0usize;
        for p in ps {
            let row = if p.lag == 0 { cur } else { prev? };
            j = j * shape.cards[p.node] + usize::from(row[p.node]?);
        }
        Some(j * shape.cards[v] + usize::from(cur[v]?))
    };
    for seq in 0..data.n_sequences() {
        for t in 0..data.horizon() {
            let cur = data.slice(seq, t);
            let prev = (t > 0).then(|| data.slice(seq, t - 1));
            for v in 0..shape.cards.len() {
                if t == 0 {
                    if let Some(i) = index(&shape.prior[v].0, v, cur, None) {
                        counts.prior[v][i] += 1.0;
                    }
                } else if let Some(i) = index(&shape.transition[v].0, v, cur, prev) {
                    counts.transition[v][i] += 1.0;
                }
            }
        }
    }
    counts
}

fn normalize_rows(counts: &[f64], card: usize, pseudocount: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(counts.len());
    for row in counts.chunks(card) {
        let total: f64 = row.iter().sum::<f64>() + pseudocount * card as f64;
        if total > 0.0 {
            out.extend(row.iter().map(|&c| (c + pseudocount) / total));
        } else {
            out.extend(std::iter::repeat_n(1.0 / card as f64, card));
        }
    }
    out
}

fn to_cpts(structure: &TwoSliceStructure, counts: &Counts, pseudocount: f64) -> CptSet {
    let shape = Shape::new(structure);
    let names = structure.names();
    let make = |v: usize, ps: &[ParentRef], c: &[f64]| Cpt {
        node: names[v].clone(),
        cardinality: shape.cards[v],
        parents: ps
            .iter()
            .map(|p| CptParent {
                name: names[p.node].clone(),
                lag: p.lag,
            })
            .collect(),
        parent_cards: ps.iter().map(|p| shape.cards[p.node]).collect(),
        table: normalize_rows(c, shape.cards[v], pseudocount),
    };
    CptSet {
        pseudocount,
        prior: (0..names.len()).map(|v| make(v, &shape.prior[v].0, &counts.prior[v])).collect(),
        transition: (0..names.len())
            .map(|v| make(v, &shape.transition[v].0, &counts.transition[v]))
            .collect(),
    }
}

/// Smoothed relative frequencies: `(count + α) / (row total + α·r)`.
/// Parent configurations never seen (with `α = 0`) get a uniform row.
pub fn mle_fit(structure: &TwoSliceStructure, data: &SequenceData, pseudocount: f64) -> Result<CptSet> {
    check_nodes(structure, data)?;
    if data.has_missing() {
        return Err(Error::MissingData("counting needs complete data; use EM".into()));
    }
    if pseudocount.is_nan() || pseudocount < 0.0 {
        return Err(Error::Config("pseudocount must be non-negative".into()));
    }
    Ok(to_cpts(structure, &complete_case_counts(structure, data), pseudocount))
}

fn log_prior(cpts: &CptSet) -> f64 {
    let a = cpts.pseudocount;
    if a == 0.0 {
        return 0.0;
    }
    cpts.prior
        .iter()
        .chain(&cpts.transition)
        .flat_map(|c| c.table.iter())
        .map(|&p| a * p.ln())
        .sum()
}

const CHUNK: usize = 32;

/// One E-step: expected family counts and observed log-likelihood.
fn expected_counts(
    structure: &TwoSliceStructure,
    jt: &JunctionTree,
    cpts: &CptSet,
    data: &SequenceData,
) -> Result<(Counts, f64)> {
    let shape = Shape::new(structure);
    let w = structure.n_nodes();
    let slices = data.horizon();
    let tables = unroll_tables(structure, cpts, slices);
    let partials: Vec<Result<(Counts, f64)>> = (0..data.n_sequences())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Counts::zeros(&shape);
            let mut ll = 0.0;
            for &seq in chunk {
                let ev = data.evidence(seq, slices);
                let cal = calibrate(jt, &tables, &ev).map_err(|e| match e {
                    Error::InconsistentEvidence { .. } => Error::InconsistentEvidence {
                        subject: Some(data.ids()[seq].clone()),
                    },
                    other => other,
                })?;
                ll += cal.log_evidence();
                for id in 0..slices * w {
                    let (t, v) = (id / w, id % w);
                    let fam = jt.family(id);
                    let fam_cards: Vec<usize> = fam.iter().map(|&u| shape.cards[u % w]).collect();
                    let out = if t == 0 { &mut acc.prior[v] } else { &mut acc.transition[v] };
                    cal.family_posterior(id).add_to_cpt(fam, &fam_cards, &ev, out);
                }
            }
            Ok((acc, ll))
        })
        .collect();
    let mut total = Counts::zeros(&shape);
    let mut ll = 0.0;
    for p in partials {
        let (c, l) = p?;
        total.add(&c);
        ll += l;
    }
    Ok((total, ll))
}

fn compile(structure: &TwoSliceStructure, slices: usize) -> Result<JunctionTree> {
    compile_junction_tree(&unroll_topology(structure, slices), DEFAULT_CLIQUE_STATE_CAP)
}

/// Σ over sequences of `ln P(observed cells)`; gaps are summed out.
pub fn observed_loglik(structure: &TwoSliceStructure, cpts: &CptSet, data: &SequenceData) -> Result<f64> {
    check_nodes(structure, data)?;
    cpts.validate(structure)?;
    if data.n_sequences() == 0 {
        return Ok(0.0);
    }
    let jt = compile(structure, data.horizon())?;
    let tables = unroll_tables(structure, cpts, data.horizon());
    let lls: Vec<Result<f64>> = (0..data.n_sequences())
        .into_par_iter()
        .map(|seq| {
            let ev = data.evidence(seq, data.horizon());
            calibrate(&jt, &tables, &ev)
                .map(|c| c.log_evidence())
                .map_err(|_| Error::InconsistentEvidence {
                    subject: Some(data.ids()[seq].clone()),
                })
        })
        .collect();
    lls.into_iter().sum()
}

/// EM from perturbed complete-case counts. Each iteration runs junction-tree
/// smoothing over every sequence for expected family counts, then
/// re-estimates with the pseudocount. Stops once the relative change of the
/// objective drops below `tol` or after `max_iter` M-steps.
pub fn em_fit(structure: &TwoSliceStructure, data: &SequenceData, config: &EmConfig) -> Result<(CptSet, EmTrace)> {
    check_nodes(structure, data)?;
    if config.pseudocount.is_nan() || config.pseudocount < 0.0 {
        return Err(Error::Config("pseudocount must be non-negative".into()));
    }
    // At least one pseudocount in the starting point so that no evidence
    // has probability zero under it.
    let mut cpts = to_cpts(structure, &complete_case_counts(structure, data), config.pseudocount.max(1.0));
    cpts.pseudocount = config.pseudocount;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for cpt in cpts.prior.iter_mut().chain(cpts.transition.iter_mut()) {
        let r = cpt.cardinality;
        for row in cpt.table.chunks_mut(r) {
            row.iter_mut()
                .for_each(|p| *p *= 1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0));
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
    }

    let mut trace = EmTrace {
        iterations: 0,
        loglik: Vec::new(),
        objective: Vec::new(),
        converged: false,
        tol: config.tol,
    };
    if data.n_sequences() == 0 {
        trace.converged = true;
        return Ok((cpts, trace));
    }
    let jt = compile(structure, data.horizon())?;
    loop {
        let (counts, ll) = expected_counts(structure, &jt, &cpts, data)?;
        let obj = ll + log_prior(&cpts);
        if let Some(&prev) = trace.objective.last() {
            if ((obj - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < config.tol {
                trace.converged = true;
            }
        }
        trace.loglik.push(ll);
        trace.objective.push(obj);
        if trace.converged || trace.iterations >= config.max_iter {
            break;
        }
        cpts = to_cpts(structure, &counts, config.pseudocount);
        trace.iterations += 1;
    }
    Ok((cpts, trace))
}
