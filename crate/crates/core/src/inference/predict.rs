use std::sync::{Arc, Mutex};

use super::jtree::{calibrate, compile_junction_tree, JunctionTree, DEFAULT_CLIQUE_STATE_CAP};
use super::net::{unroll_tables, unroll_topology};
use crate::error::{Error, Result};
use crate::params::CptSet;
use crate::sequences::SequenceData;
use crate::structure::TwoSliceStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictOptions {
    /// Enter observed target values before the query slice as evidence.
    pub use_past_labels: bool,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions { use_past_labels: true }
    }
}

/// A fitted 2-TBN ready for queries. Junction trees are compiled once per
/// unrolled length and shared between threads.
#[derive(Debug)]
pub struct Predictor<'a> {
    structure: &'a TwoSliceStructure,
    cpts: &'a CptSet,
    horizon: usize,
    state_cap: u128,
    trees: Mutex<Vec<Option<Arc<JunctionTree>>>>,
}

impl<'a> Predictor<'a> {
    pub fn new(structure: &'a TwoSliceStructure, cpts: &'a CptSet, horizon: usize) -> Self {
        Predictor {
            structure,
            cpts,
            horizon,
            state_cap: DEFAULT_CLIQUE_STATE_CAP,
            trees: Mutex::new(vec![None; horizon + 1]),
        }
    }

    pub fn with_state_cap(mut self, cap: u128) -> Self {
        self.state_cap = cap;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Junction tree of the network unrolled over `slices` timesteps.
    pub fn tree(&self, slices: usize) -> Result<Arc<JunctionTree>> {
        if slices == 0 || slices > self.horizon {
            return Err(Error::HorizonExceeded { requested: slices, horizon: self.horizon });
        }
        if let Some(jt) = &self.trees.lock().expect("tree cache poisoned")[slices] {
            return Ok(Arc::clone(jt));
        }
        let jt = Arc::new(compile_junction_tree(&unroll_topology(self.structure, slices), self.state_cap)?);
        self.trees.lock().expect("tree cache poisoned")[slices] = Some(Arc::clone(&jt));
        Ok(jt)
    }

    /// `P(target = 1 at t + lookahead)` given the cells of `rows` at
    /// timesteps `≤ t`. Slices after the query slice carry no evidence and
    /// are left out of the unrolling, which does not change the answer.
    pub fn predict(
        &self,
        rows: &[&[Option<u16>]],
        t: usize,
        lookahead: usize,
        options: PredictOptions,
    ) -> Result<f64> {
        let q = t + lookahead;
        if q >= self.horizon {
            return Err(Error::HorizonExceeded { requested: q, horizon: self.horizon });
        }
        let w = self.structure.n_nodes();
        let target = self.structure.target;
        let slices = q + 1;
        let mut evidence = vec![None; slices * w];
        for (s, row) in rows.iter().enumerate().take(t + 1) {
            for v in 0..w {
                if v == target && (!options.use_past_labels || s >= q) {
                    continue;
                }
                evidence[s * w + v] = row[v].map(usize::from);
            }
        }
        let jt = self.tree(slices)?;
        let tables = unroll_tables(self.structure, self.cpts, slices);
        let cal = calibrate(&jt, &tables, &evidence)?;
        Ok(cal.marginal(q * w + target)[1])
    }

    /// Prediction for sequence `seq` of `data`, whose nodes must match the
    /// structure's node order.
    pub fn predict_sequence(
        &self,
        data: &SequenceData,
        seq: usize,
        t: usize,
        lookahead: usize,
        options: PredictOptions,
    ) -> Result<f64> {
        if data.names() != self.structure.names().as_slice() {
            return Err(Error::Schema("sequence nodes do not match the structure".into()));
        }
        let rows: Vec<&[Option<u16>]> = (0..=t.min(data.horizon().saturating_sub(1)))
            .map(|s| data.slice(seq, s))
            .collect();
        self.predict(&rows, t, lookahead, options).map_err(|e| match e {
            Error::InconsistentEvidence { .. } => Error::InconsistentEvidence {
                subject: Some(data.ids()[seq].clone()),
            },
            other => other,
        })
    }
}

/// One-off prediction; see [`Predictor::predict_sequence`].
pub fn predict_event(
    structure: &TwoSliceStructure,
    cpts: &CptSet,
    data: &SequenceData,
    seq: usize,
    t: usize,
    lookahead: usize,
    options: PredictOptions,
) -> Result<f64> {
    Predictor::new(structure, cpts, data.horizon()).predict_sequence(data, seq, t, lookahead, options)
}
