//! Node-aligned view of a panel: one categorical value (or a gap) per
//! sequence, timestep and network node. The event label becomes an
//! ordinary binary node so that structure search, EM and inference treat
//! it like any other variable.

use crate::dataset::DiscretePanel;
use crate::error::{Error, Result};

pub const DEFAULT_TARGET_NAME: &str = "event";

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    names: Vec<String>,
    cards: Vec<usize>,
    horizon: usize,
    ids: Vec<String>,
    /// Sequence-major, then timestep, then node.
    cells: Vec<Option<u16>>,
}

impl SequenceData {
    /// `cells[seq][t][node]`.
    pub fn new(
        names: Vec<String>,
        cards: Vec<usize>,
        horizon: usize,
        ids: Vec<String>,
        cells: Vec<Vec<Vec<Option<usize>>>>,
    ) -> Result<Self> {
        if names.len() != cards.len() || ids.len() != cells.len() {
            return Err(Error::Schema("sequence data shape mismatch".into()));
        }
        let mut flat = Vec::with_capacity(ids.len() * horizon * names.len());
        for seq in &cells {
            if seq.len() != horizon {
                return Err(Error::Schema("sequence length mismatch".into()));
            }
            for slice in seq {
                if slice.len() != names.len() {
                    return Err(Error::Schema("slice width mismatch".into()));
                }
                for (v, &c) in slice.iter().enumerate() {
                    if c.is_some_and(|c| c >= cards[v]) {
                        return Err(Error::Schema(format!("category out of range for `{}`", names[v])));
                    }
                    flat.push(c.map(|c| c as u16));
                }
            }
        }
        Ok(SequenceData {
            names,
            cards,
            horizon,
            ids,
            cells: flat,
        })
    }

    /// Builds nodes `features ++ [target]` for the listed subjects. The
    /// target node holds the panel's label (1 = event) and is never missing.
    pub fn from_panel(
        panel: &DiscretePanel,
        features: &[String],
        target: &str,
        subjects: &[usize],
    ) -> Result<Self> {
        let idx: Vec<usize> = features
            .iter()
            .map(|f| {
                panel
                    .variable_index(f)
                    .ok_or_else(|| Error::Schema(format!("unknown variable `{f}`")))
            })
            .collect::<Result<_>>()?;
        let mut names = features.to_vec();
        names.push(target.to_string());
        let mut cards: Vec<usize> = idx.iter().map(|&v| panel.cardinality(v)).collect();
        cards.push(2);
        let h = panel.horizon();
        let mut cells = Vec::with_capacity(subjects.len() * h * names.len());
        for &s in subjects {
            for t in 0..h {
                for &v in &idx {
                    cells.push(panel.cell(s, v, t).map(|c| c as u16));
                }
                cells.push(Some(u16::from(panel.label(s, t))));
            }
        }
        Ok(SequenceData {
            names,
            cards,
            horizon: h,
            ids: subjects.iter().map(|&s| panel.subject_ids()[s].clone()).collect(),
            cells,
        })
    }

    /// Single-slice data pairing features at `t` with the label at
    /// `t + lookahead`, one row per (subject, t). Used for static networks.
    pub fn lagged_rows(
        panel: &DiscretePanel,
        features: &[String],
        target: &str,
        pairs: &[(usize, usize)],
        lookahead: usize,
    ) -> Result<Self> {
        let idx: Vec<usize> = features
            .iter()
            .map(|f| {
                panel
                    .variable_index(f)
                    .ok_or_else(|| Error::Schema(format!("unknown variable `{f}`")))
            })
            .collect::<Result<_>>()?;
        let mut names = features.to_vec();
        names.push(target.to_string());
        let mut cards: Vec<usize> = idx.iter().map(|&v| panel.cardinality(v)).collect();
        cards.push(2);
        let mut cells = Vec::with_capacity(pairs.len() * names.len());
        let mut ids = Vec::with_capacity(pairs.len());
        for &(s, t) in pairs {
            for &v in &idx {
                cells.push(panel.cell(s, v, t).map(|c| c as u16));
            }
            cells.push(Some(u16::from(panel.label(s, t + lookahead))));
            ids.push(format!("{}@{t}", panel.subject_ids()[s]));
        }
        Ok(SequenceData {
            names,
            cards,
            horizon: 1,
            ids,
            cells,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn n_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_sequences(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    #[inline]
    pub fn get(&self, seq: usize, t: usize, node: usize) -> Option<usize> {
        self.slice(seq, t)[node].map(usize::from)
    }

    #[inline]
    pub fn slice(&self, seq: usize, t: usize) -> &[Option<u16>] {
        let w = self.names.len();
        let start = (seq * self.horizon + t) * w;
        &self.cells[start..start + w]
    }

    /// Every slice of every sequence, in sequence then time order.
    pub fn slices(&self) -> impl Iterator<Item = &[Option<u16>]> {
        self.cells.chunks(self.names.len())
    }

    /// Consecutive `(t, t + 1)` slice pairs of every sequence.
    pub fn transitions(&self) -> impl Iterator<Item = (&[Option<u16>], &[Option<u16>])> {
        (0..self.n_sequences()).flat_map(move |s| {
            (0..self.horizon.saturating_sub(1)).map(move |t| (self.slice(s, t), self.slice(s, t + 1)))
        })
    }

    pub fn has_missing(&self) -> bool {
        self.cells.iter().any(Option::is_none)
    }

    /// Same data with nodes permuted into `order` (names).
    pub fn reorder(&self, order: &[String]) -> Result<SequenceData> {
        let idx: Vec<usize> = order
            .iter()
            .map(|n| {
                self.node_index(n)
                    .ok_or_else(|| Error::Schema(format!("unknown node `{n}`")))
            })
            .collect::<Result<_>>()?;
        let mut cells = Vec::with_capacity(self.n_sequences() * self.horizon * idx.len());
        for slice in self.slices() {
            cells.extend(idx.iter().map(|&i| slice[i]));
        }
        Ok(SequenceData {
            names: order.to_vec(),
            cards: idx.iter().map(|&i| self.cards[i]).collect(),
            horizon: self.horizon,
            ids: self.ids.clone(),
            cells,
        })
    }

    /// Keeps the listed sequences (repeats allowed).
    pub fn subset(&self, seqs: &[usize]) -> SequenceData {
        let w = self.names.len() * self.horizon;
        let mut cells = Vec::with_capacity(seqs.len() * w);
        for &s in seqs {
            cells.extend_from_slice(&self.cells[s * w..(s + 1) * w]);
        }
        SequenceData {
            names: self.names.clone(),
            cards: self.cards.clone(),
            horizon: self.horizon,
            ids: seqs.iter().map(|&s| self.ids[s].clone()).collect(),
            cells,
        }
    }

    /// Observed cells of one sequence as unrolled-network evidence, keeping
    /// only timesteps `< upto`. Node `v` at slice `t` maps to `t * n_nodes + v`.
    pub fn evidence(&self, seq: usize, upto: usize) -> Vec<Option<usize>> {
        let upto = upto.min(self.horizon);
        let mut ev = Vec::with_capacity(upto * self.n_nodes());
        for t in 0..upto {
            ev.extend(self.slice(seq, t).iter().map(|c| c.map(usize::from)));
        }
        ev
    }
}
