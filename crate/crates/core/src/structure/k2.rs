use serde::{Deserialize, Serialize};

use super::NodeSpec;
use crate::error::{Error, Result};
use crate::sequences::SequenceData;
use crate::stats::ln_gamma;

pub const DEFAULT_PARENT_SPACE_CAP: usize = 4096;

/// Intra-slice DAG over `nodes` (in search order). `parents[i]` holds
/// positions in `nodes`, all smaller than `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntraDag {
    pub nodes: Vec<NodeSpec>,
    pub parents: Vec<Vec<usize>>,
    /// K2 log score of each node with its final parents.
    pub scores: Vec<f64>,
    pub max_parents: usize,
}

impl IntraDag {
    pub fn total_score(&self) -> f64 {
        self.scores.iter().sum()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }
}

/// Cooper–Herskovits log marginal likelihood of `node` given `parents`,
/// pooled over every slice of `data`. Rows with a gap in the family are
/// dropped.
pub fn k2_node_score(data: &SequenceData, node: usize, parents: &[usize], cap: usize) -> Result<f64> {
    let cards = data.cards();
    let configs = parents
        .iter()
        .try_fold(1usize, |acc, &p| acc.checked_mul(cards[p]))
        .unwrap_or(usize::MAX);
    if configs > cap {
        return Err(Error::ParentSpaceTooLarge {
            node: data.names()[node].clone(),
            size: configs,
            cap,
        });
    }
    let r = cards[node];
    let mut counts = vec![0u64; configs * r];
    'rows: for slice in data.slices() {
        let Some(k) = slice[node] else { continue };
        let mut j = 0usize;
        for &p in parents {
            let Some(x) = slice[p] else { continue 'rows };
            j = j * cards[p] + x as usize;
        }
        counts[j * r + k as usize] += 1;
    }
    Ok(score_counts(&counts, r))
}

fn score_counts(counts: &[u64], r: usize) -> f64 {
    let lg_r = ln_gamma(r as f64);
    counts
        .chunks(r)
        .filter_map(|row| {
            let nij: u64 = row.iter().sum();
            (nij > 0).then(|| {
                lg_r - ln_gamma((nij as usize + r) as f64)
                    + row.iter().map(|&n| ln_gamma(n as f64 + 1.0)).sum::<f64>()
            })
        })
        .sum()
}

/// Sum of node scores for a DAG expressed over `order` positions.
pub fn k2_total_score(data: &SequenceData, order: &[usize], parents: &[Vec<usize>], cap: usize) -> Result<f64> {
    order
        .iter()
        .zip(parents)
        .map(|(&node, ps)| {
            let ps: Vec<usize> = ps.iter().map(|&i| order[i]).collect();
            k2_node_score(data, node, &ps, cap)
        })
        .sum()
}

/// Greedy K2. For each node in `order`, repeatedly adds the predecessor
/// that raises the score most until nothing improves or `max_parents` is
/// reached. Ties go to the earliest predecessor.
pub fn k2_search(data: &SequenceData, order: &[usize], max_parents: usize, cap: usize) -> Result<IntraDag> {
    let nodes = order
        .iter()
        .map(|&i| NodeSpec {
            name: data.names()[i].clone(),
            cardinality: data.cards()[i],
        })
        .collect();
    let mut parents = Vec::with_capacity(order.len());
    let mut scores = Vec::with_capacity(order.len());
    for (pos, &node) in order.iter().enumerate() {
        let mut chosen: Vec<usize> = Vec::new();
        let mut best = k2_node_score(data, node, &[], cap)?;
        while chosen.len() < max_parents {
            let mut improvement: Option<(usize, f64)> = None;
            for cand in (0..pos).filter(|c| !chosen.contains(c)) {
                let mut ps: Vec<usize> = chosen.iter().map(|&c| order[c]).collect();
                ps.push(order[cand]);
                let s = k2_node_score(data, node, &ps, cap)?;
                if s > best && improvement.is_none_or(|(_, b)| s > b) {
                    improvement = Some((cand, s));
                }
            }
            match improvement {
                Some((cand, s)) => {
                    chosen.push(cand);
                    best = s;
                }
                None => break,
            }
        }
        chosen.sort_unstable();
        parents.push(chosen);
        scores.push(best);
    }
    Ok(IntraDag {
        nodes,
        parents,
        scores,
        max_parents,
    })
}
