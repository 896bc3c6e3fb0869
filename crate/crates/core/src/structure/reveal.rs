use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ranking::{info_gain_table, ContingencyTable};
use crate::sequences::SequenceData;
use crate::stats::entropy_bits;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterEdge {
    pub source: String,
    pub dest: String,
    /// Destination slice minus source slice; REVEAL only emits 1.
    pub lag: i64,
    /// Mutual information (bits) between the accepted parent set and `dest`.
    pub mi: f64,
    /// `mi / H(dest)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterEdges {
    /// Sorted by destination name, then source name.
    pub edges: Vec<InterEdge>,
    /// Destinations skipped because they are constant.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevealConfig {
    pub max_inter_parents: usize,
    pub accept_ratio: f64,
    pub fallback_ratio: f64,
    /// When set, the named node may not parent anything in the next slice.
    pub forbid_source: Option<String>,
    pub parent_space_cap: usize,
}

impl Default for RevealConfig {
    fn default() -> Self {
        RevealConfig {
            max_inter_parents: 2,
            accept_ratio: 0.9,
            fallback_ratio: 0.1,
            forbid_source: None,
            parent_space_cap: super::DEFAULT_PARENT_SPACE_CAP,
        }
    }
}

/// k-subsets of `items` in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Normalized MI of `dest` at t+1 given `sources` at t, over the transition
/// rows complete on the family. Returns `(mi, ratio)`.
fn score_set(data: &SequenceData, sources: &[usize], dest: usize) -> (f64, f64) {
    let cards = data.cards();
    let configs: usize = sources.iter().map(|&s| cards[s]).product();
    let mut table = ContingencyTable::zeros(configs, cards[dest]);
    'rows: for (prev, next) in data.transitions() {
        let Some(y) = next[dest] else { continue };
        let mut j = 0usize;
        for &s in sources {
            let Some(x) = prev[s] else { continue 'rows };
            j = j * cards[s] + x as usize;
        }
        table.add(j, y as usize, 1);
    }
    if table.n() == 0 {
        return (0.0, 0.0);
    }
    let h = entropy_bits(&table.col_sums());
    if h <= 0.0 {
        return (0.0, 0.0);
    }
    let mi = info_gain_table(&table).unwrap_or(0.0);
    (mi, (mi / h).min(1.0))
}

/// REVEAL inter-slice parent search.
///
/// For every destination node, candidate parent sets from the previous slice
/// are scored by `MI(parents; dest) / H(dest)` in increasing size, and the
/// first size with a set reaching `accept_ratio` wins. Failing that, the best
/// single parent is kept if it reaches `fallback_ratio`.
///
/// Nodes are visited and candidates enumerated in name order, so the result
/// does not depend on how `data` orders its nodes.
pub fn reveal_search(data: &SequenceData, config: &RevealConfig) -> Result<InterEdges> {
    let names = data.names();
    let cards = data.cards();
    let mut by_name: Vec<usize> = (0..names.len()).collect();
    by_name.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let sources: Vec<usize> = by_name
        .iter()
        .copied()
        .filter(|&s| config.forbid_source.as_deref() != Some(names[s].as_str()))
        .collect();

    let mut edges = Vec::new();
    let mut skipped = Vec::new();
    for &dest in &by_name {
        let mut marginal = vec![0u64; cards[dest]];
        for (_, next) in data.transitions() {
            if let Some(y) = next[dest] {
                marginal[y as usize] += 1;
            }
        }
        if entropy_bits(&marginal) <= 0.0 {
            skipped.push(names[dest].clone());
            continue;
        }

        let mut chosen: Option<(Vec<usize>, f64, f64)> = None;
        let mut best_single: Option<(Vec<usize>, f64, f64)> = None;
        for k in 1..=config.max_inter_parents.min(sources.len()) {
            let mut best_k: Option<(Vec<usize>, f64, f64)> = None;
            for set in combinations(&sources, k) {
                let space = set.iter().try_fold(1usize, |a, &s| a.checked_mul(cards[s]));
                if space.is_none_or(|sz| sz > config.parent_space_cap) {
                    continue;
                }
                let (mi, ratio) = score_set(data, &set, dest);
                if best_k.as_ref().is_none_or(|b| ratio > b.2) {
                    best_k = Some((set, mi, ratio));
                }
            }
            if k == 1 {
                best_single = best_k.clone();
            }
            if let Some(b) = best_k.filter(|b| b.2 >= config.accept_ratio) {
                chosen = Some(b);
                break;
            }
        }
        let chosen = chosen.or_else(|| best_single.filter(|b| b.2 >= config.fallback_ratio));
        if let Some((set, mi, ratio)) = chosen {
            for s in set {
                edges.push(InterEdge {
                    source: names[s].clone(),
                    dest: names[dest].clone(),
                    lag: 1,
                    mi,
                    ratio,
                });
            }
        }
    }
    edges.sort_by(|a, b| a.dest.cmp(&b.dest).then_with(|| a.source.cmp(&b.source)));
    Ok(InterEdges { edges, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(seqs: Vec<Vec<[usize; 2]>>) -> SequenceData {
        let h = seqs[0].len();
        SequenceData::new(
            vec!["x".into(), "y".into()],
            vec![2, 2],
            h,
            (0..seqs.len()).map(|i| i.to_string()).collect(),
            seqs.into_iter()
                .map(|s| s.into_iter().map(|p| vec![Some(p[0]), Some(p[1])]).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_copy_is_accepted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seqs = (0..200)
            .map(|_| {
                let x = usize::from(rng.random::<bool>());
                (0..2).map(|_| [x, usize::from(rng.random::<bool>())]).collect()
            })
            .collect();
        let out = reveal_search(&series(seqs), &RevealConfig::default()).unwrap();
        let e = out.edges.iter().find(|e| e.dest == "x").unwrap();
        assert_eq!(e.source, "x");
        assert!((e.ratio - 1.0).abs() < 1e-12);
        assert!(out.edges.iter().all(|e| e.dest != "y"));
    }

    #[test]
    fn noisy_copy_scores() {
        // joint (x_t, x_{t+1}) counts [[30, 10], [10, 30]]
        let mut seqs = Vec::new();
        for (a, b, n) in [(0, 0, 30), (0, 1, 10), (1, 0, 10), (1, 1, 30)] {
            for _ in 0..n {
                seqs.push(vec![[a, 0], [b, 0]]);
            }
        }
        let d = series(seqs);
        let (mi, ratio) = score_set(&d, &[0], 0);
        let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        assert!((mi - (1.0 - h(0.75))).abs() < 1e-12);
        assert!((ratio - 0.1887).abs() < 1e-4);
        let out = reveal_search(&d, &RevealConfig::default()).unwrap();
        // y is constant → skipped; x falls back to its own past
        assert_eq!(out.skipped, vec!["y".to_string()]);
        assert_eq!(out.edges.len(), 1);
        assert_eq!((out.edges[0].source.as_str(), out.edges[0].dest.as_str()), ("x", "x"));
    }

    #[test]
    fn independent_streams_have_no_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seqs = (0..2000)
            .map(|_| (0..3).map(|_| [usize::from(rng.random::<bool>()), usize::from(rng.random::<bool>())]).collect())
            .collect();
        let out = reveal_search(&series(seqs), &RevealConfig::default()).unwrap();
        assert!(out.edges.is_empty());
    }

    #[test]
    fn combinations_lexicographic() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
    }
}
