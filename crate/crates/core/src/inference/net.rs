use crate::error::{Error, Result};
use crate::params::CptSet;
use crate::structure::TwoSliceStructure;

/// Discrete Bayesian network. `cpts[v]` is row-major over parent
/// configurations (first parent most significant) with `cards[v]` entries
/// per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    pub names: Vec<String>,
    pub cards: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    pub cpts: Vec<Vec<f64>>,
}

impl BayesNet {
    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn topology(&self) -> Topology {
        Topology {
            cards: self.cards.clone(),
            parents: self.parents.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.topology().topological_order()?;
        for (v, table) in self.cpts.iter().enumerate() {
            let rows: usize = self.parents[v].iter().map(|&p| self.cards[p]).product();
            if table.len() != rows * self.cards[v] {
                return Err(Error::InvalidStructure(format!("CPT of node {v} has wrong size")));
            }
        }
        Ok(())
    }
}

/// Graph shape of a network without its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub cards: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
}

impl Topology {
    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    /// Kahn's algorithm, lowest ready index first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (v, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                if p >= n {
                    return Err(Error::InvalidStructure(format!("parent {p} out of range")));
                }
                children[p].push(v);
            }
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::InvalidStructure("graph has a cycle".into()));
        }
        Ok(order)
    }
}

/// A 2-TBN unrolled over `slices` timesteps. Node `v` at slice `t` has id
/// `t * width + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledNet {
    pub net: BayesNet,
    pub slices: usize,
    pub width: usize,
}

/// Topology of the unrolled network; parents follow the CPT layouts of
/// [`TwoSliceStructure::prior_parents`] and
/// [`TwoSliceStructure::transition_parents`].
pub fn unroll_topology(structure: &TwoSliceStructure, slices: usize) -> Topology {
    let w = structure.n_nodes();
    let base_cards = structure.cards();
    let mut cards = Vec::with_capacity(w * slices);
    let mut parents = Vec::with_capacity(w * slices);
    for t in 0..slices {
        for v in 0..w {
            cards.push(base_cards[v]);
            let ps = if t == 0 {
                structure.prior_parents(v)
            } else {
                structure.transition_parents(v)
            };
            parents.push(ps.iter().map(|p| (t - p.lag as usize) * w + p.node).collect());
        }
    }
    Topology { cards, parents }
}

/// CPT tables for every unrolled node, borrowed from the tied set.
pub fn unroll_tables<'a>(structure: &TwoSliceStructure, cpts: &'a CptSet, slices: usize) -> Vec<&'a [f64]> {
    let w = structure.n_nodes();
    (0..slices * w)
        .map(|id| {
            let (t, v) = (id / w, id % w);
            if t == 0 {
                cpts.prior[v].table.as_slice()
            } else {
                cpts.transition[v].table.as_slice()
            }
        })
        .collect()
}

impl UnrolledNet {
    pub fn new(structure: &TwoSliceStructure, cpts: &CptSet, slices: usize) -> UnrolledNet {
        let topo = unroll_topology(structure, slices);
        let w = structure.n_nodes();
        let names = (0..slices * w)
            .map(|id| format!("{}@{}", structure.nodes[id % w].name, id / w))
            .collect();
        let net = BayesNet {
            names,
            cards: topo.cards,
            parents: topo.parents,
            cpts: unroll_tables(structure, cpts, slices)
                .into_iter()
                .map(<[f64]>::to_vec)
                .collect(),
        };
        UnrolledNet { net, slices, width: w }
    }

    pub fn id(&self, node: usize, t: usize) -> usize {
        t * self.width + node
    }
}
