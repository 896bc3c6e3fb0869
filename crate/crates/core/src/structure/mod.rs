//! Two-slice temporal network structures and the searches that learn them:
//! K2 within a slice, REVEAL across consecutive slices.

mod k2;
mod reveal;

pub use k2::{k2_node_score, k2_search, k2_total_score, IntraDag, DEFAULT_PARENT_SPACE_CAP};
pub use reveal::{reveal_search, InterEdge, InterEdges, RevealConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub cardinality: usize,
}

/// A parent of a node in the transition model: `lag = 0` is the same slice,
/// `lag = 1` the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParentRef {
    pub node: usize,
    pub lag: u8,
}

/// Stationary 2-TBN: the intra-slice DAG repeats at every slice and the
/// inter-slice edges tie each pair of consecutive slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSliceStructure {
    /// Intra-slice topological order (ranked features, then the target).
    pub nodes: Vec<NodeSpec>,
    pub target: usize,
    /// Intra-slice parents per node; every parent precedes its child.
    pub intra: Vec<Vec<usize>>,
    /// Previous-slice parents per node, ascending.
    pub inter: Vec<Vec<usize>>,
    /// Inter-slice edges with their REVEAL scores.
    pub inter_edges: Vec<InterEdge>,
}

impl TwoSliceStructure {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.cardinality).collect()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Parents at slice 0.
    pub fn prior_parents(&self, node: usize) -> Vec<ParentRef> {
        self.intra[node]
            .iter()
            .map(|&p| ParentRef { node: p, lag: 0 })
            .collect()
    }

    /// Parents at slices ≥ 1: intra parents first, then inter parents.
    pub fn transition_parents(&self, node: usize) -> Vec<ParentRef> {
        let mut ps = self.prior_parents(node);
        ps.extend(self.inter[node].iter().map(|&p| ParentRef { node: p, lag: 1 }));
        ps
    }

    /// Structure with the same nodes and intra DAG but no inter edges.
    pub fn without_inter(&self) -> TwoSliceStructure {
        TwoSliceStructure {
            inter: vec![Vec::new(); self.nodes.len()],
            inter_edges: Vec::new(),
            ..self.clone()
        }
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.intra.len() != n || self.inter.len() != n || self.target >= n {
            return Err(Error::InvalidStructure("parent lists do not match node count".into()));
        }
        for (v, ps) in self.intra.iter().enumerate() {
            if let Some(&p) = ps.iter().find(|&&p| p >= v) {
                return Err(Error::InvalidStructure(format!(
                    "intra edge {} -> {} violates the node order",
                    self.nodes[p.min(n - 1)].name,
                    self.nodes[v].name
                )));
            }
        }
        for ps in &self.inter {
            if ps.iter().any(|&p| p >= n) {
                return Err(Error::InvalidStructure("inter parent out of range".into()));
            }
        }
        // Intra edges respect a total order and inter edges only point
        // forward in time, so every unrolling is acyclic.
        Ok(())
    }
}

/// Joins a K2 DAG and REVEAL edges into a validated 2-TBN.
pub fn assemble_2tbn(intra: &IntraDag, inter: &InterEdges, target: &str) -> Result<TwoSliceStructure> {
    let nodes = intra.nodes.clone();
    let find = |name: &str| {
        nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::InvalidStructure(format!("unknown node `{name}`")))
    };
    let target = find(target)?;
    let mut inter_parents = vec![Vec::new(); nodes.len()];
    for e in &inter.edges {
        if e.lag != 1 {
            return Err(Error::InvalidStructure(format!(
                "inter edge {} -> {} has lag {}; only t -> t+1 is allowed",
                e.source, e.dest, e.lag
            )));
        }
        inter_parents[find(&e.dest)?].push(find(&e.source)?);
    }
    for ps in &mut inter_parents {
        ps.sort_unstable();
        ps.dedup();
    }
    let s = TwoSliceStructure {
        nodes,
        target,
        intra: intra.parents.clone(),
        inter: inter_parents,
        inter_edges: inter.edges.clone(),
    };
    s.validate()?;
    Ok(s)
}
