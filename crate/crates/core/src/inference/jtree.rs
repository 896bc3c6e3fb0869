//! Junction-tree compilation and two-pass (collect / distribute) Hugin
//! calibration.
//!
//! Evidence is folded in by slicing: every clique potential ranges only over
//! the clique's unobserved variables, so the cost of a query shrinks with the
//! amount of evidence. Messages are renormalized as they travel and the
//! discarded mass is tracked in log space, which keeps long unrolled chains
//! from underflowing while still yielding `ln P(evidence)`.

use serde::Serialize;

use super::factor::Factor;
use super::net::Topology;
use crate::error::{Error, Result};

pub const DEFAULT_CLIQUE_STATE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub separator: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JunctionTree {
    #[serde(skip)]
    topology: Topology,
    /// Sorted node ids per clique.
    pub cliques: Vec<Vec<usize>>,
    pub edges: Vec<TreeEdge>,
    /// Clique holding each node's CPT (contains the node's family).
    pub assignment: Vec<usize>,
    /// Smallest clique containing each node.
    #[serde(skip)]
    home: Vec<usize>,
    /// Cliques in breadth-first order from clique 0.
    #[serde(skip)]
    order: Vec<usize>,
    /// `(parent clique, edge index)` for every non-root clique.
    #[serde(skip)]
    up: Vec<Option<(usize, usize)>>,
    #[serde(skip)]
    families: Vec<Vec<usize>>,
}

/// Moralize, triangulate by min-fill (ties → lowest node id), collect the
/// maximal elimination cliques, join them with a maximum-weight spanning
/// tree on separator size and assign every CPT to the first clique that
/// holds its family.
pub fn compile_junction_tree(topology: &Topology, state_cap: u128) -> Result<JunctionTree> {
    topology.topological_order()?;
    let n = topology.len();
    let mut adj = vec![vec![false; n]; n];
    let link = |adj: &mut Vec<Vec<bool>>, a: usize, b: usize| {
        if a != b {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    };
    let families: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut f = topology.parents[v].clone();
            f.push(v);
            f
        })
        .collect();
    for fam in &families {
        for (i, &a) in fam.iter().enumerate() {
            for &b in &fam[i + 1..] {
                link(&mut adj, a, b);
            }
        }
    }

    // Min-fill elimination.
    let mut alive = vec![true; n];
    let mut raw_cliques: Vec<Vec<usize>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for v in (0..n).filter(|&v| alive[v]) {
            let nb: Vec<usize> = (0..n).filter(|&u| alive[u] && adj[v][u]).collect();
            let mut fill = 0;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if !adj[a][b] {
                        fill += 1;
                    }
                }
            }
            if best.is_none_or(|(_, f)| fill < f) {
                best = Some((v, fill));
            }
        }
        let (v, _) = best.expect("a live node remains");
        let nb: Vec<usize> = (0..n).filter(|&u| alive[u] && adj[v][u]).collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                link(&mut adj, a, b);
            }
        }
        let mut clique = nb;
        clique.push(v);
        clique.sort_unstable();
        raw_cliques.push(clique);
        alive[v] = false;
    }

    let is_subset = |small: &[usize], big: &[usize]| small.iter().all(|x| big.binary_search(x).is_ok());
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for (i, c) in raw_cliques.iter().enumerate() {
        let dominated = raw_cliques.iter().enumerate().any(|(j, d)| {
            j != i && is_subset(c, d) && (d.len() > c.len() || j < i)
        });
        if !dominated {
            cliques.push(c.clone());
        }
    }

    for c in &cliques {
        let size: u128 = c.iter().map(|&v| topology.cards[v] as u128).product();
        if size > state_cap {
            return Err(Error::TreewidthTooLarge { size, cap: state_cap });
        }
    }

    // Kruskal, heaviest separators first, ties by clique index.
    let k = cliques.len();
    let mut candidates = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let sep: Vec<usize> = cliques[a]
                .iter()
                .copied()
                .filter(|x| cliques[b].binary_search(x).is_ok())
                .collect();
            candidates.push((sep.len(), a, b, sep));
        }
    }
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut uf: Vec<usize> = (0..k).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut c = x;
        while uf[c] != r {
            let next = uf[c];
            uf[c] = r;
            c = next;
        }
        r
    }
    let mut edges = Vec::with_capacity(k.saturating_sub(1));
    for (_, a, b, sep) in candidates {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf[ra] = rb;
            edges.push(TreeEdge { a, b, separator: sep });
            if edges.len() + 1 == k {
                break;
            }
        }
    }

    let mut nbrs = vec![Vec::new(); k];
    for (e, edge) in edges.iter().enumerate() {
        nbrs[edge.a].push((edge.b, e));
        nbrs[edge.b].push((edge.a, e));
    }
    let mut order = Vec::with_capacity(k);
    let mut up = vec![None; k];
    let mut seen = vec![false; k];
    if k > 0 {
        seen[0] = true;
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let c = order[head];
            head += 1;
            for &(d, e) in &nbrs[c] {
                if !seen[d] {
                    seen[d] = true;
                    up[d] = Some((c, e));
                    order.push(d);
                }
            }
        }
    }

    let mut assignment = Vec::with_capacity(n);
    let mut home = Vec::with_capacity(n);
    for (v, family) in families.iter().enumerate() {
        let mut fam = family.clone();
        fam.sort_unstable();
        let c = cliques
            .iter()
            .position(|c| is_subset(&fam, c))
            .expect("triangulation keeps every family inside a clique");
        assignment.push(c);
        let h = (0..k)
            .filter(|&c| cliques[c].binary_search(&v).is_ok())
            .min_by_key(|&c| (cliques[c].len(), c))
            .expect("every node sits in some clique");
        home.push(h);
    }

    Ok(JunctionTree {
        topology: topology.clone(),
        cliques,
        edges,
        assignment,
        home,
        order,
        up,
        families,
    })
}

impl JunctionTree {
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n_nodes(&self) -> usize {
        self.topology.len()
    }

    /// Largest clique state space.
    pub fn max_clique_states(&self) -> u128 {
        self.cliques
            .iter()
            .map(|c| c.iter().map(|&v| self.topology.cards[v] as u128).product())
            .max()
            .unwrap_or(1)
    }

    pub fn is_tree(&self) -> bool {
        let k = self.cliques.len();
        k == 0 || (self.edges.len() == k - 1 && self.order.len() == k)
    }

    /// For every node, the cliques containing it induce a connected subtree.
    pub fn has_running_intersection(&self) -> bool {
        (0..self.n_nodes()).all(|v| {
            let holds = |c: usize| self.cliques[c].binary_search(&v).is_ok();
            let nodes = (0..self.cliques.len()).filter(|&c| holds(c)).count();
            let links = self.edges.iter().filter(|e| holds(e.a) && holds(e.b)).count();
            nodes >= 1 && links + 1 == nodes
        })
    }

    /// Every family `{v} ∪ parents(v)` sits inside some clique.
    pub fn covers_families(&self) -> bool {
        self.families.iter().all(|f| {
            self.cliques
                .iter()
                .any(|c| f.iter().all(|x| c.binary_search(x).is_ok()))
        })
    }

    pub fn family(&self, node: usize) -> &[usize] {
        &self.families[node]
    }

    fn free(&self, vars: &[usize], evidence: &[Option<usize>]) -> (Vec<usize>, Vec<usize>) {
        let vs: Vec<usize> = vars.iter().copied().filter(|&v| evidence[v].is_none()).collect();
        let cs = vs.iter().map(|&v| self.topology.cards[v]).collect();
        (vs, cs)
    }
}

/// Calibrated clique and separator potentials for one evidence set.
#[derive(Debug, Clone)]
pub struct Calibrated<'a> {
    jt: &'a JunctionTree,
    beliefs: Vec<Factor>,
    seps: Vec<Factor>,
    evidence: Vec<Option<usize>>,
    log_evidence: f64,
}

/// Marginals of every node plus `ln P(evidence)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub marginals: Vec<Vec<f64>>,
    pub log_evidence: f64,
}

/// Enters evidence (`None` = unobserved, one slot per node) and runs
/// collect then distribute from clique 0.
pub fn calibrate<'a, T: AsRef<[f64]>>(
    jt: &'a JunctionTree,
    tables: &[T],
    evidence: &[Option<usize>],
) -> Result<Calibrated<'a>> {
    let n = jt.n_nodes();
    if tables.len() != n || evidence.len() != n {
        return Err(Error::InvalidStructure(format!(
            "expected {n} tables and evidence slots, got {} and {}",
            tables.len(),
            evidence.len()
        )));
    }
    for (v, e) in evidence.iter().enumerate() {
        if let Some(x) = e {
            if *x >= jt.topology.cards[v] {
                return Err(Error::Schema(format!("evidence {x} out of range for node {v}")));
            }
        }
    }
    let mut beliefs: Vec<Factor> = jt
        .cliques
        .iter()
        .map(|c| {
            let (vs, cs) = jt.free(c, evidence);
            Factor::ones(vs, cs)
        })
        .collect();
    for v in 0..n {
        let fam = &jt.families[v];
        let fam_cards: Vec<usize> = fam.iter().map(|&u| jt.topology.cards[u]).collect();
        let f = Factor::from_cpt(fam, &fam_cards, tables[v].as_ref(), evidence);
        beliefs[jt.assignment[v]].multiply_in(&f);
    }
    let seps: Vec<Factor> = jt
        .edges
        .iter()
        .map(|e| {
            let (vs, cs) = jt.free(&e.separator, evidence);
            Factor::ones(vs, cs)
        })
        .collect();
    let mut cal = Calibrated {
        jt,
        beliefs,
        seps,
        evidence: evidence.to_vec(),
        log_evidence: 0.0,
    };
    let log_z = cal.pass()?;
    cal.log_evidence = log_z;
    Ok(cal)
}

impl Calibrated<'_> {
    /// One collect + distribute sweep. Returns the log of the mass removed
    /// by normalization, which on the first sweep is `ln P(evidence)`.
    fn pass(&mut self) -> Result<f64> {
        let jt = self.jt;
        let mut log_z = 0.0;
        for &c in jt.order.iter().rev() {
            let Some((p, e)) = jt.up[c] else { continue };
            let mut msg = self.beliefs[c].project(&self.seps[e].vars);
            let s = msg.normalize();
            if s <= 0.0 {
                return Err(Error::InconsistentEvidence { subject: None });
            }
            log_z += s.ln();
            self.beliefs[p].multiply_ratio(&msg, &self.seps[e]);
            self.seps[e] = msg;
        }
        if let Some(&root) = jt.order.first() {
            let s = self.beliefs[root].normalize();
            if s <= 0.0 {
                return Err(Error::InconsistentEvidence { subject: None });
            }
            log_z += s.ln();
        }
        for &c in &jt.order {
            let Some((p, e)) = jt.up[c] else { continue };
            let mut msg = self.beliefs[p].project(&self.seps[e].vars);
            msg.normalize();
            self.beliefs[c].multiply_ratio(&msg, &self.seps[e]);
            self.beliefs[c].normalize();
            self.seps[e] = msg;
        }
        Ok(log_z)
    }

    /// Runs another sweep over already calibrated potentials.
    pub fn recalibrate(&mut self) -> Result<()> {
        self.pass().map(|_| ())
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    pub fn clique_belief(&self, clique: usize) -> &Factor {
        &self.beliefs[clique]
    }

    /// Posterior marginal of `node` read from `clique` (which must contain it).
    pub fn marginal_from(&self, node: usize, clique: usize) -> Vec<f64> {
        let card = self.jt.topology.cards[node];
        if let Some(x) = self.evidence[node] {
            let mut m = vec![0.0; card];
            m[x] = 1.0;
            return m;
        }
        let mut f = self.beliefs[clique].project(&[node]);
        f.normalize();
        f.values
    }

    pub fn marginal(&self, node: usize) -> Vec<f64> {
        self.marginal_from(node, self.jt.home[node])
    }

    /// Normalized posterior over the unobserved members of `node`'s family.
    pub fn family_posterior(&self, node: usize) -> Factor {
        let fam = &self.jt.families[node];
        let (vs, _) = self.jt.free(fam, &self.evidence);
        let mut f = self.beliefs[self.jt.assignment[node]].project(&vs);
        f.normalize();
        f
    }

    pub fn evidence(&self) -> &[Option<usize>] {
        &self.evidence
    }

    pub fn into_posterior(self) -> Posterior {
        let marginals = (0..self.jt.n_nodes()).map(|v| self.marginal(v)).collect();
        Posterior {
            marginals,
            log_evidence: self.log_evidence,
        }
    }
}

/// Posterior marginals of every node given `evidence`.
pub fn query_marginals<T: AsRef<[f64]>>(
    jt: &JunctionTree,
    tables: &[T],
    evidence: &[Option<usize>],
) -> Result<Posterior> {
    Ok(calibrate(jt, tables, evidence)?.into_posterior())
}
