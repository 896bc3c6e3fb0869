//! Exhaustive enumeration over every joint state. Only for tests and
//! diagnostics on small networks.

use super::jtree::Posterior;
use super::net::BayesNet;
use crate::error::{Error, Result};

pub const ORACLE_STATE_LIMIT: u128 = 1 << 20;

/// Marginals of every node and `ln P(evidence)` by full enumeration.
pub fn brute_force_all(net: &BayesNet, evidence: &[Option<usize>]) -> Result<Posterior> {
    net.validate()?;
    let n = net.len();
    if evidence.len() != n {
        return Err(Error::Schema(format!("expected {n} evidence slots, got {}", evidence.len())));
    }
    let size: u128 = net.cards.iter().map(|&c| c as u128).product();
    if size > ORACLE_STATE_LIMIT {
        return Err(Error::OracleTooLarge { size, limit: ORACLE_STATE_LIMIT });
    }
    let mut state: Vec<usize> = evidence.iter().map(|e| e.unwrap_or(0)).collect();
    let free: Vec<usize> = (0..n).filter(|&v| evidence[v].is_none()).collect();
    let mut marginals: Vec<Vec<f64>> = net.cards.iter().map(|&c| vec![0.0; c]).collect();
    let mut z = 0.0;
    loop {
        let mut p = 1.0;
        for v in 0..n {
            let mut row = 0;
            for &q in &net.parents[v] {
                row = row * net.cards[q] + state[q];
            }
            p *= net.cpts[v][row * net.cards[v] + state[v]];
        }
        z += p;
        for v in 0..n {
            marginals[v][state[v]] += p;
        }
        // advance the odometer over free nodes, last fastest
        let mut k = free.len();
        loop {
            if k == 0 {
                if z <= 0.0 {
                    return Err(Error::InconsistentEvidence { subject: None });
                }
                for m in &mut marginals {
                    m.iter_mut().for_each(|x| *x /= z);
                }
                return Ok(Posterior { marginals, log_evidence: z.ln() });
            }
            k -= 1;
            let v = free[k];
            state[v] += 1;
            if state[v] < net.cards[v] {
                break;
            }
            state[v] = 0;
        }
    }
}

/// Posterior of `query` given `evidence` by full enumeration.
pub fn brute_force_joint(net: &BayesNet, evidence: &[Option<usize>], query: usize) -> Result<Vec<f64>> {
    if query >= net.len() {
        return Err(Error::Schema(format!("query node {query} out of range")));
    }
    Ok(brute_force_all(net, evidence)?.marginals.swap_remove(query))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> BayesNet {
        BayesNet {
            names: vec!["a".into(), "b".into(), "c".into()],
            cards: vec![2, 2, 2],
            parents: vec![vec![], vec![0], vec![1]],
            cpts: vec![vec![0.7, 0.3], vec![0.8, 0.2, 0.2, 0.8], vec![0.9, 0.1, 0.1, 0.9]],
        }
    }

    #[test]
    fn chain_values() {
        let net = chain();
        assert!((brute_force_joint(&net, &[None; 3], 2).unwrap()[1] - 0.404).abs() < 1e-12);
        let p = brute_force_joint(&net, &[None, None, Some(1)], 0).unwrap();
        assert!((p[1] - 0.5495).abs() < 1e-4);
    }

    #[test]
    fn single_node_prior() {
        let net = BayesNet {
            names: vec!["x".into()],
            cards: vec![3],
            parents: vec![vec![]],
            cpts: vec![vec![0.2, 0.5, 0.3]],
        };
        assert_eq!(brute_force_joint(&net, &[None], 0).unwrap(), vec![0.2, 0.5, 0.3]);
    }

    #[test]
    fn all_evidence_point_mass() {
        let p = brute_force_joint(&chain(), &[Some(0), Some(1), Some(1)], 1).unwrap();
        assert_eq!(p, vec![0.0, 1.0]);
    }

    #[test]
    fn too_large() {
        let net = BayesNet {
            names: (0..21).map(|i| i.to_string()).collect(),
            cards: vec![2; 21],
            parents: vec![vec![]; 21],
            cpts: vec![vec![0.5, 0.5]; 21],
        };
        assert!(matches!(brute_force_joint(&net, &[None; 21], 0), Err(Error::OracleTooLarge { .. })));
    }
}
