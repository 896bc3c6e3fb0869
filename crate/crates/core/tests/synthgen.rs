mod common;

use raus::params::{Cpt, CptParent, CptSet};
use raus::structure::{NodeSpec, TwoSliceStructure};
use raus::synthgen::{sample_panel, GeneratorSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn cpt(node: &str, parents: Vec<CptParent>, parent_cards: Vec<usize>, table: Vec<f64>) -> Cpt {
    Cpt { node: node.into(), cardinality: 2, parents, parent_cards, table }
}

#[test]
fn root_frequency_concentrates() {
    let structure = TwoSliceStructure {
        nodes: vec![
            NodeSpec { name: "a".into(), cardinality: 2 },
            NodeSpec { name: "event".into(), cardinality: 2 },
        ],
        target: 1,
        intra: vec![vec![], vec![0]],
        inter: vec![vec![], vec![]],
        inter_edges: vec![],
    };
    let a_parent = || vec![CptParent { name: "a".into(), lag: 0 }];
    let root = || cpt("a", vec![], vec![], vec![0.7, 0.3]);
    let event = || cpt("event", a_parent(), vec![2], vec![0.9, 0.1, 0.5, 0.5]);
    let cpts = CptSet { pseudocount: 0.0, prior: vec![root(), event()], transition: vec![root(), event()] };
    let spec = GeneratorSpec { structure, cpts, n_subjects: 50_000, horizon: 1, missing_rate: 0.0, seed: 4 };
    let panel = sample_panel(&spec).unwrap();
    let ones = (0..panel.n_subjects()).filter(|&s| panel.cell(s, 0, 0) == Some(1)).count();
    let freq = ones as f64 / panel.n_subjects() as f64;
    assert!((freq - 0.3).abs() < 0.01, "{freq}");
    assert_eq!(panel.missing_count(), 0);
    assert_eq!(sample_panel(&spec).unwrap(), panel);
}

#[test]
fn transition_rows_fit_ground_truth() {
    let (structure, cpts) = common::small_truth(21, 4);
    let spec = GeneratorSpec { structure: structure.clone(), cpts: cpts.clone(), n_subjects: 20_000, horizon: 3, missing_rate: 0.0, seed: 8 };
    let panel = sample_panel(&spec).unwrap();
    let data = common::all_sequences(&panel, &common::features(&structure));
    for v in 0..structure.n_nodes() {
        let table = &cpts.transition[v];
        let parents = structure.transition_parents(v);
        let card = table.cardinality;
        let mut counts = vec![0.0; table.table.len()];
        for (prev, next) in data.transitions() {
            let mut row = 0;
            for p in &parents {
                let x = if p.lag == 0 { next[p.node] } else { prev[p.node] };
                row = row * table.parent_cards[parents.iter().position(|q| q == p).unwrap()] + x.unwrap() as usize;
            }
            counts[row * card + next[v].unwrap() as usize] += 1.0;
        }
        let (mut stat, mut df) = (0.0, 0usize);
        for (obs, probs) in counts.chunks(card).zip(table.table.chunks(card)) {
            let n: f64 = obs.iter().sum();
            if probs.iter().any(|p| p * n < 5.0) {
                continue;
            }
            stat += obs.iter().zip(probs).map(|(o, p)| (o - p * n).powi(2) / (p * n)).sum::<f64>();
            df += card - 1;
        }
        if df > 0 {
            let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
            assert!(p > 0.001, "node {v}: chi2 {stat} on {df} df, p {p}");
        }
    }
}

#[test]
fn masking_spares_labels() {
    let (structure, cpts) = common::small_truth(5, 4);
    let spec = GeneratorSpec { structure, cpts, n_subjects: 2000, horizon: 5, missing_rate: 0.3, seed: 1 };
    let panel = sample_panel(&spec).unwrap();
    let cells = panel.n_subjects() * panel.horizon() * panel.variables().len();
    let rate = panel.missing_count() as f64 / cells as f64;
    assert!((rate - 0.3).abs() < 0.02, "{rate}");
}
