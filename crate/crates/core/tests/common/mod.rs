#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raus::dataset::DiscretePanel;
use raus::inference::BayesNet;
use raus::params::CptSet;
use raus::sequences::{SequenceData, DEFAULT_TARGET_NAME};
use raus::structure::TwoSliceStructure;
use raus::synthgen::{random_truth, TruthSpec};

/// Random DAG over `n` nodes with cardinalities in 2..=3 and strictly
/// positive CPT entries.
pub fn random_net(seed: u64, n: usize) -> BayesNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
    let parents: Vec<Vec<usize>> = (0..n)
        .map(|v| (0..v).filter(|_| rng.random::<f64>() < 0.4).take(3).collect())
        .collect();
    let cpts = (0..n)
        .map(|v| {
            let rows: usize = parents[v].iter().map(|&p| cards[p]).product();
            (0..rows)
                .flat_map(|_| {
                    let raw: Vec<f64> = (0..cards[v]).map(|_| rng.random_range(0.05..1.0)).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(move |x| x / s)
                })
                .collect()
        })
        .collect();
    BayesNet {
        names: (0..n).map(|v| format!("n{v}")).collect(),
        cards,
        parents,
        cpts,
    }
}

pub fn random_evidence(seed: u64, cards: &[usize], rate: f64) -> Vec<Option<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    cards
        .iter()
        .map(|&c| (rng.random::<f64>() < rate).then(|| rng.random_range(0..c)))
        .collect()
}

pub fn small_truth(seed: u64, features: usize) -> (TwoSliceStructure, CptSet) {
    random_truth(&TruthSpec {
        n_features: features,
        event_rows: 0.3,
        seed,
        ..Default::default()
    })
    .unwrap()
}

pub fn features(structure: &TwoSliceStructure) -> Vec<String> {
    structure.names().into_iter().filter(|n| n != DEFAULT_TARGET_NAME).collect()
}

pub fn all_sequences(panel: &DiscretePanel, features: &[String]) -> SequenceData {
    let all: Vec<usize> = (0..panel.n_subjects()).collect();
    SequenceData::from_panel(panel, features, DEFAULT_TARGET_NAME, &all).unwrap()
}
