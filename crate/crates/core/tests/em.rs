mod common;

use proptest::prelude::*;
use raus::params::{em_fit, mle_fit, observed_loglik, EmConfig};
use raus::synthgen::{sample_panel, GeneratorSpec};

fn panel(seed: u64, missing: f64) -> (raus::structure::TwoSliceStructure, raus::sequences::SequenceData) {
    let (structure, cpts) = common::small_truth(seed, 3);
    let spec = GeneratorSpec { structure: structure.clone(), cpts, n_subjects: 80, horizon: 4, missing_rate: missing, seed };
    let p = sample_panel(&spec).unwrap();
    let data = common::all_sequences(&p, &common::features(&structure));
    (structure, data)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn likelihood_never_falls_without_prior(seed in any::<u64>(), missing in 0.05f64..0.5) {
        let (s, d) = panel(seed, missing);
        let cfg = EmConfig { pseudocount: 0.0, tol: 1e-9, max_iter: 15, seed };
        let (cpts, trace) = em_fit(&s, &d, &cfg).unwrap();
        prop_assert!(trace.loglik.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        let last = *trace.loglik.last().unwrap();
        prop_assert!((observed_loglik(&s, &cpts, &d).unwrap() - last).abs() < 1e-6 * last.abs().max(1.0));
    }

    #[test]
    fn objective_never_falls_with_prior(seed in any::<u64>()) {
        let (s, d) = panel(seed, 0.3);
        let (_, trace) = em_fit(&s, &d, &EmConfig { max_iter: 15, ..EmConfig::default() }).unwrap();
        prop_assert!(trace.objective.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn fitted_rows_are_distributions(seed in any::<u64>()) {
        let (s, d) = panel(seed, 0.2);
        let (cpts, _) = em_fit(&s, &d, &EmConfig { max_iter: 10, ..EmConfig::default() }).unwrap();
        cpts.validate(&s).unwrap();
    }

    #[test]
    fn fit_is_reproducible(seed in any::<u64>()) {
        let (s, d) = panel(seed, 0.2);
        let cfg = EmConfig { max_iter: 10, seed, ..EmConfig::default() };
        prop_assert_eq!(em_fit(&s, &d, &cfg).unwrap(), em_fit(&s, &d, &cfg).unwrap());
    }
}

#[test]
fn counting_matches_tabulation() {
    let (s, d) = panel(9, 0.0);
    let cpts = mle_fit(&s, &d, 0.0).unwrap();
    // slice-0 table of the first node, which has no intra parents
    let v = (0..s.n_nodes()).find(|&v| s.intra[v].is_empty()).unwrap();
    let card = s.nodes[v].cardinality;
    let mut counts = vec![0.0; card];
    for seq in 0..d.n_sequences() {
        counts[d.get(seq, 0, v).unwrap()] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    for (p, c) in cpts.prior[v].table.iter().zip(&counts) {
        assert!((p - c / total).abs() < 1e-15);
    }
    let (em, _) = em_fit(&s, &d, &EmConfig { pseudocount: 0.0, ..EmConfig::default() }).unwrap();
    for (a, b) in em.transition.iter().zip(&cpts.transition) {
        for (x, y) in a.table.iter().zip(&b.table) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
