mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raus::dataset::{load_panel, stratified_folds, stratified_indices, CsvFormat, RawPanel, SubjectRecord};
use raus::pipeline::{run_on_panel, Binning, RunConfig};
use raus::ranking::RankMethod;
use raus::report::emit_run_artifacts;
use raus::synthgen::{sample_panel, write_synthetic, GeneratorSpec};

fn synthetic_raw(dir: &std::path::Path) -> RawPanel {
    let (structure, cpts) = common::small_truth(2, 4);
    let spec = GeneratorSpec { structure, cpts, n_subjects: 300, horizon: 5, missing_rate: 0.1, seed: 2 };
    let panel = sample_panel(&spec).unwrap();
    write_synthetic(&spec, &panel, dir).unwrap();
    load_panel(dir.join("panel.csv"), &CsvFormat::default()).unwrap()
}

fn small_config() -> RunConfig {
    RunConfig {
        windows: vec![24, 48],
        binning: Binning::Categorical,
        bootstrap: 20,
        em_max_iter: 10,
        seed: 3,
        ..RunConfig::default()
    }
}

#[test]
fn small_run_fills_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let raw = synthetic_raw(dir.path());
    let cfg = small_config();
    let run = run_on_panel(&cfg, raw.clone()).unwrap();
    assert_eq!(run.cells.len(), 6);
    assert!(run.cells.iter().all(|c| c.result.is_ok()), "{:?}", run.summary.failures);
    for w in &run.summary.rankings {
        assert_eq!(w.models.len(), 3);
        let ranks: Vec<usize> = w.models.iter().map(|m| m.rank).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
    }
    for cell in &run.cells {
        let m = cell.result.as_ref().unwrap();
        m.structure.validate().unwrap();
        m.cpts.validate(&m.structure).unwrap();
        let horizon = raw.horizon;
        let expected = horizon - cfg.lookahead(cell.window);
        assert!(m.report.timesteps.len() <= expected);
    }
    let again = run_on_panel(&cfg, raw).unwrap();
    assert_eq!(
        serde_json::to_string(&run.summary).unwrap(),
        serde_json::to_string(&again.summary).unwrap()
    );
    let out = dir.path().join("out");
    emit_run_artifacts(&run, &out).unwrap();
    for file in ["summary.json", "bins.json", "event_flow.csv", "24/cv/structure.dot", "48/ig/metrics.json"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
}

#[test]
fn inter_edges_do_not_depend_on_method() {
    let dir = tempfile::tempdir().unwrap();
    let raw = synthetic_raw(dir.path());
    let run = run_on_panel(&RunConfig { windows: vec![24], ..small_config() }, raw).unwrap();
    let edges: Vec<String> = run
        .cells
        .iter()
        .map(|c| serde_json::to_string(&c.result.as_ref().unwrap().structure.inter_edges).unwrap())
        .collect();
    assert!(edges.windows(2).all(|w| w[0] == w[1]));
    let methods: BTreeSet<RankMethod> = run.cells.iter().map(|c| c.method).collect();
    assert_eq!(methods.len(), 3);
}

#[test]
fn cross_validation_partitions_training_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let raw = synthetic_raw(dir.path());
    let cfg = RunConfig { windows: vec![24], methods: vec![RankMethod::Ig], folds: Some(3), ..small_config() };
    let run = run_on_panel(&cfg, raw).unwrap();
    let cv = run.cross_validation.unwrap();
    assert_eq!(cv.k, 3);
    let all: Vec<&String> = cv.membership.iter().flatten().collect();
    let unique: BTreeSet<&String> = all.iter().copied().collect();
    assert_eq!(all.len(), unique.len());
    assert_eq!(all.len(), run.summary.data.train_subjects);
}

#[test]
fn failing_window_is_isolated() {
    // events only ever happen at the second timestep, so a two-step
    // lookahead has nothing to learn from
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let horizon = 4;
    let mut subjects = Vec::new();
    let mut labels = Vec::new();
    for s in 0..200 {
        let event = s % 3 == 0;
        let mut values = Vec::new();
        for _ in 0..2 {
            for t in 0..horizon {
                let x = if event && t == 0 && rng.random::<f64>() < 0.8 { 2.0 } else { rng.random_range(0..2) as f64 };
                values.push(Some(x));
            }
        }
        subjects.push(SubjectRecord { subject_id: format!("s{s:03}"), values, statics: Default::default() });
        labels.push((0..horizon).map(|t| event && t == 1).collect());
    }
    let raw = RawPanel { variables: vec!["x".into(), "y".into()], horizon, subjects, labels: Some(labels) };
    let cfg = RunConfig { windows: vec![24, 48], alpha: 0.5, ..small_config() };
    let run = run_on_panel(&cfg, raw).unwrap();
    let ok: BTreeSet<usize> = run.cells.iter().filter(|c| c.result.is_ok()).map(|c| c.window).collect();
    let failed: BTreeSet<usize> = run.cells.iter().filter(|c| c.result.is_err()).map(|c| c.window).collect();
    assert_eq!(ok, BTreeSet::from([24]));
    assert_eq!(failed, BTreeSet::from([48]));
    assert_eq!(run.summary.failures.len(), 3);
}

fn strata() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 4..300).prop_map(|mut v| {
        v[..2].fill(true);
        v[2..4].fill(false);
        v
    })
}

proptest! {
    #[test]
    fn split_is_a_stratified_partition(s in strata(), ratio in 0.1f64..0.9, seed in any::<u64>()) {
        let (train, test) = stratified_indices(&s, ratio, seed).unwrap();
        let mut both: Vec<usize> = train.iter().chain(&test).copied().collect();
        both.sort_unstable();
        prop_assert_eq!(both, (0..s.len()).collect::<Vec<_>>());
        for flag in [true, false] {
            let n = s.iter().filter(|&&x| x == flag).count();
            let in_train = train.iter().filter(|&&i| s[i] == flag).count();
            prop_assert_eq!(in_train, (ratio * n as f64).round() as usize);
        }
        prop_assert_eq!(stratified_indices(&s, ratio, seed).unwrap(), (train, test));
    }

    #[test]
    fn folds_partition_and_balance(s in strata(), k in 2usize..6, seed in any::<u64>()) {
        let folds = stratified_folds(&s, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..s.len()).collect::<Vec<_>>());
        for flag in [true, false] {
            let sizes: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| s[i] == flag).count()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
