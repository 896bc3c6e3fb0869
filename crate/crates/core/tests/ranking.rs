use proptest::prelude::*;
use raus::dataset::{DiscretePanel, DiscreteVariable};
use raus::ranking::{
    chi_squared, cramers_v, info_gain_table, rank_variables, ContingencyTable, ObservationPair, RankMethod, Selection,
};
use raus::stats::entropy_bits;

fn table() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (2usize..6, 2usize..4).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(1u64..50, c), r))
}

fn panel(cols: &[Vec<usize>], cards: &[usize], labels: &[bool]) -> (DiscretePanel, Vec<ObservationPair>) {
    let n = labels.len();
    let vars = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| DiscreteVariable::with_cardinality(format!("v{i}"), c))
        .collect();
    let cells = (0..n).map(|s| cols.iter().map(|col| vec![Some(col[s]), None]).collect()).collect();
    let labels = labels.iter().map(|&y| vec![false, y]).collect();
    let p = DiscretePanel::new((0..n).map(|s| format!("s{s}")).collect(), vars, 2, cells, labels).unwrap();
    let pairs = (0..n).map(|s| ObservationPair { subject: s, x_t: 0, y_t: 1 }).collect();
    (p, pairs)
}

/// Columns of one shared cardinality in which every category occurs.
fn same_card_data() -> impl Strategy<Value = (usize, Vec<Vec<usize>>, Vec<bool>)> {
    (2usize..5, 2usize..6, 40usize..200).prop_flat_map(|(card, vars, n)| {
        (
            prop::collection::vec(prop::collection::vec(0..card, n), vars),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(mut cols, mut labels)| {
                for col in &mut cols {
                    for (k, x) in col.iter_mut().take(card).enumerate() {
                        *x = k;
                    }
                }
                labels[0] = true;
                labels[1] = false;
                (card, cols, labels)
            })
    })
}

proptest! {
    #[test]
    fn equal_cardinality_cv_matches_chi2(data in same_card_data()) {
        let (card, cols, labels) = data;
        let (p, pairs) = panel(&cols, &vec![card; cols.len()], &labels);
        let cv = rank_variables(&p, &pairs, RankMethod::Cv, Selection::All);
        let chi = rank_variables(&p, &pairs, RankMethod::Chi2, Selection::All);
        if let (Ok(cv), Ok(chi)) = (cv, chi) {
            let (a, b) = (cv.order(), chi.order());
            // exact statistic ties may break differently
            let stats: Vec<f64> = chi.scores.iter().map(|s| s.statistic).collect();
            let distinct = stats.windows(2).all(|w| (w[0] - w[1]).abs() > 1e-9);
            if distinct {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn statistics_ignore_category_relabeling(rows in table(), rot in 0usize..5) {
        let t = ContingencyTable::from_rows(&rows);
        let mut moved = rows.clone();
        let k = rot % moved.len();
        moved.rotate_left(k);
        let u = ContingencyTable::from_rows(&moved);
        let (a, b) = (chi_squared(&t).unwrap(), chi_squared(&u).unwrap());
        prop_assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic.max(1.0));
        prop_assert!((cramers_v(&t).unwrap() - cramers_v(&u).unwrap()).abs() < 1e-12);
        prop_assert!((info_gain_table(&t).unwrap() - info_gain_table(&u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn statistics_stay_in_range(rows in table()) {
        let t = ContingencyTable::from_rows(&rows);
        let v = cramers_v(&t).unwrap();
        let ig = info_gain_table(&t).unwrap();
        let c = chi_squared(&t).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        prop_assert!(ig >= -1e-12 && ig <= entropy_bits(&t.col_sums()) + 1e-12);
        prop_assert!(c.statistic >= 0.0 && (0.0..=1.0).contains(&c.p_value));
    }

    #[test]
    fn selection_is_a_prefix(data in same_card_data(), k in 1usize..6) {
        let (card, cols, labels) = data;
        let (p, pairs) = panel(&cols, &vec![card; cols.len()], &labels);
        if let Ok(r) = rank_variables(&p, &pairs, RankMethod::Ig, Selection::BestK(k)) {
            let order = r.order();
            prop_assert_eq!(&r.selected[..], &order[..k.min(order.len())]);
        }
    }
}

#[test]
fn mixed_cardinality_orderings_can_differ() {
    // binary: chi2 8 on 1 df; five levels: chi2 9.8 on 4 df
    let t_bin = ContingencyTable::from_rows(&[vec![60, 40], vec![40, 60]]);
    let t_wide = ContingencyTable::from_rows(&[vec![20, 20], vec![20, 20], vec![20, 20], vec![27, 13], vec![13, 27]]);
    let (cb, cw) = (chi_squared(&t_bin).unwrap(), chi_squared(&t_wide).unwrap());
    assert!(cw.statistic > cb.statistic && cw.p_value > cb.p_value);
    assert!(cramers_v(&t_wide).unwrap() > cramers_v(&t_bin).unwrap());
}

#[test]
fn info_gain_worked_example() {
    let t = ContingencyTable::from_rows(&[vec![30, 10], vec![10, 30]]);
    assert!((info_gain_table(&t).unwrap() - 0.1887).abs() < 1e-4);
}
