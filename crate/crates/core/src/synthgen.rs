//! Panels sampled from a known 2-TBN, for tests, demos and recovery checks.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{DiscretePanel, DiscreteVariable};
use crate::error::{Error, Result};
use crate::params::{Cpt, CptParent, CptSet};
use crate::sequences::DEFAULT_TARGET_NAME;
use crate::structure::{InterEdge, NodeSpec, TwoSliceStructure};

/// Ground truth plus sampling settings. The structure's target node becomes
/// the panel label; every other node becomes a variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub structure: TwoSliceStructure,
    pub cpts: CptSet,
    pub n_subjects: usize,
    pub horizon: usize,
    /// Fraction of feature cells hidden completely at random; labels are
    /// never hidden.
    pub missing_rate: f64,
    pub seed: u64,
}

fn draw(rng: &mut ChaCha8Rng, row: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    row.len() - 1
}

/// Ancestral sampling slice by slice; subject `s` uses substream `s` of the
/// seed.
pub fn sample_panel(spec: &GeneratorSpec) -> Result<DiscretePanel> {
    let st = &spec.structure;
    st.validate()?;
    spec.cpts.validate(st)?;
    if !(0.0..1.0).contains(&spec.missing_rate) {
        return Err(Error::Config(format!("missing rate {} not in [0, 1)", spec.missing_rate)));
    }
    if spec.horizon == 0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let w = st.n_nodes();
    let cards = st.cards();
    let features: Vec<usize> = (0..w).filter(|&v| v != st.target).collect();
    let mut cells = Vec::with_capacity(spec.n_subjects);
    let mut labels = Vec::with_capacity(spec.n_subjects);
    for s in 0..spec.n_subjects {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(s as u64);
        let mut values = vec![vec![0usize; w]; spec.horizon];
        for t in 0..spec.horizon {
            // node order is topological within a slice
            for v in 0..w {
                let (ps, cpt) = if t == 0 {
                    (st.prior_parents(v), &spec.cpts.prior[v])
                } else {
                    (st.transition_parents(v), &spec.cpts.transition[v])
                };
                let mut j = 0;
                for p in &ps {
                    j = j * cards[p.node] + values[t - p.lag as usize][p.node];
                }
                values[t][v] = draw(&mut rng, cpt.row(j));
            }
        }
        let mut subject = vec![vec![None; spec.horizon]; features.len()];
        for t in 0..spec.horizon {
            for (i, &v) in features.iter().enumerate() {
                let hide = spec.missing_rate > 0.0 && rng.random::<f64>() < spec.missing_rate;
                subject[i][t] = (!hide).then_some(values[t][v]);
            }
        }
        cells.push(subject);
        labels.push((0..spec.horizon).map(|t| values[t][st.target] == 1).collect());
    }
    DiscretePanel::new(
        (0..spec.n_subjects).map(|s| format!("S{s:05}")).collect(),
        features
            .iter()
            .map(|&v| DiscreteVariable::with_cardinality(st.nodes[v].name.clone(), cards[v]))
            .collect(),
        spec.horizon,
        cells,
        labels,
    )
}

/// Shape of a random ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthSpec {
    pub n_features: usize,
    /// Feature cardinalities are drawn uniformly from this inclusive range.
    pub min_cardinality: usize,
    pub max_cardinality: usize,
    pub max_intra_parents: usize,
    /// Probability of each possible intra edge (subject to the cap).
    pub intra_density: f64,
    /// Every node depends on its own previous value, which is also the
    /// most likely next value.
    pub self_persistence: bool,
    /// Largest probability in every CPT row lies in `[strength, 1)`.
    pub strength: f64,
    /// Share of outcome CPT rows whose peak is on the event. One transition
    /// row always is.
    pub event_rows: f64,
    pub seed: u64,
}

impl Default for TruthSpec {
    fn default() -> Self {
        TruthSpec {
            n_features: 8,
            min_cardinality: 2,
            max_cardinality: 3,
            max_intra_parents: 2,
            intra_density: 0.3,
            self_persistence: true,
            strength: 0.85,
            event_rows: 0.1,
            seed: 0,
        }
    }
}

fn strong_row(rng: &mut ChaCha8Rng, card: usize, strength: f64, top: Option<usize>) -> Vec<f64> {
    let top = top.unwrap_or_else(|| rng.random_range(0..card));
    let peak = strength + (1.0 - strength) * 0.5 * rng.random::<f64>();
    let mut rest: Vec<f64> = (0..card - 1).map(|_| rng.random::<f64>() + 1e-3).collect();
    let sum: f64 = rest.iter().sum();
    rest.iter_mut().for_each(|x| *x *= (1.0 - peak) / sum);
    let mut row = Vec::with_capacity(card);
    let mut it = rest.into_iter();
    for k in 0..card {
        row.push(if k == top { peak } else { it.next().unwrap_or(0.0) });
    }
    row
}

/// Random 2-TBN over `f0 … f{n-1}` plus a binary `event` node, with strong
/// CPT rows (see [`TruthSpec::strength`]).
pub fn random_truth(spec: &TruthSpec) -> Result<(TwoSliceStructure, CptSet)> {
    if spec.min_cardinality < 2 || spec.max_cardinality < spec.min_cardinality {
        return Err(Error::Config("cardinality range must start at 2 or more".into()));
    }
    if !(0.5..1.0).contains(&spec.strength) {
        return Err(Error::Config("strength must be in [0.5, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_features + 1;
    let mut nodes: Vec<NodeSpec> = (0..spec.n_features)
        .map(|i| NodeSpec {
            name: format!("f{i}"),
            cardinality: rng.random_range(spec.min_cardinality..=spec.max_cardinality),
        })
        .collect();
    nodes.push(NodeSpec { name: DEFAULT_TARGET_NAME.into(), cardinality: 2 });
    let mut intra = vec![Vec::new(); n];
    for (v, ps) in intra.iter_mut().enumerate() {
        for p in 0..v {
            if ps.len() < spec.max_intra_parents && rng.random::<f64>() < spec.intra_density {
                ps.push(p);
            }
        }
    }
    let inter: Vec<Vec<usize>> = (0..n).map(|v| if spec.self_persistence { vec![v] } else { vec![] }).collect();
    let inter_edges = inter
        .iter()
        .enumerate()
        .flat_map(|(d, ps)| {
            let nodes = &nodes;
            ps.iter().map(move |&s| InterEdge {
                source: nodes[s].name.clone(),
                dest: nodes[d].name.clone(),
                lag: 1,
                // not estimated for a generating model
                mi: 0.0,
                ratio: 0.0,
            })
        })
        .collect();
    let structure = TwoSliceStructure {
        nodes,
        target: n - 1,
        intra,
        inter,
        inter_edges,
    };
    structure.validate()?;
    let cards = structure.cards();
    let names = structure.names();
    let mut make = |v: usize, ps: Vec<crate::structure::ParentRef>| {
        let parent_cards: Vec<usize> = ps.iter().map(|p| cards[p.node]).collect();
        let rows: usize = parent_cards.iter().product();
        let own = ps.iter().position(|p| p.node == v && p.lag == 1);
        let table = (0..rows)
            .flat_map(|j| {
                // value of the node's own lagged copy in configuration j
                let top = own.map(|k| j / parent_cards[k + 1..].iter().product::<usize>() % parent_cards[k]);
                strong_row(&mut rng, cards[v], spec.strength, top)
            })
            .collect();
        Cpt {
            node: names[v].clone(),
            cardinality: cards[v],
            parents: ps
                .iter()
                .map(|p| CptParent { name: names[p.node].clone(), lag: p.lag })
                .collect(),
            parent_cards,
            table,
        }
    };
    let prior = (0..n).map(|v| make(v, structure.prior_parents(v))).collect();
    let transition = (0..n).map(|v| make(v, structure.transition_parents(v))).collect();
    let mut cpts = CptSet { pseudocount: 0.0, prior, transition };
    let t = structure.target;
    for (cpt, force) in [(&mut cpts.prior[t], false), (&mut cpts.transition[t], true)] {
        let forced = force.then(|| rng.random_range(0..cpt.rows()));
        for (j, row) in cpt.table.chunks_mut(2).enumerate() {
            let on_event = Some(j) == forced || rng.random::<f64>() < spec.event_rows;
            if on_event {
                if row[0] > row[1] {
                    row.swap(0, 1);
                }
            } else {
                // quiet rows are near-certain so that events stay rare
                row[1] = 0.02 * rng.random::<f64>();
                row[0] = 1.0 - row[1];
            }
        }
    }
    Ok((structure, cpts))
}

/// Long-format CSV: `subject_id,timestep,<variables…>,label`. Category codes
/// are written as integers; gaps are empty.
pub fn write_panel_csv<W: Write>(panel: &DiscretePanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["subject_id".to_string(), "timestep".to_string()];
    header.extend(panel.variables().iter().map(|v| v.name.clone()));
    header.push("label".into());
    w.write_record(&header)?;
    for s in 0..panel.n_subjects() {
        for t in 0..panel.horizon() {
            let mut rec = vec![panel.subject_ids()[s].clone(), t.to_string()];
            for v in 0..panel.variables().len() {
                rec.push(panel.cell(s, v, t).map(|c| c.to_string()).unwrap_or_default());
            }
            rec.push(u8::from(panel.label(s, t)).to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("writing panel CSV", e))?;
    Ok(())
}

/// Writes `<dir>/panel.csv` and `<dir>/truth.json`.
pub fn write_synthetic(spec: &GeneratorSpec, panel: &DiscretePanel, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let csv_path = dir.join("panel.csv");
    let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(format!("creating {}", csv_path.display()), e))?;
    write_panel_csv(panel, std::io::BufWriter::new(f))?;
    let truth = serde_json::to_string_pretty(spec)?;
    let truth_path = dir.join("truth.json");
    std::fs::write(&truth_path, truth + "\n").map_err(|e| Error::io(format!("writing {}", truth_path.display()), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, mu: f64, seed: u64) -> GeneratorSpec {
        let (structure, cpts) = random_truth(&TruthSpec { n_features: 3, seed: 5, ..Default::default() }).unwrap();
        GeneratorSpec { structure, cpts, n_subjects: n, horizon: 4, missing_rate: mu, seed }
    }

    #[test]
    fn complete_and_reproducible() {
        let p = sample_panel(&spec(50, 0.0, 1)).unwrap();
        assert_eq!(p.missing_count(), 0);
        assert_eq!(p, sample_panel(&spec(50, 0.0, 1)).unwrap());
        assert_ne!(p, sample_panel(&spec(50, 0.0, 2)).unwrap());
        let q = sample_panel(&spec(200, 0.3, 1)).unwrap();
        let rate = q.missing_count() as f64 / (200.0 * 4.0 * 3.0);
        assert!((rate - 0.3).abs() < 0.05);
    }

    #[test]
    fn root_frequency() {
        let structure = TwoSliceStructure {
            nodes: vec![
                NodeSpec { name: "x".into(), cardinality: 2 },
                NodeSpec { name: "event".into(), cardinality: 2 },
            ],
            target: 1,
            intra: vec![vec![], vec![]],
            inter: vec![vec![], vec![]],
            inter_edges: vec![],
        };
        let row = |p: f64, name: &str| Cpt {
            node: name.into(),
            cardinality: 2,
            parents: vec![],
            parent_cards: vec![],
            table: vec![1.0 - p, p],
        };
        let cpts = CptSet {
            pseudocount: 0.0,
            prior: vec![row(0.3, "x"), row(0.1, "event")],
            transition: vec![row(0.3, "x"), row(0.1, "event")],
        };
        let p = sample_panel(&GeneratorSpec { structure, cpts, n_subjects: 50_000, horizon: 1, missing_rate: 0.0, seed: 4 }).unwrap();
        let ones = (0..p.n_subjects()).filter(|&s| p.cell(s, 0, 0) == Some(1)).count();
        assert!((ones as f64 / 50_000.0 - 0.3).abs() < 0.01);
    }

    #[test]
    fn truth_rows_are_strong() {
        let (s, c) = random_truth(&TruthSpec::default()).unwrap();
        c.validate(&s).unwrap();
        for cpt in c.prior.iter().chain(&c.transition) {
            for r in cpt.table.chunks(cpt.cardinality) {
                assert!(r.iter().cloned().fold(0.0, f64::max) >= 0.85);
            }
        }
    }
}
