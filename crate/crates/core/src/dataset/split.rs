use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::panel::DiscretePanel;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: DiscretePanel,
    pub test: DiscretePanel,
    pub train_subjects: Vec<usize>,
    pub test_subjects: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Stratified shuffle split over subject-level strata. Each stratum is
/// shuffled with its own seeded stream and cut at `round(ratio · n)`.
/// Both index lists come back sorted.
pub fn stratified_indices(strata: &[bool], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (stream, flag) in [(0u64, true), (1u64, false)] {
        let mut members: Vec<usize> = (0..strata.len()).filter(|&i| strata[i] == flag).collect();
        if members.len() < 2 {
            return Err(Error::StratumTooSmall {
                stratum: if flag { "case".into() } else { "control".into() },
                count: members.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        members.shuffle(&mut rng);
        let cut = (ratio * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits on the "ever had an event" flag.
pub fn stratified_split(panel: &DiscretePanel, ratio: f64, seed: u64) -> Result<SplitResult> {
    let strata: Vec<bool> = (0..panel.n_subjects()).map(|s| panel.ever_event(s)).collect();
    let (train_subjects, test_subjects) = stratified_indices(&strata, ratio, seed)?;
    Ok(SplitResult {
        train: panel.subset(&train_subjects),
        test: panel.subset(&test_subjects),
        train_subjects,
        test_subjects,
        seed,
        ratio,
    })
}

/// Stratified k-fold partition of `0..strata.len()`. Each stratum is
/// shuffled with its own stream and dealt round-robin, so fold sizes per
/// stratum differ by at most one. Folds come back sorted.
pub fn stratified_folds(strata: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > strata.len() {
        return Err(Error::Config(format!("need 2 <= folds <= {}, got {k}", strata.len())));
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (stream, flag) in [(0u64, true), (1u64, false)] {
        let mut members: Vec<usize> = (0..strata.len()).filter(|&i| strata[i] == flag).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        members.shuffle(&mut rng);
        for m in members {
            folds[next % k].push(m);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Balanced training subset for one prediction timestep `t`: every case
/// (event at `t + lookahead`) and an equal number of sampled controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedSubset {
    pub timestep: usize,
    pub cases: Vec<usize>,
    pub controls: Vec<usize>,
}

impl BalancedSubset {
    pub fn subjects(&self) -> impl Iterator<Item = usize> + '_ {
        self.cases.iter().chain(&self.controls).copied()
    }

    pub fn len(&self) -> usize {
        self.cases.len() + self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Balanced {
    pub lookahead: usize,
    pub subsets: Vec<BalancedSubset>,
    /// Prediction timesteps skipped for having no cases.
    pub empty: Vec<usize>,
}

impl Balanced {
    /// All subsets' subjects concatenated (a subject may appear once per
    /// subset it belongs to).
    pub fn stacked_subjects(&self) -> Vec<usize> {
        self.subsets.iter().flat_map(|s| s.subjects()).collect()
    }
}

/// Under-samples controls 1:1 against cases for every prediction timestep
/// `t ∈ [0, T − 1 − lookahead]`. Each timestep draws from its own stream.
pub fn undersample_balance(train: &DiscretePanel, lookahead: usize, seed: u64) -> Result<Balanced> {
    let h = train.horizon();
    if lookahead == 0 || lookahead >= h {
        return Err(Error::Config(format!(
            "lookahead {lookahead} leaves no prediction timestep for horizon {h}"
        )));
    }
    let mut subsets = Vec::new();
    let mut empty = Vec::new();
    for t in 0..h - lookahead {
        let (cases, mut controls): (Vec<usize>, Vec<usize>) =
            (0..train.n_subjects()).partition(|&s| train.label(s, t + lookahead));
        if cases.is_empty() {
            empty.push(t);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let (sampled, _) = controls.partial_shuffle(&mut rng, cases.len());
        let mut sampled = sampled.to_vec();
        sampled.sort_unstable();
        subsets.push(BalancedSubset {
            timestep: t,
            cases,
            controls: sampled,
        });
    }
    Ok(Balanced {
        lookahead,
        subsets,
        empty,
    })
}
