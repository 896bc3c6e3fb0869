use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::ScoredSet;
use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

pub const DEFAULT_BOOTSTRAP_REPLICATES: usize = 1000;

/// Point estimate with a 95% percentile interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub replicates: usize,
    /// Resamples redrawn because the metric was undefined on them.
    pub degenerate: usize,
}

/// Row-level bootstrap. Replicate `i` draws from its own substream of
/// `seed`, so the result does not depend on scheduling. A resample on which
/// `metric` is undefined (one class only) is redrawn; if redraws outnumber
/// the replicates the bootstrap is declared unstable. The interval is
/// widened when needed so it always contains the point estimate.
pub fn bootstrap_ci<F>(metric: F, s: &ScoredSet, replicates: usize, seed: u64) -> Result<BootstrapCi>
where
    F: Fn(&ScoredSet) -> Result<f64> + Sync,
{
    if replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    let point = metric(s)?;
    let n = s.len();
    let draws: Vec<Result<(f64, usize)>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut idx = vec![0usize; n];
            let mut degenerate = 0;
            loop {
                idx.iter_mut().for_each(|j| *j = rng.random_range(0..n));
                match metric(&s.resample(&idx)) {
                    Ok(v) => return Ok((v, degenerate)),
                    Err(Error::UndefinedMetric(_)) => {
                        degenerate += 1;
                        if degenerate > replicates {
                            return Ok((f64::NAN, degenerate));
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let mut values = Vec::with_capacity(replicates);
    let mut degenerate = 0;
    for d in draws {
        let (v, k) = d?;
        degenerate += k;
        values.push(v);
    }
    if degenerate > replicates {
        return Err(Error::UnstableBootstrap {
            degenerate,
            attempts: degenerate + replicates,
        });
    }
    values.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&values, 0.025).min(point);
    let hi = quantile_sorted(&values, 0.975).max(point);
    Ok(BootstrapCi {
        point,
        lo,
        hi,
        replicates,
        degenerate,
    })
}
