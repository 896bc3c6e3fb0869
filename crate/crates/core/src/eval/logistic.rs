use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::metrics::ScoredSet;
use crate::dataset::DiscretePanel;
use crate::error::{Error, Result};

pub const LR_MAX_ITER: usize = 200;
pub const LR_GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Intercept first.
    pub coef: Vec<f64>,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let z = self.coef[0] + self.coef[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
        sigmoid(z)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// L2-penalized logistic regression by damped Newton steps. The objective
/// is the mean negative log-likelihood plus `l2 / (2n) · ‖β‖²` (intercept
/// unpenalized); iteration stops once its gradient norm is below 1e-8.
pub fn fit_logistic(x: &[Vec<f64>], y: &[bool], l2: f64) -> Result<LogisticModel> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(Error::EmptyInput);
    }
    let d = x[0].len() + 1;
    let mut xm = DMatrix::<f64>::zeros(n, d);
    for (i, row) in x.iter().enumerate() {
        if row.len() + 1 != d {
            return Err(Error::Schema("ragged design matrix".into()));
        }
        xm[(i, 0)] = 1.0;
        for (j, &v) in row.iter().enumerate() {
            xm[(i, j + 1)] = v;
        }
    }
    let yv = DVector::from_iterator(n, y.iter().map(|&b| f64::from(u8::from(b))));
    let mut penalty = DVector::from_element(d, l2 / n as f64);
    penalty[0] = 0.0;
    let objective = |beta: &DVector<f64>| {
        let z = &xm * beta;
        let nll: f64 = z.iter().zip(yv.iter()).map(|(&z, &y)| softplus(z) - y * z).sum();
        nll / n as f64 + 0.5 * beta.iter().zip(penalty.iter()).map(|(b, p)| p * b * b).sum::<f64>()
    };
    let mut beta = DVector::<f64>::zeros(d);
    let mut f = objective(&beta);
    for iter in 0..=LR_MAX_ITER {
        let z = &xm * &beta;
        let p = z.map(sigmoid);
        let grad = (xm.transpose() * (&p - &yv)) / n as f64 + penalty.component_mul(&beta);
        if grad.norm() < LR_GRAD_TOL {
            return Ok(LogisticModel { coef: beta.iter().copied().collect(), iterations: iter });
        }
        if iter == LR_MAX_ITER {
            break;
        }
        let w = p.map(|q| q * (1.0 - q));
        let mut xw = xm.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let mut hess = (xm.transpose() * xw) / n as f64;
        for j in 0..d {
            hess[(j, j)] += penalty[j] + 1e-12;
        }
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => hess.lu().solve(&grad).ok_or(Error::ConvergenceFailure(iter))?,
        };
        let mut t = 1.0;
        loop {
            let cand = &beta - &step * t;
            let fc = objective(&cand);
            if fc <= f || t < 1e-10 {
                beta = cand;
                f = fc;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::ConvergenceFailure(LR_MAX_ITER))
}

/// Drop-first one-hot encoding with per-(variable, timestep) mode imputation
/// learned on the training panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotDesign {
    pub variables: Vec<String>,
    pub cards: Vec<usize>,
    /// `modes[v][t]`
    pub modes: Vec<Vec<usize>>,
}

impl OneHotDesign {
    pub fn fit(train: &DiscretePanel) -> Self {
        let h = train.horizon();
        let nv = train.variables().len();
        let cards: Vec<usize> = (0..nv).map(|v| train.cardinality(v)).collect();
        let modes = (0..nv)
            .map(|v| {
                (0..h)
                    .map(|t| {
                        let mut counts = vec![0u64; cards[v]];
                        for s in 0..train.n_subjects() {
                            if let Some(c) = train.cell(s, v, t) {
                                counts[c] += 1;
                            }
                        }
                        // first most frequent category
                        let mut best = 0;
                        for (c, &k) in counts.iter().enumerate() {
                            if k > counts[best] {
                                best = c;
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect();
        OneHotDesign {
            variables: train.variables().iter().map(|v| v.name.clone()).collect(),
            cards,
            modes,
        }
    }

    pub fn width(&self) -> usize {
        self.cards.iter().map(|c| c - 1).sum()
    }

    pub fn row(&self, panel: &DiscretePanel, subject: usize, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        let mut off = 0;
        for (v, &card) in self.cards.iter().enumerate() {
            let c = panel.cell(subject, v, t).unwrap_or(self.modes[v][t]);
            if c > 0 {
                out[off + c - 1] = 1.0;
            }
            off += card - 1;
        }
        out
    }
}

/// Baseline logistic regression on features at t predicting the label at
/// `t + lookahead`, trained on every usable timestep of `train` and scored
/// per timestep on `test`. Both panels must share variables.
pub fn logistic_baseline(
    train: &DiscretePanel,
    test: &DiscretePanel,
    lookahead: usize,
    l2: f64,
) -> Result<(LogisticModel, Vec<(usize, ScoredSet)>)> {
    if train.variables() != test.variables() {
        return Err(Error::Schema("train and test variables differ".into()));
    }
    let h = train.horizon();
    if lookahead >= h {
        return Err(Error::HorizonExceeded { requested: lookahead, horizon: h });
    }
    let design = OneHotDesign::fit(train);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in 0..train.n_subjects() {
        for t in 0..h - lookahead {
            x.push(design.row(train, s, t));
            y.push(train.label(s, t + lookahead));
        }
    }
    let model = fit_logistic(&x, &y, l2)?;
    let sets = (0..h - lookahead)
        .map(|t| {
            let scores = (0..test.n_subjects()).map(|s| model.predict(&design.row(test, s, t))).collect();
            let labels = (0..test.n_subjects()).map(|s| test.label(s, t + lookahead)).collect();
            ScoredSet::new(scores, labels).map(|set| (t, set))
        })
        .collect::<Result<_>>()?;
    Ok((model, sets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_matches_base_rate() {
        let x = vec![vec![]; 4];
        let m = fit_logistic(&x, &[true, true, true, false], 0.0).unwrap();
        assert!((m.predict(&[]) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn separable_ranks_perfectly() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(u8::from(i >= 10))]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let m = fit_logistic(&x, &y, 1e-3).unwrap();
        assert!(m.predict(&[1.0]) > 0.9 && m.predict(&[0.0]) < 0.1);
    }

    #[test]
    fn heavy_penalty_gives_base_rate() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(u8::from(i % 3 == 0))]).collect();
        let y: Vec<bool> = (0..20).map(|i| i % 4 == 0).collect();
        let m = fit_logistic(&x, &y, 1e9).unwrap();
        assert!(m.coef[1].abs() < 1e-6);
        assert!((m.predict(&[1.0]) - 0.25).abs() < 1e-6);
    }
}
