//! Cross-validation over the `λ` path and path summary statistics.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit, predict_beta, Fit, FitConfig};
use crate::model::{observation_loglik, Dataset};
use crate::optim::{FitPath, LambdaSpec};

/// One row of a path summary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub lambda: f64,
    pub n_nonzero: usize,
    pub loglik: f64,
    pub dev_pct: f64,
    pub aic: f64,
    pub bic: f64,
}

/// `devPct = 1 − ℓ/ℓ_null`, `aic = −2ℓ + 2·df`, `bic = −2ℓ + log(N)·df`
/// with `df` the number of nonzero coefficients.
pub fn summary_row(lambda: f64, loglik: f64, n_nonzero: usize, loglik_null: f64, n_obs: usize) -> SummaryRow {
    let df = n_nonzero as f64;
    let dev_pct = if loglik_null == 0.0 { 0.0 } else { 1.0 - loglik / loglik_null };
    SummaryRow {
        lambda,
        n_nonzero,
        loglik,
        dev_pct,
        aic: -2.0 * loglik + 2.0 * df,
        bic: -2.0 * loglik + (n_obs as f64).ln() * df,
    }
}

pub fn path_summary(path: &FitPath) -> Vec<SummaryRow> {
    path.points
        .iter()
        .map(|p| summary_row(p.lambda, p.loglik, p.n_nonzero, path.loglik_null, path.n_obs))
        .collect()
}

/// Fraction of trials whose observed class differs from the predicted
/// argmax class (ties to the lowest class).
pub fn misclassification_rate(probabilities: ArrayView2<f64>, counts: ArrayView2<f64>) -> f64 {
    let mut wrong = 0.0;
    for (p, y) in probabilities.outer_iter().zip(counts.outer_iter()) {
        let pred = crate::fit::argmax(p.iter().copied());
        wrong += y.sum() - y[pred];
    }
    wrong / counts.sum()
}

/// Disjoint, exhaustive, nonempty folds of observation indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Unstratified random folds: a seeded permutation, with position `i`
    /// going to fold `i mod n_folds`.
    pub fn random(n_obs: usize, n_folds: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n_obs, n_folds, &mut rng)
    }

    pub fn random_with(n_obs: usize, n_folds: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::InvalidConfig("nFolds must be at least 2".into()));
        }
        if n_folds > n_obs {
            return Err(Error::InvalidConfig(format!(
                "nFolds ({n_folds}) exceeds the number of observations ({n_obs})"
            )));
        }
        let mut perm: Vec<usize> = (0..n_obs).collect();
        perm.shuffle(rng);
        let mut folds = vec![Vec::new(); n_folds];
        for (pos, &i) in perm.iter().enumerate() {
            folds[pos % n_folds].push(i);
        }
        for f in &mut folds {
            f.sort_unstable();
        }
        Ok(FoldPlan { folds })
    }

    /// User-supplied folds, validated and used verbatim.
    pub fn from_folds(folds: Vec<Vec<usize>>, n_obs: usize) -> Result<Self> {
        if folds.len() < 2 {
            return Err(Error::InvalidConfig("at least two folds are required".into()));
        }
        let mut seen = vec![false; n_obs];
        for (f, fold) in folds.iter().enumerate() {
            if fold.is_empty() {
                return Err(Error::InvalidConfig(format!("fold {} is empty", f + 1)));
            }
            for &i in fold {
                if i >= n_obs {
                    return Err(Error::InvalidConfig(format!(
                        "fold {} contains observation {} but there are only {n_obs}",
                        f + 1,
                        i + 1
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidConfig(format!(
                        "observation {} appears in more than one fold",
                        i + 1
                    )));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidConfig(format!("observation {} is in no fold", i + 1)));
        }
        Ok(FoldPlan { folds })
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn held_out(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    pub fn training(&self, fold: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }
}

/// Held-out log-likelihood total and misclassification rate of one
/// coefficient vector. Infeasible fitted probabilities give `−∞`.
pub fn held_out_scores(config: &FitConfig, beta: &ndarray::Array1<f64>, test: &Dataset) -> Result<(f64, f64)> {
    let pred = predict_beta(&config.spec, beta, test.x().view())?;
    let loglik = if pred.nonmonotone.iter().any(|b| *b) {
        f64::NEG_INFINITY
    } else {
        let k = test.k();
        pred.probabilities
            .outer_iter()
            .zip(test.y().outer_iter())
            .map(|(p, y)| observation_loglik(p.slice(ndarray::s![..k]), y))
            .sum()
    };
    Ok((loglik, misclassification_rate(pred.probabilities.view(), test.y().view())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub lambdas: Vec<f64>,
    /// Held-out log-likelihood totals, `nLambda × nFolds`.
    pub loglik: Array2<f64>,
    /// Held-out log-likelihood per multinomial trial.
    pub loglik_per_trial: Array2<f64>,
    pub misclass: Array2<f64>,
    pub full_fit: Fit,
    pub warnings: Vec<String>,
}

impl TuneResult {
    /// Row means of the held-out totals; `−∞` cells propagate.
    pub fn mean_loglik(&self) -> Vec<f64> {
        row_means(&self.loglik)
    }

    pub fn mean_misclass(&self) -> Vec<f64> {
        row_means(&self.misclass)
    }

    /// 0-based index of the first maximum of the mean held-out log-likelihood.
    pub fn best_index(&self) -> usize {
        let means = self.mean_loglik();
        let mut best = 0;
        for (i, &m) in means.iter().enumerate() {
            if m > means[best] {
                best = i;
            }
        }
        best
    }
}

fn row_means(m: &Array2<f64>) -> Vec<f64> {
    m.axis_iter(Axis(0)).map(|r| r.sum() / r.len() as f64).collect()
}

fn missing_categories(train: &Dataset, full: &Dataset) -> bool {
    let t = train.y().sum_axis(Axis(0));
    let f = full.y().sum_axis(Axis(0));
    t.iter().zip(f.iter()).any(|(a, b)| *a == 0.0 && *b > 0.0)
}

/// Fit the path on the full data, then refit on each training portion with
/// the same `λ` values and score the held-out fold.
pub fn kfold_tune(config: &FitConfig, data: &Dataset, plan: &FoldPlan) -> Result<TuneResult> {
    let full_fit = fit(config, data)?;
    let lambdas = full_fit.path.lambdas();
    let mut fold_config = config.clone();
    fold_config.lambdas = LambdaSpec::Values(lambdas.clone());

    let per_fold: Vec<Result<(Vec<(f64, f64)>, bool)>> = (0..plan.n_folds())
        .into_par_iter()
        .map(|f| {
            let train = data.subset(&plan.training(f));
            let test = data.subset(plan.held_out(f));
            let fold_fit = fit(&fold_config, &train)?;
            let scores = fold_fit
                .path
                .points
                .iter()
                .map(|pt| held_out_scores(config, &pt.beta, &test))
                .collect::<Result<Vec<_>>>()?;
            Ok((scores, missing_categories(&train, data)))
        })
        .collect();

    let n_l = lambdas.len();
    let n_f = plan.n_folds();
    let mut loglik = Array2::zeros((n_l, n_f));
    let mut per_trial = Array2::zeros((n_l, n_f));
    let mut misclass = Array2::zeros((n_l, n_f));
    let mut warnings = Vec::new();
    for (f, res) in per_fold.into_iter().enumerate() {
        let (scores, missing) = res?;
        if missing && config.warn {
            warnings.push(format!("training data for fold {} is missing a response category", f + 1));
        }
        let trials: f64 = plan.held_out(f).iter().map(|&i| data.y().row(i).sum()).sum();
        for (l, (ll, mc)) in scores.into_iter().enumerate() {
            loglik[[l, f]] = ll;
            per_trial[[l, f]] = ll / trials;
            misclass[[l, f]] = mc;
        }
    }
    Ok(TuneResult { lambdas, loglik, loglik_per_trial: per_trial, misclass, full_fit, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    /// 0-based index into the training portion's `λ` sequence.
    pub best_lambda_index: usize,
    pub lambda: f64,
    pub loglik: f64,
    pub misclass: f64,
}

/// Nested cross-validation: tune `λ` by inner `n_folds_cv`-fold CV on each
/// outer training portion, then score that choice on the held-out fold.
/// Inner folds are drawn from `seed` with one stream per outer fold.
pub fn kfold_cv(
    config: &FitConfig,
    data: &Dataset,
    plan: &FoldPlan,
    n_folds_cv: usize,
    seed: u64,
) -> Result<Vec<CvFold>> {
    (0..plan.n_folds())
        .into_par_iter()
        .map(|f| {
            let train = data.subset(&plan.training(f));
            let test = data.subset(plan.held_out(f));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(f as u64);
            let inner = FoldPlan::random_with(train.n_obs(), n_folds_cv, &mut rng)?;
            let tuned = kfold_tune(config, &train, &inner)?;
            let best = tuned.best_index();
            let point = &tuned.full_fit.path.points[best];
            let (loglik, misclass) = held_out_scores(config, &point.beta, &test)?;
            Ok(CvFold { best_lambda_index: best, lambda: point.lambda, loglik, misclass })
        })
        .collect()
}
