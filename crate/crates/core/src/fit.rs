//! User-level model fitting: configuration, standardization, and prediction.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::{h_composite, h_composite_unchecked, FamilyKind};
use crate::model::{eta_unchecked, standardize, zero_variance_columns, Coefficients, Dataset, Layout, ModelSpec};
use crate::optim::{solution_path, Controls, FitPath, LambdaSpec, PenaltyConfig, Termination};
use crate::tune::{path_summary, SummaryRow};

pub const NONMONOTONE_WARNING: &str =
    "For out-of-sample data, the cumulative probability model with nonparallelTerms=TRUE \
     may predict cumulative probabilities that are not monotone increasing.";

/// Everything needed to fit a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub spec: ModelSpec,
    pub alpha: f64,
    /// Multiplier on the parallel penalty in the semi-parallel form.
    pub parallel_penalty_factor: f64,
    /// One factor per covariate.
    pub penalty_factors: Option<Vec<f64>>,
    /// One flag per covariate.
    pub positive_id: Option<Vec<bool>>,
    pub lambdas: LambdaSpec,
    pub standardize: bool,
    pub alpha_min: f64,
    pub controls: Controls,
    pub warn: bool,
}

impl FitConfig {
    pub fn new(spec: ModelSpec) -> Self {
        FitConfig {
            spec,
            alpha: 1.0,
            parallel_penalty_factor: 1.0,
            penalty_factors: None,
            positive_id: None,
            lambdas: LambdaSpec::default(),
            standardize: true,
            alpha_min: 0.01,
            controls: Controls::default(),
            warn: true,
        }
    }

    /// Penalty for the given data, with zero-variance covariates frozen.
    pub fn penalty(&self, data: &Dataset) -> Result<PenaltyConfig> {
        let layout = Layout::for_data(data, self.spec.form);
        let pen = PenaltyConfig::for_layout(
            &layout,
            self.alpha,
            self.parallel_penalty_factor,
            self.penalty_factors.as_deref(),
            self.positive_id.as_deref(),
        )?
        .with_alpha_min(self.alpha_min)?;
        Ok(pen.freeze_covariates(&layout, &zero_variance_columns(data)))
    }
}

/// A fitted path with coefficients on the original covariate scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub config: FitConfig,
    pub path: FitPath,
    pub scales: Vec<f64>,
    pub zero_variance: Vec<bool>,
    pub covariate_names: Vec<String>,
    pub levels: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn fit(config: &FitConfig, data: &Dataset) -> Result<Fit> {
    let penalty = config.penalty(data)?;
    let (work, scales, zero_variance) = if config.standardize {
        let st = standardize(data);
        (st.data, st.scales, st.zero_variance)
    } else {
        (data.clone(), vec![1.0; data.n_covariates()], zero_variance_columns(data))
    };
    let mut path = solution_path(&config.spec, &work, &penalty, &config.lambdas, &config.controls)?;
    if config.standardize {
        for pt in &mut path.points {
            pt.beta = path.layout.unscale(pt.beta.view(), &scales);
        }
    }

    let mut warnings = Vec::new();
    if config.warn {
        for (c, flagged) in zero_variance.iter().enumerate() {
            if *flagged {
                warnings.push(format!(
                    "covariate '{}' has zero variance; its coefficients are fixed at zero",
                    data.covariate_names()[c]
                ));
            }
        }
        if config.spec.family.kind == FamilyKind::Cumulative && config.spec.form.nonparallel {
            warnings.push(NONMONOTONE_WARNING.to_string());
        }
    }
    if let Termination::Infeasible { at, .. } = path.termination {
        warnings.push(format!(
            "fitted probabilities left the feasible region at lambda index {} ({}); \
             the path is truncated and the last feasible fit repeated",
            at + 1,
            path.points[at].lambda
        ));
    }
    Ok(Fit {
        config: config.clone(),
        path,
        scales,
        zero_variance,
        covariate_names: data.covariate_names().to_vec(),
        levels: data.levels().to_vec(),
        warnings,
    })
}

/// Fitted class probabilities for new rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `N × (K+1)`; rows flagged in `nonmonotone` may hold nonpositive entries.
    pub probabilities: Array2<f64>,
    /// 0-based argmax class, ties to the lowest index.
    pub classes: Vec<usize>,
    pub nonmonotone: Vec<bool>,
}

/// Probabilities at coefficient vector `beta` for covariate rows `x`.
pub fn predict_beta(spec: &ModelSpec, beta: &Array1<f64>, x: ArrayView2<f64>) -> Result<Prediction> {
    let k = infer_k(spec, beta.len(), x.ncols())?;
    let layout = Layout::new(k, x.ncols(), spec.form);
    let n = x.nrows();
    let mut probabilities = Array2::zeros((n, k + 1));
    let mut classes = Vec::with_capacity(n);
    let mut nonmonotone = Vec::with_capacity(n);
    for (i, row) in x.outer_iter().enumerate() {
        let eta = eta_unchecked(&layout, beta.view(), row);
        let (p, bad) = match h_composite(spec.link, spec.family, eta.view()) {
            Ok(p) => (p, false),
            Err(e) if e.is_infeasible() => (h_composite_unchecked(spec.link, spec.family, eta.view()), true),
            Err(e) => return Err(e),
        };
        let mut out = probabilities.row_mut(i);
        for j in 0..k {
            out[j] = p[j];
        }
        out[k] = 1.0 - p.sum();
        classes.push(argmax(out.iter().copied()));
        nonmonotone.push(bad);
    }
    Ok(Prediction { probabilities, classes, nonmonotone })
}

fn infer_k(spec: &ModelSpec, q: usize, p: usize) -> Result<usize> {
    let per_k = 1 + if spec.form.nonparallel { p } else { 0 };
    let fixed = if spec.form.parallel { p } else { 0 };
    if q < fixed || (q - fixed) % per_k != 0 || q == fixed {
        return Err(Error::DimensionMismatch(format!(
            "{q} coefficients do not fit {p} covariates in the {} form",
            spec.form.name()
        )));
    }
    Ok((q - fixed) / per_k)
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (j, v) in values.enumerate() {
        if v > best_v {
            best = j;
            best_v = v;
        }
    }
    best
}

/// Which point of a path to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSelector {
    BestAic,
    BestBic,
    /// 0-based index.
    Index(usize),
}

impl std::str::FromStr for LambdaSelector {
    type Err = Error;

    /// `bestAIC`, `bestBIC`, or a 1-based index.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bestAIC" | "aic" => Ok(LambdaSelector::BestAic),
            "bestBIC" | "bic" => Ok(LambdaSelector::BestBic),
            other => match other.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(LambdaSelector::Index(i - 1)),
                _ => Err(Error::InvalidConfig(format!(
                    "lambda selector must be bestAIC, bestBIC, or a positive index, got '{other}'"
                ))),
            },
        }
    }
}

impl Fit {
    pub fn n_lambda(&self) -> usize {
        self.path.points.len()
    }

    pub fn coefficients(&self, index: usize) -> Coefficients {
        Coefficients { layout: self.path.layout, values: self.path.points[index].beta.clone() }
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        path_summary(&self.path)
    }

    /// 0-based index of the first minimum of a summary column.
    fn first_min(&self, key: impl Fn(&SummaryRow) -> f64) -> usize {
        let rows = self.summary();
        let mut best = 0;
        for (i, r) in rows.iter().enumerate() {
            if key(r) < key(&rows[best]) {
                best = i;
            }
        }
        best
    }

    pub fn select(&self, selector: LambdaSelector) -> Result<usize> {
        match selector {
            LambdaSelector::BestAic => Ok(self.first_min(|r| r.aic)),
            LambdaSelector::BestBic => Ok(self.first_min(|r| r.bic)),
            LambdaSelector::Index(i) if i < self.n_lambda() => Ok(i),
            LambdaSelector::Index(i) => Err(Error::InvalidConfig(format!(
                "lambda index {} out of range 1..={}",
                i + 1,
                self.n_lambda()
            ))),
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>, index: usize) -> Result<Prediction> {
        if x.ncols() != self.path.layout.p {
            return Err(Error::DimensionMismatch(format!(
                "model has {} covariates, data has {}",
                self.path.layout.p,
                x.ncols()
            )));
        }
        predict_beta(&self.config.spec, &self.path.points[index].beta, x)
    }

    /// Column headers of the coefficient matrix, e.g. `logit(P[Y<=1])`.
    pub fn predictor_labels(&self) -> Vec<String> {
        let spec = self.config.spec;
        (0..self.path.layout.k)
            .map(|j| format!("{}({})", spec.link.name(), spec.family.delta_label(j)))
            .collect()
    }
}
