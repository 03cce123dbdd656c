//! Versioned JSON fit file.
//!
//! Layout of version 1 (all keys camelCase; every real number is a decimal
//! string in shortest round-trip exponent form, e.g. `"-2.75e-1"`, `"inf"`):
//!
//! ```text
//! format, version            "ordnet-fit", 1
//! family, reverse, link      model family, direction and link
//! parallelTerms, nonparallelTerms
//! alpha, parallelPenaltyFactor, penaltyFactors?, positiveID?
//! lambda                     {nLambda, lambdaMinRatio, includeLambda0} or {lambdaVals}
//! standardize, alphaMin, warn
//! controls                   {pMin, stopThresh, threshOut, threshIn, maxiterOut, maxiterIn}
//! covariates, levels         names in model order
//! scales, zeroVariance       per covariate
//! nObs, loglikNull
//! termination                {kind: completed | stopThreshold | infeasible, lambdaIndex?, observation?}
//! path                       [{lambda, loglik, nNonzero, outerIterations, converged, status, beta}]
//! warnings
//! ```
//!
//! `beta` is on the original covariate scale: intercepts, then the parallel
//! block, then one block per linear predictor. Indices are 1-based.

use std::fmt;
use std::path::Path;

use ndarray::Array1;
use ordnet::fit::Fit;
use ordnet::optim::{PathPoint, PointStatus, Termination};
use ordnet::{Controls, Family, FamilyKind, FitConfig, FitPath, LambdaSpec, Layout, Link, ModelForm, ModelSpec};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Failure, Result};

pub const FORMAT: &str = "ordnet-fit";
pub const VERSION: u32 = 1;

/// A real number stored as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dec(pub f64);

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{:e}", self.0))
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Dec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Dec, E> {
                v.parse().map(Dec).map_err(|_| E::custom(format!("invalid number '{v}'")))
            }
        }
        d.deserialize_str(V)
    }
}

fn decs(v: &[f64]) -> Vec<Dec> {
    v.iter().copied().map(Dec).collect()
}

fn reals(v: &[Dec]) -> Vec<f64> {
    v.iter().map(|d| d.0).collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FitFile {
    format: String,
    version: u32,
    family: FamilyKind,
    reverse: bool,
    link: String,
    parallel_terms: bool,
    nonparallel_terms: bool,
    alpha: Dec,
    parallel_penalty_factor: Dec,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    penalty_factors: Option<Vec<Dec>>,
    #[serde(rename = "positiveID", skip_serializing_if = "Option::is_none", default)]
    positive_id: Option<Vec<bool>>,
    lambda: LambdaFile,
    standardize: bool,
    alpha_min: Dec,
    warn: bool,
    controls: ControlsFile,
    covariates: Vec<String>,
    levels: Vec<String>,
    scales: Vec<Dec>,
    zero_variance: Vec<bool>,
    n_obs: usize,
    loglik_null: Dec,
    termination: TerminationFile,
    path: Vec<PointFile>,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", untagged)]
enum LambdaFile {
    #[serde(rename_all = "camelCase")]
    Auto { n_lambda: usize, lambda_min_ratio: Dec, include_lambda0: bool },
    #[serde(rename_all = "camelCase")]
    Values { lambda_vals: Vec<Dec> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ControlsFile {
    p_min: Dec,
    stop_thresh: Dec,
    thresh_out: Dec,
    thresh_in: Dec,
    maxiter_out: usize,
    maxiter_in: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TerminationFile {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    lambda_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    observation: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct PointFile {
    lambda: Dec,
    loglik: Dec,
    n_nonzero: usize,
    outer_iterations: usize,
    converged: bool,
    status: String,
    beta: Vec<Dec>,
}

pub fn status_name(s: PointStatus) -> &'static str {
    match s {
        PointStatus::Fitted => "fitted",
        PointStatus::Reused => "reused",
        PointStatus::Truncated => "truncated",
    }
}

fn to_file(fit: &Fit) -> FitFile {
    let c = &fit.config;
    let lambda = match &c.lambdas {
        LambdaSpec::Auto { n_lambda, min_ratio, include_zero } => LambdaFile::Auto {
            n_lambda: *n_lambda,
            lambda_min_ratio: Dec(*min_ratio),
            include_lambda0: *include_zero,
        },
        LambdaSpec::Values(v) => LambdaFile::Values { lambda_vals: decs(v) },
    };
    let termination = match fit.path.termination {
        Termination::Completed => TerminationFile { kind: "completed".into(), lambda_index: None, observation: None },
        Termination::StopThreshold { at } => {
            TerminationFile { kind: "stopThreshold".into(), lambda_index: Some(at + 1), observation: None }
        }
        Termination::Infeasible { at, observation } => TerminationFile {
            kind: "infeasible".into(),
            lambda_index: Some(at + 1),
            observation: observation.map(|o| o + 1),
        },
    };
    FitFile {
        format: FORMAT.into(),
        version: VERSION,
        family: c.spec.family.kind,
        reverse: c.spec.family.reverse,
        link: c.spec.link.name().into(),
        parallel_terms: c.spec.form.parallel,
        nonparallel_terms: c.spec.form.nonparallel,
        alpha: Dec(c.alpha),
        parallel_penalty_factor: Dec(c.parallel_penalty_factor),
        penalty_factors: c.penalty_factors.as_deref().map(decs),
        positive_id: c.positive_id.clone(),
        lambda,
        standardize: c.standardize,
        alpha_min: Dec(c.alpha_min),
        warn: c.warn,
        controls: ControlsFile {
            p_min: Dec(c.controls.p_min),
            stop_thresh: Dec(c.controls.stop_thresh),
            thresh_out: Dec(c.controls.thresh_out),
            thresh_in: Dec(c.controls.thresh_in),
            maxiter_out: c.controls.maxiter_out,
            maxiter_in: c.controls.maxiter_in,
        },
        covariates: fit.covariate_names.clone(),
        levels: fit.levels.clone(),
        scales: decs(&fit.scales),
        zero_variance: fit.zero_variance.clone(),
        n_obs: fit.path.n_obs,
        loglik_null: Dec(fit.path.loglik_null),
        termination,
        path: fit
            .path
            .points
            .iter()
            .map(|p| PointFile {
                lambda: Dec(p.lambda),
                loglik: Dec(p.loglik),
                n_nonzero: p.n_nonzero,
                outer_iterations: p.outer_iterations,
                converged: p.converged,
                status: status_name(p.status).into(),
                beta: p.beta.iter().copied().map(Dec).collect(),
            })
            .collect(),
        warnings: fit.warnings.clone(),
    }
}

fn bad(msg: impl fmt::Display) -> Failure {
    Failure::data(format!("invalid fit file: {msg}"))
}

fn from_file(f: FitFile) -> Result<Fit> {
    if f.format != FORMAT {
        return Err(bad(format!("format is '{}', expected '{FORMAT}'", f.format)));
    }
    if f.version != VERSION {
        return Err(bad(format!("unsupported version {}", f.version)));
    }
    let link: Link = f.link.parse()?;
    let form = ModelForm::new(f.parallel_terms, f.nonparallel_terms)?;
    let spec = ModelSpec { link, family: Family { kind: f.family, reverse: f.reverse }, form };
    if f.levels.len() < 2 || f.scales.len() != f.covariates.len() || f.zero_variance.len() != f.covariates.len() {
        return Err(bad("name and scale lists are inconsistent"));
    }
    let layout = Layout::new(f.levels.len() - 1, f.covariates.len(), form);
    let points = f
        .path
        .into_iter()
        .map(|p| {
            if p.beta.len() != layout.q() {
                return Err(bad(format!("expected {} coefficients per point, found {}", layout.q(), p.beta.len())));
            }
            let status = match p.status.as_str() {
                "fitted" => PointStatus::Fitted,
                "reused" => PointStatus::Reused,
                "truncated" => PointStatus::Truncated,
                other => return Err(bad(format!("unknown status '{other}'"))),
            };
            Ok(PathPoint {
                lambda: p.lambda.0,
                beta: Array1::from(reals(&p.beta)),
                loglik: p.loglik.0,
                n_nonzero: p.n_nonzero,
                outer_iterations: p.outer_iterations,
                converged: p.converged,
                status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(bad("empty path"));
    }
    let index = |i: Option<usize>| match i {
        Some(i) if (1..=points.len()).contains(&i) => Ok(i - 1),
        _ => Err(bad("termination index out of range")),
    };
    let termination = match f.termination.kind.as_str() {
        "completed" => Termination::Completed,
        "stopThreshold" => Termination::StopThreshold { at: index(f.termination.lambda_index)? },
        "infeasible" => Termination::Infeasible {
            at: index(f.termination.lambda_index)?,
            observation: f.termination.observation.map(|o| o.saturating_sub(1)),
        },
        other => return Err(bad(format!("unknown termination '{other}'"))),
    };
    let lambdas = match f.lambda {
        LambdaFile::Auto { n_lambda, lambda_min_ratio, include_lambda0 } => {
            LambdaSpec::Auto { n_lambda, min_ratio: lambda_min_ratio.0, include_zero: include_lambda0 }
        }
        LambdaFile::Values { lambda_vals } => LambdaSpec::Values(reals(&lambda_vals)),
    };
    let config = FitConfig {
        spec,
        alpha: f.alpha.0,
        parallel_penalty_factor: f.parallel_penalty_factor.0,
        penalty_factors: f.penalty_factors.as_deref().map(reals),
        positive_id: f.positive_id,
        lambdas,
        standardize: f.standardize,
        alpha_min: f.alpha_min.0,
        controls: Controls {
            thresh_out: f.controls.thresh_out.0,
            thresh_in: f.controls.thresh_in.0,
            maxiter_out: f.controls.maxiter_out,
            maxiter_in: f.controls.maxiter_in,
            p_min: f.controls.p_min.0,
            stop_thresh: f.controls.stop_thresh.0,
        },
        warn: f.warn,
    };
    Ok(Fit {
        config,
        path: FitPath { spec, layout, points, loglik_null: f.loglik_null.0, n_obs: f.n_obs, termination },
        scales: reals(&f.scales),
        zero_variance: f.zero_variance,
        covariate_names: f.covariates,
        levels: f.levels,
        warnings: f.warnings,
    })
}

pub fn to_string(fit: &Fit) -> String {
    let mut s = serde_json::to_string_pretty(&to_file(fit)).expect("fit file serializes");
    s.push('\n');
    s
}

pub fn from_str(text: &str) -> Result<Fit> {
    from_file(serde_json::from_str(text).map_err(bad)?)
}

pub fn save(fit: &Fit, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(fit))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Fit> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    from_str(&text)
}
