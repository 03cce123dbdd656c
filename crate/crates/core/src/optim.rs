//! Elastic-net coordinate descent inside a Fisher-scoring outer loop.
//!
//! For a fixed `λ` the objective is
//! `𝓜(β) = −ℓ(β)/N* + λ Σ_j c_j (α|β_j| + ½(1−α)β_j²)`.
//! Each outer iteration replaces `ℓ` by its quadratic expansion at the
//! current anchor `β̂` (Hessian replaced by minus the Fisher information) and
//! minimizes the penalized quadratic by cyclic coordinate descent over an
//! active set.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::g_composite;
use crate::model::{evaluate, Dataset, Layout, ModelSpec, Term};

/// Added to relative-change denominators so near-zero objectives can converge.
const REL_EPS: f64 = 1e-10;

/// Per-coefficient penalty weights and constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub alpha: f64,
    pub alpha_min: f64,
    /// `c_j`, zero for intercepts.
    pub factors: Vec<f64>,
    /// Coefficients constrained to be nonnegative.
    pub positive: Vec<bool>,
    /// Coefficients held at zero (for example zero-variance covariates).
    pub frozen: Vec<bool>,
}

impl PenaltyConfig {
    /// Standard penalty for a layout. `covariate_factors` and
    /// `positive_covariates` have one entry per covariate and apply to every
    /// coefficient of that covariate; parallel coefficients of a
    /// semi-parallel model are additionally multiplied by `rho`.
    pub fn for_layout(
        layout: &Layout,
        alpha: f64,
        rho: f64,
        covariate_factors: Option<&[f64]>,
        positive_covariates: Option<&[bool]>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "parallelPenaltyFactor must be finite and nonnegative, got {rho}"
            )));
        }
        let p = layout.p;
        if let Some(f) = covariate_factors {
            if f.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "penaltyFactors has {} entries for {p} covariates",
                    f.len()
                )));
            }
            if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidConfig(
                    "penaltyFactors must be finite and nonnegative".into(),
                ));
            }
        }
        if let Some(pos) = positive_covariates {
            if pos.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "positiveID has {} entries for {p} covariates",
                    pos.len()
                )));
            }
        }
        let semi = layout.form.parallel && layout.form.nonparallel;
        let mut factors = Vec::with_capacity(layout.q());
        let mut positive = Vec::with_capacity(layout.q());
        for term in layout.terms() {
            match term.covariate() {
                None => {
                    factors.push(0.0);
                    positive.push(false);
                }
                Some(c) => {
                    let base = covariate_factors.map_or(1.0, |f| f[c]);
                    let scale = if semi && matches!(term, Term::Parallel(_)) { rho } else { 1.0 };
                    factors.push(base * scale);
                    positive.push(positive_covariates.is_some_and(|v| v[c]));
                }
            }
        }
        Ok(PenaltyConfig {
            alpha,
            alpha_min: 0.01,
            factors,
            positive,
            frozen: vec![false; layout.q()],
        })
    }

    /// Penalty with explicit per-coefficient vectors.
    pub fn custom(alpha: f64, factors: Vec<f64>, positive: Vec<bool>) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if factors.len() != positive.len() {
            return Err(Error::DimensionMismatch("factor and flag lengths differ".into()));
        }
        if factors.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig("penalty factors must be finite and nonnegative".into()));
        }
        let q = factors.len();
        Ok(PenaltyConfig { alpha, alpha_min: 0.01, factors, positive, frozen: vec![false; q] })
    }

    pub fn with_alpha_min(mut self, alpha_min: f64) -> Result<Self> {
        if !(alpha_min > 0.0 && alpha_min < 1.0) {
            return Err(Error::InvalidConfig(format!("alphaMin must lie in (0, 1), got {alpha_min}")));
        }
        self.alpha_min = alpha_min;
        Ok(self)
    }

    /// Hold every coefficient of the flagged covariates at zero.
    pub fn freeze_covariates(mut self, layout: &Layout, flags: &[bool]) -> Self {
        for (j, term) in layout.terms().enumerate() {
            if term.covariate().is_some_and(|c| flags[c]) {
                self.frozen[j] = true;
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_penalized(&self, j: usize) -> bool {
        self.factors[j] > 0.0 && !self.frozen[j]
    }

    /// `Σ_j c_j (α|β_j| + ½(1−α)β_j²)`.
    pub fn value(&self, beta: ArrayView1<f64>) -> f64 {
        let a = self.alpha;
        beta.iter()
            .zip(&self.factors)
            .map(|(b, c)| c * (a * b.abs() + 0.5 * (1.0 - a) * b * b))
            .sum()
    }
}

/// Convergence thresholds and iteration limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub thresh_out: f64,
    pub thresh_in: f64,
    pub maxiter_out: usize,
    pub maxiter_in: usize,
    pub p_min: f64,
    pub stop_thresh: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            thresh_out: 1e-8,
            thresh_in: 1e-8,
            maxiter_out: 100,
            maxiter_in: 1000,
            p_min: 1e-8,
            stop_thresh: 1e-4,
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("threshOut", self.thresh_out)?;
        positive("threshIn", self.thresh_in)?;
        positive("pMin", self.p_min)?;
        if !(self.stop_thresh >= 0.0) {
            return Err(Error::InvalidConfig("stopThresh must be nonnegative".into()));
        }
        if self.p_min >= 1.0 {
            return Err(Error::InvalidConfig("pMin must be below 1".into()));
        }
        if self.maxiter_out == 0 || self.maxiter_in == 0 {
            return Err(Error::InvalidConfig("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Penalized objective `𝓜(β)`.
pub fn objective(
    spec: &ModelSpec,
    beta: ArrayView1<f64>,
    data: &Dataset,
    penalty: &PenaltyConfig,
    lambda: f64,
) -> Result<f64> {
    let ll = crate::model::log_likelihood(spec, beta, data)?;
    Ok(-ll / data.total_trials() + lambda * penalty.value(beta))
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Quantities for one coordinate of the quadratic model at anchor `β̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateQuadratic {
    /// `[U(β̂)]_j`
    pub score: f64,
    /// `[𝓘(β̂)β̂]_j`
    pub info_anchor: f64,
    /// `[𝓘(β̂)β]_j` at the current iterate.
    pub info_current: f64,
    /// `[𝓘(β̂)]_jj`
    pub info_diag: f64,
    /// Current `β_j`.
    pub beta: f64,
}

/// Exact minimizer of the penalized quadratic along coordinate `j`.
pub fn cd_update(
    j: usize,
    q: &CoordinateQuadratic,
    penalty: &PenaltyConfig,
    lambda: f64,
    n_star: f64,
) -> Result<f64> {
    let c = penalty.factors[j];
    let a = penalty.alpha;
    let arg = (q.score + q.info_anchor - q.info_current + q.info_diag * q.beta) / n_star;
    let denom = q.info_diag / n_star + lambda * (1.0 - a) * c;
    if !(denom > 0.0) {
        return Err(Error::DegenerateCoordinate(j));
    }
    let t = lambda * a * c;
    let num = if penalty.positive[j] { (arg - t).max(0.0) } else { soft_threshold(arg, t) };
    Ok(num / denom)
}

/// Quadratic expansion of `ℓ` at an anchor.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    pub anchor: Array1<f64>,
    pub loglik: f64,
    pub score: Array1<f64>,
    pub info: Array2<f64>,
    /// `𝓘 β̂`
    pub info_anchor: Array1<f64>,
    pub n_star: f64,
}

impl QuadraticModel {
    pub fn new(anchor: Array1<f64>, loglik: f64, score: Array1<f64>, info: Array2<f64>, n_star: f64) -> Self {
        let info_anchor = info.dot(&anchor);
        QuadraticModel { anchor, loglik, score, info, info_anchor, n_star }
    }

    /// `𝓜⁽ʳ⁾(β)` given `𝓘β` for the same `β`.
    pub fn objective(
        &self,
        beta: ArrayView1<f64>,
        info_beta: ArrayView1<f64>,
        penalty: &PenaltyConfig,
        lambda: f64,
    ) -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        for j in 0..beta.len() {
            let d = beta[j] - self.anchor[j];
            lin += d * self.score[j];
            quad += d * (info_beta[j] - self.info_anchor[j]);
        }
        -(self.loglik + lin - 0.5 * quad) / self.n_star + lambda * penalty.value(beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerOutcome {
    pub sweeps: usize,
    pub converged: bool,
}

fn relative_change(new: f64, old: f64) -> f64 {
    ((new - old) / (old.abs() + REL_EPS)).abs()
}

fn update_coordinate(
    j: usize,
    model: &QuadraticModel,
    penalty: &PenaltyConfig,
    lambda: f64,
    beta: &mut Array1<f64>,
    info_beta: &mut Array1<f64>,
) {
    let q = CoordinateQuadratic {
        score: model.score[j],
        info_anchor: model.info_anchor[j],
        info_current: info_beta[j],
        info_diag: model.info[[j, j]],
        beta: beta[j],
    };
    // A degenerate coordinate has no curvature and no ridge term: leave it alone.
    let Ok(new) = cd_update(j, &q, penalty, lambda, model.n_star) else {
        return;
    };
    let delta = new - beta[j];
    if delta != 0.0 {
        beta[j] = new;
        info_beta.scaled_add(delta, &model.info.column(j));
    }
}

/// Minimize the penalized quadratic model starting from `beta`, using the
/// active-set strategy: cycle over the active coordinates until the relative
/// change in `𝓜⁽ʳ⁾` falls below `thresh_in`, then make one pass over the rest
/// and repeat if anything entered.
pub fn inner_loop(
    model: &QuadraticModel,
    penalty: &PenaltyConfig,
    lambda: f64,
    beta: &mut Array1<f64>,
    controls: &Controls,
) -> InnerOutcome {
    let q = beta.len();
    let mut info_beta = model.info.dot(&*beta);
    let mut active: Vec<bool> = (0..q)
        .map(|j| !penalty.frozen[j] && (beta[j] != 0.0 || penalty.factors[j] == 0.0))
        .collect();
    let mut sweeps = 0;
    let mut current = model.objective(beta.view(), info_beta.view(), penalty, lambda);
    loop {
        let mut converged = false;
        while sweeps < controls.maxiter_in {
            for j in 0..q {
                if active[j] {
                    update_coordinate(j, model, penalty, lambda, beta, &mut info_beta);
                }
            }
            sweeps += 1;
            let next = model.objective(beta.view(), info_beta.view(), penalty, lambda);
            let change = relative_change(next, current);
            current = next;
            if change < controls.thresh_in {
                converged = true;
                break;
            }
        }
        if !converged {
            return InnerOutcome { sweeps, converged: false };
        }
        let mut entered = false;
        for j in 0..q {
            if active[j] || penalty.frozen[j] {
                continue;
            }
            update_coordinate(j, model, penalty, lambda, beta, &mut info_beta);
            if beta[j] != 0.0 {
                active[j] = true;
                entered = true;
            }
        }
        if !entered {
            return InnerOutcome { sweeps, converged: true };
        }
        current = model.objective(beta.view(), info_beta.view(), penalty, lambda);
    }
}

/// Solution at a single `λ`.
#[derive(Debug, Clone)]
pub struct LambdaFit {
    pub beta: Array1<f64>,
    pub loglik: f64,
    pub objective: f64,
    /// Score at `beta`.
    pub score: Array1<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub inner_converged: bool,
}

const MAX_HALVINGS: usize = 10;
/// Fraction of the decrease predicted by the quadratic model that a step must achieve.
const ARMIJO: f64 = 0.25;

/// Move each semi-parallel covariate's coefficients to the penalty-minimizing
/// split of its per-predictor totals. The linear predictors do not change.
/// Covariates with sign constraints, frozen or unpenalized terms, or unequal
/// nonparallel factors are left alone.
fn resplit(layout: &Layout, penalty: &PenaltyConfig, beta: &mut Array1<f64>) {
    if !(layout.form.parallel && layout.form.nonparallel) {
        return;
    }
    for c in 0..layout.p {
        let par = layout.parallel_index(c).expect("semi-parallel layout");
        let np: Vec<usize> = (0..layout.k).map(|k| layout.nonparallel_index(k, c).expect("semi-parallel layout")).collect();
        let idx = std::iter::once(par).chain(np.iter().copied());
        if idx.clone().any(|j| penalty.frozen[j] || penalty.positive[j]) {
            continue;
        }
        let factor = penalty.factors[np[0]];
        if !(factor > 0.0) || np.iter().any(|&j| penalty.factors[j] != factor) {
            continue;
        }
        let rho = penalty.factors[par] / factor;
        let row: Vec<f64> = np.iter().map(|&j| beta[par] + beta[j]).collect();
        let before = split_penalty(&row, beta[par], rho, penalty.alpha);
        let (zeta, deltas) = optimal_split(&row, rho, penalty.alpha);
        if split_penalty(&row, zeta, rho, penalty.alpha) < before {
            beta[par] = zeta;
            for (&j, d) in np.iter().zip(deltas) {
                beta[j] = d;
            }
        }
    }
}

/// Fisher-scoring outer loop from `start`. A step that achieves less than a
/// quarter of the decrease predicted by the quadratic model is halved toward
/// the previous iterate up to ten times; if no shorter step qualifies, the
/// full step is kept. Infeasible fitted
/// probabilities at an accepted full step are returned as an error.
pub fn outer_loop(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    lambda: f64,
    start: ArrayView1<f64>,
    controls: &Controls,
) -> Result<LambdaFit> {
    let n_star = data.total_trials();
    let layout = Layout::for_data(data, spec.form);
    let mut beta = start.to_owned();
    for (j, b) in beta.iter_mut().enumerate() {
        if penalty.frozen[j] {
            *b = 0.0;
        }
    }
    let mut ev = evaluate(spec, beta.view(), data, Some(controls.p_min))?;
    let mut m = -ev.loglik / n_star + lambda * penalty.value(beta.view());
    let mut best: Option<LambdaFit> = None;
    let mut inner_ok = true;
    for r in 1..=controls.maxiter_out {
        let info = ev.information.take().expect("information requested");
        let model = QuadraticModel::new(beta.clone(), ev.loglik, ev.score.clone(), info, n_star);
        let inner = inner_loop(&model, penalty, lambda, &mut beta, controls);
        inner_ok &= inner.converged;
        resplit(&layout, penalty, &mut beta);

        let mut next = evaluate(spec, beta.view(), data, Some(controls.p_min))?;
        let mut m_next = -next.loglik / n_star + lambda * penalty.value(beta.view());
        let predicted = |b: &Array1<f64>| model.objective(b.view(), model.info.dot(b).view(), penalty, lambda) - m;
        if m_next > m + ARMIJO * predicted(&beta) {
            // Fisher scoring can overshoot and cycle; halve back toward the anchor.
            let step = &beta - &model.anchor;
            let mut t = 1.0;
            for _ in 0..MAX_HALVINGS {
                t *= 0.5;
                let trial = &model.anchor + &(&step * t);
                let Ok(ev_t) = evaluate(spec, trial.view(), data, Some(controls.p_min)) else {
                    continue;
                };
                let m_t = -ev_t.loglik / n_star + lambda * penalty.value(trial.view());
                if m_t <= m + ARMIJO * predicted(&trial) {
                    beta = trial;
                    next = ev_t;
                    m_next = m_t;
                    break;
                }
            }
        }
        let change = relative_change(m_next, m);
        ev = next;
        m = m_next;
        if change < controls.thresh_out {
            return Ok(LambdaFit {
                loglik: ev.loglik,
                objective: m,
                score: ev.score,
                beta,
                outer_iterations: r,
                converged: true,
                inner_converged: inner_ok,
            });
        }
        if best.as_ref().is_none_or(|b| m < b.objective) {
            best = Some(LambdaFit {
                beta: beta.clone(),
                loglik: ev.loglik,
                objective: m,
                score: ev.score.clone(),
                outer_iterations: r,
                converged: false,
                inner_converged: inner_ok,
            });
        }
    }
    let mut fit = best.expect("at least one outer iteration");
    fit.outer_iterations = controls.maxiter_out;
    fit.inner_converged = inner_ok;
    Ok(fit)
}

/// Intercept starting values: observed class frequencies through the link.
/// Frequencies are floored at `p_min` so empty classes stay finite.
pub fn starting_values(spec: &ModelSpec, data: &Dataset, p_min: f64) -> Result<Array1<f64>> {
    let layout = Layout::for_data(data, spec.form);
    let mut freq = data.class_frequencies().mapv(|f| f.max(p_min));
    let total = freq.sum();
    freq /= total;
    let k = layout.k;
    let b0 = g_composite(spec.link, spec.family, freq.slice(ndarray::s![..k]))?;
    let mut beta = Array1::zeros(layout.q());
    beta.slice_mut(ndarray::s![..k]).assign(&b0);
    Ok(beta)
}

/// Unpenalized maximum-likelihood fit of the intercepts and any unpenalized
/// non-intercept coefficients, with every penalized coefficient at zero.
pub fn null_fit(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    controls: &Controls,
) -> Result<LambdaFit> {
    let mut restricted = penalty.clone();
    for j in 0..restricted.len() {
        if restricted.factors[j] > 0.0 {
            restricted.frozen[j] = true;
        }
    }
    let start = starting_values(spec, data, controls.p_min)?;
    outer_loop(spec, data, &restricted, 0.0, start.view(), controls)
}

/// Entry argument of coordinate `j` at a point where `β` equals the anchor.
fn entry_argument(model: &QuadraticModel, j: usize) -> f64 {
    let q = CoordinateQuadratic {
        score: model.score[j],
        info_anchor: model.info_anchor[j],
        info_current: model.info_anchor[j],
        info_diag: model.info[[j, j]],
        beta: model.anchor[j],
    };
    (q.score + q.info_anchor - q.info_current + q.info_diag * q.beta) / model.n_star
}

const LAMBDA_MAX_MARGIN: f64 = 1e-9;

/// `λ_max` from an already computed null fit: the largest per-coefficient
/// entry threshold `|U_j| / (N* α c_j)` over penalized coefficients, with
/// `α` raised to `alpha_min` if smaller. The result is nudged up until no
/// coordinate update is nonzero in floating point, plus a relative margin of 1e-9.
pub fn lambda_max_from_null(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    null: &LambdaFit,
    controls: &Controls,
) -> Result<f64> {
    let alpha = penalty.alpha.max(penalty.alpha_min);
    let penalized: Vec<usize> = (0..penalty.len()).filter(|&j| penalty.is_penalized(j)).collect();
    if penalized.is_empty() {
        return Err(Error::NoPenalizedCoefficients);
    }
    let ev = evaluate(spec, null.beta.view(), data, Some(controls.p_min))?;
    let model = QuadraticModel::new(
        null.beta.clone(),
        ev.loglik,
        ev.score,
        ev.information.expect("information requested"),
        data.total_trials(),
    );
    let args: Vec<(f64, f64)> = penalized
        .iter()
        .map(|&j| {
            let arg = entry_argument(&model, j);
            let arg = if penalty.positive[j] { arg.max(0.0) } else { arg.abs() };
            (arg, alpha * penalty.factors[j])
        })
        .collect();
    let mut lam = args.iter().map(|(a, w)| a / w).fold(0.0, f64::max);
    while args.iter().any(|(a, w)| a - lam * w > 0.0) {
        lam = lam.next_up();
    }
    // Re-solving at λ_max moves the intercepts by rounding error, which can
    // push an entry argument past the threshold by a few ulps.
    Ok(lam * (1.0 + LAMBDA_MAX_MARGIN))
}

pub fn lambda_max(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    controls: &Controls,
) -> Result<f64> {
    let null = null_fit(spec, data, penalty, controls)?;
    lambda_max_from_null(spec, data, penalty, &null, controls)
}

/// `n_lambda` values log-uniform from `lambda_max` down to
/// `lambda_max * min_ratio`, optionally followed by zero.
pub fn lambda_sequence(
    lambda_max: f64,
    n_lambda: usize,
    min_ratio: f64,
    include_zero: bool,
) -> Result<Vec<f64>> {
    if n_lambda < 1 {
        return Err(Error::InvalidConfig("nLambda must be at least 1".into()));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lambdaMinRatio must lie in (0, 1), got {min_ratio}"
        )));
    }
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda max must be positive, got {lambda_max}")));
    }
    let mut out = Vec::with_capacity(n_lambda + 1);
    let span = min_ratio.ln();
    for m in 0..n_lambda {
        let v = if m == 0 {
            lambda_max
        } else if m + 1 == n_lambda {
            lambda_max * min_ratio
        } else {
            lambda_max * (span * m as f64 / (n_lambda - 1) as f64).exp()
        };
        out.push(v);
    }
    if include_zero {
        out.push(0.0);
    }
    Ok(out)
}

/// How the `λ` values of a path are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaSpec {
    Auto { n_lambda: usize, min_ratio: f64, include_zero: bool },
    Values(Vec<f64>),
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Auto { n_lambda: 20, min_ratio: 0.01, include_zero: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointStatus {
    /// Solved at this `λ`.
    Fitted,
    /// Copied from the previous point after the log-likelihood stopped changing.
    Reused,
    /// Copied from the last feasible point after the path left the feasible region.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub beta: Array1<f64>,
    pub loglik: f64,
    pub n_nonzero: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    pub status: PointStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    /// Relative log-likelihood change fell below `stop_thresh` after point `at`.
    StopThreshold { at: usize },
    /// Fitted probabilities became infeasible while solving point `at`.
    Infeasible { at: usize, observation: Option<usize> },
}

/// Solutions along a decreasing `λ` sequence, on the scale of the data the
/// path was fitted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPath {
    pub spec: ModelSpec,
    pub layout: Layout,
    pub points: Vec<PathPoint>,
    pub loglik_null: f64,
    pub n_obs: usize,
    pub termination: Termination,
}

impl FitPath {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.termination, Termination::Infeasible { .. })
    }
}

/// Log-likelihood of the intercept-only model, evaluated at the observed
/// class frequencies.
pub fn null_loglik(data: &Dataset) -> f64 {
    let counts = data.y().sum_axis(ndarray::Axis(0));
    let total = counts.sum();
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| c * (c / total).ln())
        .sum()
}

fn validate_inputs(spec: &ModelSpec, data: &Dataset, penalty: &PenaltyConfig, controls: &Controls) -> Result<Layout> {
    controls.validate()?;
    let layout = Layout::for_data(data, spec.form);
    if penalty.len() != layout.q() || penalty.positive.len() != layout.q() || penalty.frozen.len() != layout.q() {
        return Err(Error::DimensionMismatch(format!(
            "penalty has {} entries for {} coefficients",
            penalty.len(),
            layout.q()
        )));
    }
    Ok(layout)
}

/// Resolve a [`LambdaSpec`] against the data. Without penalized
/// coefficients the schedule is the single value 0.
pub fn lambda_schedule(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    lambdas: &LambdaSpec,
    controls: &Controls,
) -> Result<Vec<f64>> {
    match lambdas {
        LambdaSpec::Values(v) => checked_values(v),
        LambdaSpec::Auto { n_lambda, min_ratio, include_zero } => {
            let null = null_fit(spec, data, penalty, controls)?;
            auto_schedule(spec, data, penalty, &null, controls, *n_lambda, *min_ratio, *include_zero)
        }
    }
}

fn checked_values(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidConfig("lambdaVals is empty".into()));
    }
    if v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidConfig("lambdaVals must be finite and nonnegative".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig("lambdaVals contains duplicates".into()));
    }
    Ok(sorted)
}

#[allow(clippy::too_many_arguments)]
fn auto_schedule(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    null: &LambdaFit,
    controls: &Controls,
    n_lambda: usize,
    min_ratio: f64,
    include_zero: bool,
) -> Result<Vec<f64>> {
    match lambda_max_from_null(spec, data, penalty, null, controls) {
        Ok(lmax) if lmax > 0.0 => lambda_sequence(lmax, n_lambda, min_ratio, include_zero),
        Ok(_) | Err(Error::NoPenalizedCoefficients) => {
            lambda_sequence(1.0, n_lambda, min_ratio, false)?;
            Ok(vec![0.0])
        }
        Err(e) => Err(e),
    }
}

/// Fit the whole path with warm starts.
pub fn solution_path(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    lambdas: &LambdaSpec,
    controls: &Controls,
) -> Result<FitPath> {
    let layout = validate_inputs(spec, data, penalty, controls)?;
    let null = null_fit(spec, data, penalty, controls)?;
    let schedule = match lambdas {
        LambdaSpec::Values(v) => checked_values(v)?,
        LambdaSpec::Auto { n_lambda, min_ratio, include_zero } => {
            auto_schedule(spec, data, penalty, &null, controls, *n_lambda, *min_ratio, *include_zero)?
        }
    };
    path_from_schedule(spec, data, penalty, &schedule, controls, layout, null)
}

/// Fit a path along a schedule that is already sorted in decreasing order.
pub fn solution_path_with_schedule(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    schedule: &[f64],
    controls: &Controls,
) -> Result<FitPath> {
    let layout = validate_inputs(spec, data, penalty, controls)?;
    let schedule = checked_values(schedule)?;
    let null = null_fit(spec, data, penalty, controls)?;
    path_from_schedule(spec, data, penalty, &schedule, controls, layout, null)
}

fn path_from_schedule(
    spec: &ModelSpec,
    data: &Dataset,
    penalty: &PenaltyConfig,
    schedule: &[f64],
    controls: &Controls,
    layout: Layout,
    null: LambdaFit,
) -> Result<FitPath> {
    let mut points: Vec<PathPoint> = Vec::with_capacity(schedule.len());
    let mut termination = Termination::Completed;
    let mut warm = null.beta;
    for (m, &lambda) in schedule.iter().enumerate() {
        let fit = match outer_loop(spec, data, penalty, lambda, warm.view(), controls) {
            Ok(fit) => fit,
            Err(Error::Infeasible { observation }) if m > 0 => {
                termination = Termination::Infeasible { at: m, observation };
                break;
            }
            Err(e) => return Err(e),
        };
        let point = PathPoint {
            lambda,
            n_nonzero: fit.beta.iter().filter(|b| **b != 0.0).count(),
            beta: fit.beta,
            loglik: fit.loglik,
            outer_iterations: fit.outer_iterations,
            converged: fit.converged && fit.inner_converged,
            status: PointStatus::Fitted,
        };
        warm = point.beta.clone();
        let stalled = points
            .last()
            .is_some_and(|prev| relative_change(point.loglik, prev.loglik) < controls.stop_thresh);
        points.push(point);
        if stalled && m + 1 < schedule.len() {
            termination = Termination::StopThreshold { at: m };
            break;
        }
    }
    let fill = match termination {
        Termination::Completed => None,
        Termination::StopThreshold { .. } => Some(PointStatus::Reused),
        Termination::Infeasible { .. } => Some(PointStatus::Truncated),
    };
    if let Some(status) = fill {
        let last = points.last().expect("first point always fitted").clone();
        for &lambda in &schedule[points.len()..] {
            points.push(PathPoint { lambda, outer_iterations: 0, status, ..last.clone() });
        }
    }
    Ok(FitPath {
        spec: *spec,
        layout,
        points,
        loglik_null: null_loglik(data),
        n_obs: data.n_obs(),
        termination,
    })
}

/// Largest violation of the subgradient optimality conditions of `𝓜` at
/// `β`, given the score at `β`.
pub fn kkt_violation(
    beta: ArrayView1<f64>,
    score: ArrayView1<f64>,
    penalty: &PenaltyConfig,
    lambda: f64,
    n_star: f64,
) -> f64 {
    let a = penalty.alpha;
    let mut worst: f64 = 0.0;
    for j in 0..beta.len() {
        if penalty.frozen[j] {
            continue;
        }
        let g = score[j] / n_star;
        let c = penalty.factors[j];
        let b = beta[j];
        let v = if b != 0.0 {
            let sub = if b > 0.0 { a } else { -a };
            (g - lambda * c * (sub + (1.0 - a) * b)).abs()
        } else if penalty.positive[j] {
            (g - lambda * a * c).max(0.0)
        } else {
            (g.abs() - lambda * a * c).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Penalty of splitting coefficient row `β` into `ζ + δ_k`:
/// `ρ(α|ζ| + ½(1−α)ζ²) + Σ_k (α|δ_k| + ½(1−α)δ_k²)`.
pub fn split_penalty(beta_row: &[f64], zeta: f64, rho: f64, alpha: f64) -> f64 {
    let f = |v: f64| alpha * v.abs() + 0.5 * (1.0 - alpha) * v * v;
    rho * f(zeta) + beta_row.iter().map(|b| f(b - zeta)).sum::<f64>()
}

/// Penalty-minimizing decomposition `β_k = ζ + δ_k` of a semi-parallel
/// coefficient row. The derivative in `ζ` is piecewise linear with kinks at
/// 0 and at each `β_k`; when it vanishes on a whole interval (pure lasso) the
/// result is 0 if the interval contains it and the midpoint otherwise.
pub fn optimal_split(beta_row: &[f64], rho: f64, alpha: f64) -> (f64, Vec<f64>) {
    let zeta = split_root(beta_row, rho, alpha);
    (zeta, beta_row.iter().map(|b| b - zeta).collect())
}

fn split_root(beta_row: &[f64], rho: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return beta_row.iter().sum::<f64>() / (beta_row.len() as f64 + rho);
    }
    let mut knots: Vec<(f64, f64)> = beta_row.iter().map(|&b| (b, 1.0)).collect();
    if rho > 0.0 {
        knots.push((0.0, rho));
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
    for (t, w) in knots {
        match merged.last_mut() {
            Some(last) if last.0 == t => last.1 += w,
            _ => merged.push((t, w)),
        }
    }
    let total: f64 = merged.iter().map(|k| k.1).sum();
    let smooth = |z: f64| -> f64 { (1.0 - alpha) * merged.iter().map(|(t, w)| w * (z - t)).sum::<f64>() };
    // One-sided derivatives at knot i: weight strictly below minus weight strictly above, ± own weight.
    let mut below = 0.0;
    for (i, &(t, w)) in merged.iter().enumerate() {
        let above = total - below - w;
        let base = alpha * (below - above) + smooth(t);
        let left = base - alpha * w;
        let right = base + alpha * w;
        if left <= 0.0 && right >= 0.0 {
            if right == 0.0 && alpha == 1.0 && i + 1 < merged.len() {
                let t_next = merged[i + 1].0;
                return if t <= 0.0 && 0.0 <= t_next { 0.0 } else { 0.5 * (t + t_next) };
            }
            return t;
        }
        if right < 0.0 {
            if let Some(&(t_next, w_next)) = merged.get(i + 1) {
                let left_next = alpha * (below + w - (total - below - w - w_next)) + smooth(t_next)
                    - alpha * w_next;
                if left_next > 0.0 {
                    if alpha == 1.0 {
                        return 0.5 * (t + t_next);
                    }
                    // Linear in between with slope (1−α)·total.
                    return t - right / ((1.0 - alpha) * total);
                }
            }
        }
        below += w;
    }
    merged.last().map_or(0.0, |k| k.0)
}
