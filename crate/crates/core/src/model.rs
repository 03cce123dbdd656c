//! Data, coefficient layout, and the multinomial log-likelihood with its score
//! and Fisher information.
//!
//! Coefficients live in one flat vector `β = (b₀, b, B₁, …, B_K)`: `K`
//! intercepts, then the `P` parallel coefficients (if the form has them),
//! then one block of `P` coefficients per linear predictor (if the form has
//! nonparallel terms). The per-observation design matrices are never built;
//! every product with them goes through [`Layout`] and the augmented
//! covariate row `(1, x_i)`.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::{inverse_link, reverse_categories, Family, Link};

/// Covariates plus multinomial response counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array2<f64>,
    covariate_names: Vec<String>,
    levels: Vec<String>,
}

impl Dataset {
    /// `x` is `N × P` without an intercept column; `y` is `N × (K+1)` counts.
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        let (ny, cats) = y.dim();
        if n == 0 {
            return Err(Error::InvalidData("no observations".into()));
        }
        if n != ny {
            return Err(Error::DimensionMismatch(format!(
                "x has {n} rows but y has {ny}"
            )));
        }
        if cats < 2 {
            return Err(Error::InvalidData(
                "response needs at least two categories".into(),
            ));
        }
        if let Some(((i, j), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite covariate at row {}, column {}",
                i + 1,
                j + 1
            )));
        }
        for (i, row) in y.outer_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidData(format!(
                    "response counts at row {} must be finite and nonnegative",
                    i + 1
                )));
            }
            if !(row.sum() > 0.0) {
                return Err(Error::InvalidData(format!(
                    "response counts at row {} sum to zero",
                    i + 1
                )));
            }
        }
        Ok(Dataset {
            covariate_names: (1..=p).map(|j| format!("x{j}")).collect(),
            levels: (1..=cats).map(|j| j.to_string()).collect(),
            x,
            y,
        })
    }

    /// One-hot responses from 0-based class indices.
    pub fn from_classes(x: Array2<f64>, classes: &[usize], n_categories: usize) -> Result<Self> {
        let mut y = Array2::zeros((classes.len(), n_categories));
        for (i, &c) in classes.iter().enumerate() {
            if c >= n_categories {
                return Err(Error::InvalidData(format!(
                    "class {} at row {} exceeds {} categories",
                    c + 1,
                    i + 1,
                    n_categories
                )));
            }
            y[[i, c]] = 1.0;
        }
        Dataset::new(x, y)
    }

    pub fn with_names(mut self, covariates: Vec<String>, levels: Vec<String>) -> Result<Self> {
        if covariates.len() != self.n_covariates() || levels.len() != self.n_categories() {
            return Err(Error::DimensionMismatch(
                "name lists do not match data dimensions".into(),
            ));
        }
        self.covariate_names = covariates;
        self.levels = levels;
        Ok(self)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    /// `K + 1`.
    pub fn n_categories(&self) -> usize {
        self.y.ncols()
    }

    /// Number of linear predictors, `K`.
    pub fn k(&self) -> usize {
        self.y.ncols() - 1
    }

    /// `N*`, the total number of multinomial trials.
    pub fn total_trials(&self) -> f64 {
        self.y.sum()
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            covariate_names: self.covariate_names.clone(),
            levels: self.levels.clone(),
        }
    }

    /// The same data with the response categories in reverse order.
    pub fn reversed(&self) -> Dataset {
        let mut y = self.y.clone();
        for (mut row, orig) in y.outer_iter_mut().zip(self.y.outer_iter()) {
            row.assign(&reverse_categories(orig));
        }
        let mut levels = self.levels.clone();
        levels.reverse();
        Dataset {
            x: self.x.clone(),
            y,
            covariate_names: self.covariate_names.clone(),
            levels,
        }
    }

    /// Split every observation into unit-count rows with identical covariates.
    /// Counts must be integers.
    pub fn ungrouped(&self) -> Result<Dataset> {
        let mut rows = Vec::new();
        let mut classes = Vec::new();
        for (i, yrow) in self.y.outer_iter().enumerate() {
            for (c, &count) in yrow.iter().enumerate() {
                if count.fract() != 0.0 {
                    return Err(Error::InvalidData(format!(
                        "non-integer count at row {}",
                        i + 1
                    )));
                }
                for _ in 0..count as usize {
                    rows.push(i);
                    classes.push(c);
                }
            }
        }
        let x = self.x.select(Axis(0), &rows);
        Dataset::from_classes(x, &classes, self.n_categories())?
            .with_names(self.covariate_names.clone(), self.levels.clone())
    }

    pub(crate) fn with_x(&self, x: Array2<f64>) -> Dataset {
        Dataset {
            x,
            y: self.y.clone(),
            covariate_names: self.covariate_names.clone(),
            levels: self.levels.clone(),
        }
    }

    /// Empirical class frequencies over all trials.
    pub fn class_frequencies(&self) -> Array1<f64> {
        self.y.sum_axis(Axis(0)) / self.total_trials()
    }
}

/// Which coefficient blocks the linear predictors use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelForm {
    pub parallel: bool,
    pub nonparallel: bool,
}

impl ModelForm {
    pub const PARALLEL: ModelForm = ModelForm { parallel: true, nonparallel: false };
    pub const NONPARALLEL: ModelForm = ModelForm { parallel: false, nonparallel: true };
    pub const SEMI_PARALLEL: ModelForm = ModelForm { parallel: true, nonparallel: true };

    pub fn new(parallel: bool, nonparallel: bool) -> Result<Self> {
        if !parallel && !nonparallel {
            return Err(Error::InvalidConfig(
                "parallelTerms and nonparallelTerms cannot both be false".into(),
            ));
        }
        Ok(ModelForm { parallel, nonparallel })
    }

    pub fn name(&self) -> &'static str {
        match (self.parallel, self.nonparallel) {
            (true, false) => "parallel",
            (false, true) => "nonparallel",
            _ => "semi-parallel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub link: Link,
    pub family: Family,
    pub form: ModelForm,
}

/// Role of one entry of the flat coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Intercept(usize),
    Parallel(usize),
    Nonparallel { predictor: usize, covariate: usize },
}

impl Term {
    /// Column of the augmented covariate row `(1, x)` this term multiplies.
    pub fn augmented_column(self) -> usize {
        match self {
            Term::Intercept(_) => 0,
            Term::Parallel(c) | Term::Nonparallel { covariate: c, .. } => c + 1,
        }
    }

    /// The linear predictor the term enters, or `None` when it enters all of them.
    pub fn predictor(self) -> Option<usize> {
        match self {
            Term::Intercept(k) | Term::Nonparallel { predictor: k, .. } => Some(k),
            Term::Parallel(_) => None,
        }
    }

    pub fn covariate(self) -> Option<usize> {
        match self {
            Term::Intercept(_) => None,
            Term::Parallel(c) | Term::Nonparallel { covariate: c, .. } => Some(c),
        }
    }
}

/// Dimensions of the coefficient vector for a form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub k: usize,
    pub p: usize,
    pub form: ModelForm,
}

impl Layout {
    pub fn new(k: usize, p: usize, form: ModelForm) -> Self {
        Layout { k, p, form }
    }

    pub fn for_data(data: &Dataset, form: ModelForm) -> Self {
        Layout::new(data.k(), data.n_covariates(), form)
    }

    /// `Q`: `P+K`, `PK+K`, or `P(K+1)+K`.
    pub fn q(&self) -> usize {
        let mut q = self.k;
        if self.form.parallel {
            q += self.p;
        }
        if self.form.nonparallel {
            q += self.p * self.k;
        }
        q
    }

    fn nonparallel_start(&self) -> usize {
        self.k + if self.form.parallel { self.p } else { 0 }
    }

    pub fn term(&self, j: usize) -> Term {
        assert!(j < self.q(), "coefficient index {j} out of range");
        if j < self.k {
            return Term::Intercept(j);
        }
        if self.form.parallel && j < self.k + self.p {
            return Term::Parallel(j - self.k);
        }
        let r = j - self.nonparallel_start();
        Term::Nonparallel { predictor: r / self.p, covariate: r % self.p }
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        (0..self.q()).map(|j| self.term(j))
    }

    pub fn parallel_index(&self, c: usize) -> Option<usize> {
        self.form.parallel.then_some(self.k + c)
    }

    pub fn nonparallel_index(&self, predictor: usize, c: usize) -> Option<usize> {
        self.form
            .nonparallel
            .then(|| self.nonparallel_start() + predictor * self.p + c)
    }

    /// Coefficients on the scale of the unstandardized covariates.
    pub fn unscale(&self, beta: ArrayView1<f64>, scales: &[f64]) -> Array1<f64> {
        let mut out = beta.to_owned();
        for (j, v) in out.iter_mut().enumerate() {
            if let Some(c) = self.term(j).covariate() {
                *v /= scales[c];
            }
        }
        out
    }
}

/// Partitioned view of a coefficient vector `(b₀, b, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub layout: Layout,
    pub values: Array1<f64>,
}

impl Coefficients {
    pub fn new(layout: Layout, values: Array1<f64>) -> Result<Self> {
        if values.len() != layout.q() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                layout.q(),
                values.len()
            )));
        }
        Ok(Coefficients { layout, values })
    }

    pub fn zeros(layout: Layout) -> Self {
        Coefficients { layout, values: Array1::zeros(layout.q()) }
    }

    /// Assemble from blocks. `b` is required iff the form is parallel, `big_b`
    /// (`P × K`) iff it is nonparallel.
    pub fn from_parts(
        form: ModelForm,
        b0: ArrayView1<f64>,
        b: Option<ArrayView1<f64>>,
        big_b: Option<ndarray::ArrayView2<f64>>,
    ) -> Result<Self> {
        let k = b0.len();
        let p = b
            .map(|v| v.len())
            .or_else(|| big_b.map(|m| m.nrows()))
            .unwrap_or(0);
        let layout = Layout::new(k, p, form);
        let mut values = Array1::zeros(layout.q());
        values.slice_mut(s![..k]).assign(&b0);
        match (form.parallel, b) {
            (true, Some(b)) => values.slice_mut(s![k..k + p]).assign(&b),
            (false, None) => {}
            _ => return Err(Error::DimensionMismatch("parallel block does not match form".into())),
        }
        match (form.nonparallel, big_b) {
            (true, Some(m)) => {
                if m.dim() != (p, k) {
                    return Err(Error::DimensionMismatch("B must be P × K".into()));
                }
                for kk in 0..k {
                    for c in 0..p {
                        values[layout.nonparallel_index(kk, c).unwrap()] = m[[c, kk]];
                    }
                }
            }
            (false, None) => {}
            _ => {
                return Err(Error::DimensionMismatch(
                    "nonparallel block does not match form".into(),
                ))
            }
        }
        Ok(Coefficients { layout, values })
    }

    pub fn intercepts(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![..self.layout.k])
    }

    pub fn parallel(&self) -> Option<ArrayView1<'_, f64>> {
        let k = self.layout.k;
        self.layout
            .form
            .parallel
            .then(|| self.values.slice(s![k..k + self.layout.p]))
    }

    /// `B` as a `P × K` matrix.
    pub fn nonparallel(&self) -> Option<Array2<f64>> {
        let l = self.layout;
        l.form.nonparallel.then(|| {
            Array2::from_shape_fn((l.p, l.k), |(c, k)| {
                self.values[l.nonparallel_index(k, c).unwrap()]
            })
        })
    }

    /// `(P+1) × K` matrix with one column per linear predictor: the first row
    /// holds the intercepts, row `c+1` the total effect of covariate `c`.
    pub fn matrix(&self) -> Array2<f64> {
        let l = self.layout;
        let mut m = Array2::zeros((l.p + 1, l.k));
        for (j, term) in l.terms().enumerate() {
            let v = self.values[j];
            let row = term.augmented_column();
            match term.predictor() {
                Some(k) => m[[row, k]] += v,
                None => m.row_mut(row).mapv_inplace(|e| e + v),
            }
        }
        m
    }

    pub fn n_nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// `η_i = b₀ + (bᵀx_i)𝟙 + Bᵀx_i`.
pub fn linear_predictors(
    layout: &Layout,
    beta: ArrayView1<f64>,
    x_row: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    if beta.len() != layout.q() || x_row.len() != layout.p {
        return Err(Error::DimensionMismatch(format!(
            "β has {} entries (expected {}), x has {} (expected {})",
            beta.len(),
            layout.q(),
            x_row.len(),
            layout.p
        )));
    }
    Ok(eta_unchecked(layout, beta, x_row))
}

pub(crate) fn eta_unchecked(layout: &Layout, beta: ArrayView1<f64>, x: ArrayView1<f64>) -> Array1<f64> {
    let (k, p) = (layout.k, layout.p);
    let mut eta = beta.slice(s![..k]).to_owned();
    if layout.form.parallel {
        let shift = beta.slice(s![k..k + p]).dot(&x);
        eta.mapv_inplace(|e| e + shift);
    }
    if layout.form.nonparallel {
        let start = layout.nonparallel_start();
        for (kk, e) in eta.iter_mut().enumerate() {
            let block = beta.slice(s![start + kk * p..start + (kk + 1) * p]);
            *e += block.dot(&x);
        }
    }
    eta
}

/// Log-likelihood of one observation, dropping the multinomial coefficient.
/// `p` holds the first `K` class probabilities.
pub fn observation_loglik(p: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    let k = p.len();
    let last = 1.0 - p.sum();
    let mut ll = 0.0;
    for j in 0..=k {
        let count = y[j];
        if count > 0.0 {
            let pj = if j < k { p[j] } else { last };
            ll += count * pj.ln();
        }
    }
    ll
}

/// Log-likelihood, score, and (optionally) Fisher information at one `β`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loglik: f64,
    pub score: Array1<f64>,
    pub information: Option<Array2<f64>>,
}

fn check_beta(spec: &ModelSpec, beta: ArrayView1<f64>, data: &Dataset) -> Result<Layout> {
    let layout = Layout::for_data(data, spec.form);
    if beta.len() != layout.q() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} coefficients, got {}",
            layout.q(),
            beta.len()
        )));
    }
    Ok(layout)
}

pub fn log_likelihood(spec: &ModelSpec, beta: ArrayView1<f64>, data: &Dataset) -> Result<f64> {
    let layout = check_beta(spec, beta, data)?;
    let mut ll = 0.0;
    for (i, (x, y)) in data.x.outer_iter().zip(data.y.outer_iter()).enumerate() {
        let eta = eta_unchecked(&layout, beta, x);
        let p = crate::links::h_composite(spec.link, spec.family, eta.view())
            .map_err(|e| locate(e, i))?;
        ll += observation_loglik(p.view(), y);
    }
    Ok(ll)
}

pub fn score(spec: &ModelSpec, beta: ArrayView1<f64>, data: &Dataset) -> Result<Array1<f64>> {
    Ok(evaluate(spec, beta, data, None)?.score)
}

/// Expected information with every fitted probability floored at `p_min`.
pub fn fisher_information(
    spec: &ModelSpec,
    beta: ArrayView1<f64>,
    data: &Dataset,
    p_min: f64,
) -> Result<Array2<f64>> {
    Ok(evaluate(spec, beta, data, Some(p_min))?
        .information
        .expect("information requested"))
}

fn locate(e: Error, i: usize) -> Error {
    match e {
        Error::Infeasible { .. } => Error::Infeasible { observation: Some(i) },
        other => other,
    }
}

/// One pass over the data computing `ℓ`, `U`, and, when `p_min` is given, `𝓘`.
pub fn evaluate(
    spec: &ModelSpec,
    beta: ArrayView1<f64>,
    data: &Dataset,
    p_min: Option<f64>,
) -> Result<Evaluation> {
    let layout = check_beta(spec, beta, data)?;
    let (n, p) = data.x.dim();
    let k = layout.k;
    let mut xa = Array2::ones((n, p + 1));
    xa.slice_mut(s![.., 1..]).assign(&data.x);

    let mut loglik = 0.0;
    let mut v = Array2::zeros((n, k));
    // W_i flattened row-major, K² entries per observation.
    let mut w = Array2::zeros(if p_min.is_some() { (n, k * k) } else { (0, 0) });

    let mut grad = Array1::zeros(k);
    let mut sinv_j = Array2::zeros((k, k));
    for i in 0..n {
        let x = data.x.row(i);
        let y = data.y.row(i);
        let eta = eta_unchecked(&layout, beta, x);
        let inv = inverse_link(spec.link, spec.family, eta.view()).map_err(|e| locate(e, i))?;
        let prob = &inv.p;
        let last = 1.0 - prob.sum();
        loglik += observation_loglik(prob.view(), y);

        let tail = if y[k] > 0.0 { y[k] / last } else { 0.0 };
        for j in 0..k {
            let head = if y[j] > 0.0 { y[j] / prob[j] } else { 0.0 };
            grad[j] = head - tail;
        }
        v.row_mut(i).assign(&inv.jac.t().dot(&grad));

        if let Some(p_min) = p_min {
            // W = Jᵀ Σ⁻¹ J, Σ⁻¹ = n_i (diag(1/p) + 𝟙𝟙ᵀ / p_{K+1}).
            let n_i = y.sum();
            let last_c = last.max(p_min);
            let col_sums = inv.jac.sum_axis(Axis(0));
            for a in 0..k {
                let pa = prob[a].max(p_min);
                for b in 0..k {
                    sinv_j[[a, b]] = inv.jac[[a, b]] / pa;
                }
            }
            let wi = inv.jac.t().dot(&sinv_j);
            let mut row = w.row_mut(i);
            for a in 0..k {
                for b in 0..k {
                    row[a * k + b] = n_i * (wi[[a, b]] + col_sums[a] * col_sums[b] / last_c);
                }
            }
        }
    }

    // U_j = Σ_i x̃_{i,c(j)} Σ_{k ∈ E(j)} v_{ik}
    let s_mat = xa.t().dot(&v);
    let q = layout.q();
    let mut score = Array1::zeros(q);
    for (j, term) in layout.terms().enumerate() {
        let c = term.augmented_column();
        score[j] = match term.predictor() {
            Some(kk) => s_mat[[c, kk]],
            None => s_mat.row(c).sum(),
        };
    }

    let information = p_min.map(|_| assemble_information(&layout, &xa, &w));
    Ok(Evaluation { loglik, score, information })
}

/// `𝓘 = Σ_i X_iᵀ W_i X_i` via the weighted Gram matrices
/// `G_{ab} = Σ_i [W_i]_{ab} x̃_i x̃_iᵀ`.
fn assemble_information(layout: &Layout, xa: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let k = layout.k;
    let mut grams: Vec<Array2<f64>> = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            if b < a {
                // W_i is symmetric, so G_ab = G_ba.
                let g = grams[b * k + a].clone();
                grams.push(g);
                continue;
            }
            let col = w.column(a * k + b);
            let weighted = xa * &col.insert_axis(Axis(1));
            grams.push(xa.t().dot(&weighted));
        }
    }
    // Parallel terms enter every predictor: precompute the sums over one or both indices.
    let mut row_sum: Vec<Array2<f64>> = Vec::with_capacity(k);
    for a in 0..k {
        let mut acc = grams[a * k].clone();
        for b in 1..k {
            acc += &grams[a * k + b];
        }
        row_sum.push(acc);
    }
    let mut total = row_sum[0].clone();
    for a in 1..k {
        total += &row_sum[a];
    }

    let q = layout.q();
    let terms: Vec<Term> = layout.terms().collect();
    let mut info = Array2::zeros((q, q));
    for j in 0..q {
        let (cj, pj) = (terms[j].augmented_column(), terms[j].predictor());
        for l in j..q {
            let (cl, pl) = (terms[l].augmented_column(), terms[l].predictor());
            let val = match (pj, pl) {
                (Some(a), Some(b)) => grams[a * k + b][[cj, cl]],
                (Some(a), None) => row_sum[a][[cj, cl]],
                (None, Some(b)) => row_sum[b][[cl, cj]],
                (None, None) => total[[cj, cl]],
            };
            info[[j, l]] = val;
            info[[l, j]] = val;
        }
    }
    info
}

/// Column scaling applied before fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub data: Dataset,
    /// Population standard deviation of each column, or 1 for constant columns.
    pub scales: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

/// Divide each covariate by its population standard deviation over trials
/// (row `i` counts `n_i` times). Constant columns keep scale 1 and are
/// flagged. No centering.
pub fn standardize(data: &Dataset) -> Standardized {
    let zero_variance = zero_variance_columns(data);
    let weights = data.y.sum_axis(Axis(1));
    let total = weights.sum();
    let mut scales = Vec::with_capacity(data.n_covariates());
    let mut x = data.x.clone();
    for (c, mut col) in x.columns_mut().into_iter().enumerate() {
        if zero_variance[c] {
            scales.push(1.0);
            continue;
        }
        let mean = col.dot(&weights) / total;
        let var = col
            .iter()
            .zip(&weights)
            .map(|(v, w)| w * (v - mean).powi(2))
            .sum::<f64>()
            / total;
        let sd = var.sqrt();
        col.mapv_inplace(|v| v / sd);
        scales.push(sd);
    }
    Standardized { data: data.with_x(x), scales, zero_variance }
}

/// Columns whose values are all identical.
pub fn zero_variance_columns(data: &Dataset) -> Vec<bool> {
    data.x
        .columns()
        .into_iter()
        .map(|col| {
            let first = col[0];
            col.iter().all(|&v| v == first)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::links::FamilyKind;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn spec(form: ModelForm) -> ModelSpec {
        ModelSpec {
            link: Link::Logit,
            family: Family::forward(FamilyKind::Sratio),
            form,
        }
    }

    #[test]
    fn q_per_form() {
        assert_eq!(Layout::new(2, 3, ModelForm::PARALLEL).q(), 5);
        assert_eq!(Layout::new(2, 3, ModelForm::NONPARALLEL).q(), 8);
        assert_eq!(Layout::new(2, 3, ModelForm::SEMI_PARALLEL).q(), 11);
        assert!(ModelForm::new(false, false).is_err());
    }

    #[test]
    fn linear_predictor_examples() {
        let par = Coefficients::from_parts(
            ModelForm::PARALLEL,
            array![-0.5, 0.0].view(),
            Some(array![1.0].view()),
            None,
        )
        .unwrap();
        let eta = linear_predictors(&par.layout, par.values.view(), array![2.0].view()).unwrap();
        assert_eq!(eta, array![1.5, 2.0]);

        let np = Coefficients::from_parts(
            ModelForm::NONPARALLEL,
            array![0.0, 0.0].view(),
            None,
            Some(array![[1.0, -1.0]].view()),
        )
        .unwrap();
        let eta = linear_predictors(&np.layout, np.values.view(), array![3.0].view()).unwrap();
        assert_eq!(eta, array![3.0, -3.0]);

        let semi = Coefficients::from_parts(
            ModelForm::SEMI_PARALLEL,
            array![0.0, 0.0].view(),
            Some(array![1.0].view()),
            Some(array![[0.5, -0.5]].view()),
        )
        .unwrap();
        let eta = linear_predictors(&semi.layout, semi.values.view(), array![2.0].view()).unwrap();
        assert_eq!(eta, array![3.0, 1.0]);
        assert!(linear_predictors(&semi.layout, semi.values.view(), array![2.0, 1.0].view()).is_err());
    }

    #[test]
    fn coefficient_matrix_orientation() {
        let semi = Coefficients::from_parts(
            ModelForm::SEMI_PARALLEL,
            array![-1.0, 1.0].view(),
            Some(array![1.0, 2.0].view()),
            Some(array![[0.5, -0.5], [0.0, 0.0]].view()),
        )
        .unwrap();
        let m = semi.matrix();
        assert_eq!(m, array![[-1.0, 1.0], [1.5, 0.5], [2.0, 2.0]]);
        assert_eq!(semi.nonparallel().unwrap(), array![[0.5, -0.5], [0.0, 0.0]]);
        assert_eq!(semi.n_nonzero(), 6);
    }

    #[test]
    fn single_observation_loglik() {
        // Intercepts giving p = (0.5, 0.25) under forward sratio logit: δ = (0.5, 0.5).
        let data = Dataset::new(Array2::zeros((1, 0)), array![[1.0, 0.0, 0.0]]).unwrap();
        let ll = log_likelihood(&spec(ModelForm::PARALLEL), array![0.0, 0.0].view(), &data).unwrap();
        assert_abs_diff_eq!(ll, 0.5f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn grouped_equals_ungrouped() {
        let x = array![[0.3], [-1.2]];
        let y = array![[1.0, 1.0, 0.0], [0.0, 2.0, 1.0]];
        let data = Dataset::new(x, y).unwrap();
        let flat = data.ungrouped().unwrap();
        assert_eq!(flat.n_obs(), 5);
        let sp = spec(ModelForm::SEMI_PARALLEL);
        let beta = array![-0.2, 0.4, 0.7, 0.1, -0.3];
        let a = evaluate(&sp, beta.view(), &data, Some(1e-8)).unwrap();
        let b = evaluate(&sp, beta.view(), &flat, Some(1e-8)).unwrap();
        assert_abs_diff_eq!(a.loglik, b.loglik, epsilon = 1e-12);
        assert_abs_diff_eq!(a.score, b.score, epsilon = 1e-12);
        assert_abs_diff_eq!(a.information.unwrap(), b.information.unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn saturated_intercepts_reproduce_frequencies() {
        // counts (10, 5, 5): frequencies (0.5, 0.25, 0.25).
        let data = Dataset::new(Array2::zeros((1, 0)), array![[10.0, 5.0, 5.0]]).unwrap();
        let sp = ModelSpec {
            link: Link::Probit,
            family: Family::forward(FamilyKind::Acat),
            form: ModelForm::PARALLEL,
        };
        let b0 = crate::links::g_composite(sp.link, sp.family, array![0.5, 0.25].view()).unwrap();
        let ev = evaluate(&sp, b0.view(), &data, None).unwrap();
        let expected = 10.0 * 0.5f64.ln() + 10.0 * 0.25f64.ln();
        assert_abs_diff_eq!(ev.loglik, expected, epsilon = 1e-10);
        assert_abs_diff_eq!(ev.score, array![0.0, 0.0], epsilon = 1e-8);
    }

    #[test]
    fn information_symmetric_psd_and_additive() {
        let x = array![[0.3, 1.0], [-1.2, 0.5], [0.8, -0.4]];
        let y = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let doubled = Dataset::new(
            ndarray::concatenate![Axis(0), x, x],
            ndarray::concatenate![Axis(0), y, y],
        )
        .unwrap();
        let sp = spec(ModelForm::SEMI_PARALLEL);
        let beta = Array1::from_shape_fn(8, |j| 0.1 * j as f64 - 0.3);
        let info = fisher_information(&sp, beta.view(), &data, 1e-8).unwrap();
        let info2 = fisher_information(&sp, beta.view(), &doubled, 1e-8).unwrap();
        assert_abs_diff_eq!(info, info.t().to_owned(), epsilon = 1e-12);
        assert_abs_diff_eq!(info2, &info * 2.0, epsilon = 1e-12);
        // PSD: vᵀ𝓘v ≥ 0 on a spread of directions.
        for seed in 0..50 {
            let v = Array1::from_shape_fn(8, |j| ((seed * 7 + j * 13) % 11) as f64 - 5.0);
            assert!(v.dot(&info.dot(&v)) >= -1e-10);
        }
    }

    #[test]
    fn binomial_logistic_reduction() {
        // K = 1, logit: U = Σ x̃_i (y_i1 - n_i p_i), 𝓘 = Σ n_i p(1-p) x̃ x̃ᵀ.
        let x = array![[0.5], [-1.0], [2.0], [0.1]];
        let y = array![[1.0, 2.0], [3.0, 0.0], [0.0, 1.0], [2.0, 2.0]];
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let sp = ModelSpec {
            link: Link::Logit,
            family: Family::forward(FamilyKind::Cumulative),
            form: ModelForm::PARALLEL,
        };
        let beta = array![0.2, -0.7];
        let ev = evaluate(&sp, beta.view(), &data, Some(1e-12)).unwrap();
        let mut u = Array1::<f64>::zeros(2);
        let mut info = Array2::<f64>::zeros((2, 2));
        for i in 0..4 {
            let xt = array![1.0, x[[i, 0]]];
            let p = 1.0 / (1.0 + (-(beta[0] + beta[1] * x[[i, 0]])).exp());
            let n = y.row(i).sum();
            u = u + &xt * (y[[i, 0]] - n * p);
            let outer = Array2::from_shape_fn((2, 2), |(a, b)| xt[a] * xt[b]);
            info = info + outer * (n * p * (1.0 - p));
        }
        assert_abs_diff_eq!(ev.score, u, epsilon = 1e-12);
        assert_abs_diff_eq!(ev.information.unwrap(), info, epsilon = 1e-12);
    }

    #[test]
    fn standardize_examples() {
        let x = array![[1.0, 3.0, 2.0], [-1.0, 3.0, 4.0], [1.0, 3.0, 6.0], [-1.0, 3.0, 8.0]];
        let y = Array2::from_shape_fn((4, 2), |(i, j)| if i % 2 == j { 1.0 } else { 0.0 });
        let st = standardize(&Dataset::new(x.clone(), y).unwrap());
        assert_eq!(st.scales[0], 1.0);
        assert_eq!(st.data.x().column(0), x.column(0));
        assert_eq!(st.scales[1], 1.0);
        assert_eq!(st.zero_variance, vec![false, true, false]);
        assert_abs_diff_eq!(st.scales[2], 5.0f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn standardize_weights_rows_by_trials() {
        let x = array![[1.0], [4.0]];
        let data = Dataset::new(x, array![[2.0, 1.0], [0.0, 1.0]]).unwrap();
        let a = standardize(&data);
        let b = standardize(&data.ungrouped().unwrap());
        assert_abs_diff_eq!(a.scales[0], b.scales[0], epsilon = 1e-15);
        assert_abs_diff_eq!(a.scales[0], 3.0f64.sqrt() * 0.75, epsilon = 1e-14);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(array![[1.0]], array![[0.0, 0.0]]).is_err());
        assert!(Dataset::new(array![[f64::NAN]], array![[1.0, 0.0]]).is_err());
        assert!(Dataset::new(array![[1.0]], array![[1.0]]).is_err());
        // Non-integer counts are fine.
        assert!(Dataset::new(array![[1.0]], array![[0.5, 1.5]]).is_ok());
    }
}
