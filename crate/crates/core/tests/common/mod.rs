//! Reference implementations used only by tests. Nothing here calls the
//! library's family recursions, score, information, or solver.

#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1};
use ordnet::links::{Family, FamilyKind, Link};
use ordnet::model::{Dataset, Layout, ModelForm, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn all_families() -> Vec<Family> {
    FamilyKind::ALL
        .iter()
        .flat_map(|&k| [Family::forward(k), Family::backward(k)])
        .collect()
}

pub const FORMS: [ModelForm; 3] = [ModelForm::PARALLEL, ModelForm::NONPARALLEL, ModelForm::SEMI_PARALLEL];

/// Textbook inverse links.
pub fn cdf(link: Link, eta: f64) -> f64 {
    match link {
        Link::Logit => 1.0 / (1.0 + (-eta).exp()),
        Link::Probit => Normal::standard().cdf(eta),
        Link::Cloglog => 1.0 - (-(eta.exp())).exp(),
        Link::Cauchit => 0.5 + eta.atan() / std::f64::consts::PI,
    }
}

/// All `K + 1` class probabilities straight from the conditional-probability
/// definitions of each family. Cumulative probabilities that are not
/// monotone give negative entries.
pub fn oracle_probs(link: Link, family: Family, eta: ArrayView1<f64>) -> Vec<f64> {
    let d: Vec<f64> = eta.iter().map(|&e| cdf(link, e)).collect();
    let k = d.len();
    let mut p = vec![0.0; k + 1];
    match (family.kind, family.reverse) {
        // δ_j = P(Y ≤ j)
        (FamilyKind::Cumulative, false) => {
            for j in 0..=k {
                let hi = if j < k { d[j] } else { 1.0 };
                let lo = if j > 0 { d[j - 1] } else { 0.0 };
                p[j] = hi - lo;
            }
        }
        // δ_j = P(Y ≥ j + 1)
        (FamilyKind::Cumulative, true) => {
            for j in 0..=k {
                let hi = if j > 0 { d[j - 1] } else { 1.0 };
                let lo = if j < k { d[j] } else { 0.0 };
                p[j] = hi - lo;
            }
        }
        // δ_j = P(Y = j | Y ≥ j)
        (FamilyKind::Sratio, false) => {
            let mut surv = 1.0;
            for j in 0..k {
                p[j] = d[j] * surv;
                surv *= 1.0 - d[j];
            }
            p[k] = surv;
        }
        // δ_j = P(Y = j + 1 | Y ≤ j + 1)
        (FamilyKind::Sratio, true) => {
            let mut surv = 1.0;
            for j in (0..k).rev() {
                p[j + 1] = d[j] * surv;
                surv *= 1.0 - d[j];
            }
            p[0] = surv;
        }
        // δ_j = P(Y > j | Y ≥ j)
        (FamilyKind::Cratio, false) => {
            let mut surv = 1.0;
            for j in 0..k {
                p[j] = (1.0 - d[j]) * surv;
                surv *= d[j];
            }
            p[k] = surv;
        }
        // δ_j = P(Y < j + 1 | Y ≤ j + 1)
        (FamilyKind::Cratio, true) => {
            let mut surv = 1.0;
            for j in (0..k).rev() {
                p[j + 1] = (1.0 - d[j]) * surv;
                surv *= d[j];
            }
            p[0] = surv;
        }
        // δ_j = P(Y = j + 1 | j ≤ Y ≤ j + 1)
        (FamilyKind::Acat, false) => {
            let mut w = vec![1.0; k + 1];
            for j in 0..k {
                w[j + 1] = w[j] * d[j] / (1.0 - d[j]);
            }
            let s: f64 = w.iter().sum();
            for j in 0..=k {
                p[j] = w[j] / s;
            }
        }
        // δ_j = P(Y = j | j ≤ Y ≤ j + 1)
        (FamilyKind::Acat, true) => {
            let mut w = vec![1.0; k + 1];
            for j in 0..k {
                w[j + 1] = w[j] * (1.0 - d[j]) / d[j];
            }
            let s: f64 = w.iter().sum();
            for j in 0..=k {
                p[j] = w[j] / s;
            }
        }
    }
    p
}

/// Linear predictors from the block definition, written out directly.
pub fn oracle_eta(layout: &Layout, beta: &[f64], x: ArrayView1<f64>) -> Vec<f64> {
    let (k, p) = (layout.k, layout.p);
    let mut eta: Vec<f64> = beta[..k].to_vec();
    let mut pos = k;
    if layout.form.parallel {
        let s: f64 = (0..p).map(|c| beta[pos + c] * x[c]).sum();
        eta.iter_mut().for_each(|e| *e += s);
        pos += p;
    }
    if layout.form.nonparallel {
        for (j, e) in eta.iter_mut().enumerate() {
            *e += (0..p).map(|c| beta[pos + j * p + c] * x[c]).sum::<f64>();
        }
    }
    eta
}

/// Log-likelihood without the multinomial coefficient; `−∞` if an observed
/// class has nonpositive probability.
pub fn oracle_loglik(spec: &ModelSpec, beta: &[f64], data: &Dataset) -> f64 {
    let layout = Layout::for_data(data, spec.form);
    let mut ll = 0.0;
    for (x, y) in data.x().outer_iter().zip(data.y().outer_iter()) {
        let eta = oracle_eta(&layout, beta, x);
        let p = oracle_probs(spec.link, spec.family, Array1::from(eta).view());
        for (pj, yj) in p.iter().zip(y.iter()) {
            if *yj > 0.0 {
                if *pj <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                ll += yj * pj.ln();
            }
        }
    }
    ll
}

pub fn oracle_penalty(beta: &[f64], factors: &[f64], alpha: f64) -> f64 {
    beta.iter()
        .zip(factors)
        .map(|(b, c)| c * (alpha * b.abs() + 0.5 * (1.0 - alpha) * b * b))
        .sum()
}

pub fn oracle_objective(spec: &ModelSpec, beta: &[f64], data: &Dataset, factors: &[f64], alpha: f64, lambda: f64) -> f64 {
    -oracle_loglik(spec, beta, data) / data.total_trials() + lambda * oracle_penalty(beta, factors, alpha)
}

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let up = f(&xp);
        xp[j] = x[j] - step;
        let down = f(&xp);
        xp[j] = x[j];
        g[j] = (up - down) / (2.0 * step);
    }
    g
}

/// Central-difference Jacobian of a vector map, `[J]_{mn} = ∂f_m/∂x_n`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Array2<f64> {
    let m = f(x).len();
    let mut jac = Array2::zeros((m, x.len()));
    let mut xp = x.to_vec();
    for n in 0..x.len() {
        let step = h * x[n].abs().max(1.0);
        xp[n] = x[n] + step;
        let up = f(&xp);
        xp[n] = x[n] - step;
        let down = f(&xp);
        xp[n] = x[n];
        for r in 0..m {
            jac[[r, n]] = (up[r] - down[r]) / (2.0 * step);
        }
    }
    jac
}

/// Cholesky solve of `a x = b`; `None` unless `a` is positive definite.
fn cholesky_solve(a: &Array2<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum();
            if i == j {
                let d = a[[i, i]] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[[i, i]] = d.sqrt();
            } else {
                l[[i, j]] = (a[[i, j]] - s) / l[[j, j]];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[[i, k]] * y[k]).sum::<f64>()) / l[[i, i]];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[[k, i]] * x[k]).sum::<f64>()) / l[[i, i]];
    }
    Some(x)
}

/// Unpenalized MLE by Levenberg-damped Newton iterations on
/// finite-difference derivatives of the oracle log-likelihood.
pub fn newton_mle(spec: &ModelSpec, data: &Dataset, start: &[f64]) -> Vec<f64> {
    let f = |b: &[f64]| oracle_loglik(spec, b, data);
    let mut beta = start.to_vec();
    let mut mu = 0.0;
    for _ in 0..500 {
        let g = fd_gradient(f, &beta, 1e-6);
        if g.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-8 {
            break;
        }
        let hess = fd_jacobian(|b| fd_gradient(f, b, 1e-6), &beta, 1e-4);
        let neg = (&hess + &hess.t()).mapv(|v| -0.5 * v);
        let current = f(&beta);
        let mut improved = false;
        for _ in 0..60 {
            let mut shifted = neg.clone();
            shifted.diag_mut().mapv_inplace(|v| v + mu);
            if let Some(step) = cholesky_solve(&shifted, &g) {
                let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
                if f(&cand) > current {
                    beta = cand;
                    improved = true;
                    mu *= 0.25;
                    break;
                }
            }
            mu = (mu * 4.0).max(1e-6);
        }
        if !improved {
            break;
        }
    }
    beta
}

/// Accelerated proximal gradient (FISTA) with backtracking and adaptive
/// restart for the penalized objective. The smooth part's gradient comes from
/// finite differences of the oracle log-likelihood.
pub fn fista(
    spec: &ModelSpec,
    data: &Dataset,
    factors: &[f64],
    positive: &[bool],
    alpha: f64,
    lambda: f64,
    start: &[f64],
    iterations: usize,
) -> (Vec<f64>, f64) {
    let n_star = data.total_trials();
    let smooth = |b: &[f64]| {
        -oracle_loglik(spec, b, data) / n_star
            + lambda * 0.5 * (1.0 - alpha) * b.iter().zip(factors).map(|(v, c)| c * v * v).sum::<f64>()
    };
    let prox = |v: &[f64], step: f64| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(j, &x)| {
                let t = step * lambda * alpha * factors[j];
                if positive[j] {
                    (x - t).max(0.0)
                } else if x > t {
                    x - t
                } else if x < -t {
                    x + t
                } else {
                    0.0
                }
            })
            .collect()
    };
    let full = |b: &[f64]| smooth(b) + lambda * alpha * b.iter().zip(factors).map(|(v, c)| c * v.abs()).sum::<f64>();

    let mut x = start.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut step = 1.0f64;
    let mut fx = full(&x);
    for _ in 0..iterations {
        let fy = smooth(&y);
        let g = fd_gradient(smooth, &y, 1e-7);
        let x_new = loop {
            let cand = prox(&y.iter().zip(&g).map(|(a, b)| a - step * b).collect::<Vec<_>>(), step);
            let d: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let quad = fy + d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() + d.iter().map(|v| v * v).sum::<f64>() / (2.0 * step);
            let fc = smooth(&cand);
            if fc.is_finite() && fc <= quad + 1e-15 {
                break cand;
            }
            step *= 0.5;
        };
        let f_new = full(&x_new);
        if f_new > fx {
            // Restart momentum.
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_new * (a - b))
            .collect();
        let done = (fx - f_new).abs() < 1e-16;
        x = x_new;
        fx = f_new;
        t = t_new;
        step *= 1.5;
        if done {
            break;
        }
    }
    (x, fx)
}

/// Ordinal data from a random nonparallel model of the given family, feasible
/// for every family (linear predictors share slopes).
pub fn random_dataset(rng: &mut impl Rng, n: usize, p: usize, k: usize, trials: usize) -> Dataset {
    let mut x = Array2::zeros((n, p));
    let mut y = Array2::zeros((n, k + 1));
    let slopes: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    for i in 0..n {
        for c in 0..p {
            x[[i, c]] = rng.random_range(-1.5..1.5);
        }
        let lin: f64 = (0..p).map(|c| slopes[c] * x[[i, c]]).sum();
        for _ in 0..trials {
            // Latent logistic threshold model.
            let u: f64 = rng.random_range(1e-9..1.0);
            let z = lin + (u / (1.0 - u)).ln();
            let cut = |j: usize| -1.0 + 2.0 * j as f64 / k as f64;
            let class = (0..k).find(|&j| z < cut(j)).unwrap_or(k);
            y[[i, class]] += 1.0;
        }
    }
    Dataset::new(x, y).expect("valid random data")
}

/// Small, feasible coefficient vector for any family: intercepts ordered in
/// the cumulative direction and slopes too small to reorder the linear
/// predictors on `x ∈ [−1.5, 1.5]`.
pub fn random_beta(rng: &mut impl Rng, layout: &Layout, family: Family) -> Vec<f64> {
    let k = layout.k;
    let sign = if family.reverse { -1.0 } else { 1.0 };
    let mut beta = Vec::with_capacity(layout.q());
    for j in 0..k {
        beta.push(sign * (-1.0 + 2.0 * j as f64 / k as f64) + rng.random_range(-0.05..0.05));
    }
    let scale = 0.3 / (layout.p.max(1) as f64 * (1 + k) as f64);
    while beta.len() < layout.q() {
        beta.push(rng.random_range(-scale..scale));
    }
    beta
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
