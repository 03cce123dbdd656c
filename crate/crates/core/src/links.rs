//! Elementwise link functions and multinomial-ordinal (MO) family maps.
//!
//! A model's multivariate link is the composite `g = g_el ∘ g_mo`: the family
//! map `g_mo` takes the `K` free class probabilities to `K` cumulative or
//! conditional probabilities `δ`, and the elementwise link maps each `δ_j` to
//! the real line. Inverses and Jacobians are composed the same way.
//!
//! Only the forward form of each family is implemented directly. A backward
//! family is the forward family applied to the categories in reverse order,
//! with the linear predictors relabelled so that predictor `j` of the backward
//! model is the complement-side counterpart of predictor `j` of the forward one.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Elementwise inverse-link outputs are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`
/// before the family recursions, which divide by tail probabilities.
pub const PROB_CLAMP: f64 = 1e-15;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logit,
    Probit,
    Cloglog,
    Cauchit,
}

impl Link {
    pub const ALL: [Link; 4] = [Link::Logit, Link::Probit, Link::Cloglog, Link::Cauchit];

    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Probit => "probit",
            Link::Cloglog => "cloglog",
            Link::Cauchit => "cauchit",
        }
    }

    /// `g*(d)`, mapping `(0, 1)` to the real line.
    pub fn link(self, d: f64) -> f64 {
        match self {
            Link::Logit => d.ln() - (-d).ln_1p(),
            Link::Probit => {
                // erfc_inv is only good to ~1e-10; one Newton step restores full precision.
                let z = -SQRT_2 * erfc_inv(2.0 * d);
                let dens = INV_SQRT_2PI * (-0.5 * z * z).exp();
                if dens > 0.0 {
                    z - (0.5 * erfc(-z * FRAC_1_SQRT_2) - d) / dens
                } else {
                    z
                }
            }
            Link::Cloglog => (-(-d).ln_1p()).ln(),
            Link::Cauchit => {
                if d < 0.5 {
                    -1.0 / (PI * d).tan()
                } else {
                    1.0 / (PI * (1.0 - d)).tan()
                }
            }
        }
    }

    /// `h*(η)`, the inverse of [`Link::link`].
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
            Link::Probit => 0.5 * erfc(-eta * FRAC_1_SQRT_2),
            Link::Cloglog => -(-eta.exp()).exp_m1(),
            Link::Cauchit => {
                if eta < 0.0 {
                    -(1.0 / eta).atan() / PI
                } else if eta > 0.0 {
                    1.0 - (1.0 / eta).atan() / PI
                } else {
                    0.5
                }
            }
        }
    }

    /// `h*'(η)`.
    pub fn inverse_deriv(self, eta: f64) -> f64 {
        match self {
            Link::Logit => {
                let e = (-eta.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Link::Probit => INV_SQRT_2PI * (-0.5 * eta * eta).exp(),
            Link::Cloglog => (eta - eta.exp()).exp(),
            Link::Cauchit => 1.0 / (PI * (1.0 + eta * eta)),
        }
    }

    /// Whether `g*(d) = -g*(1 - d)`.
    pub fn is_symmetric(self) -> bool {
        matches!(self, Link::Logit | Link::Probit | Link::Cauchit)
    }
}

impl std::str::FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            "cloglog" => Ok(Link::Cloglog),
            "cauchit" => Ok(Link::Cauchit),
            other => Err(Error::InvalidConfig(format!("unknown link '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Cumulative,
    Sratio,
    Cratio,
    Acat,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::Cumulative,
        FamilyKind::Sratio,
        FamilyKind::Cratio,
        FamilyKind::Acat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Cumulative => "cumulative",
            FamilyKind::Sratio => "sratio",
            FamilyKind::Cratio => "cratio",
            FamilyKind::Acat => "acat",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cumulative" => Ok(FamilyKind::Cumulative),
            "sratio" => Ok(FamilyKind::Sratio),
            "cratio" => Ok(FamilyKind::Cratio),
            "acat" => Ok(FamilyKind::Acat),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }
}

/// A multinomial-ordinal family together with its direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub reverse: bool,
}

impl Family {
    pub fn forward(kind: FamilyKind) -> Self {
        Family { kind, reverse: false }
    }

    pub fn backward(kind: FamilyKind) -> Self {
        Family { kind, reverse: true }
    }

    /// Label of conditional probability `j` (0-based), e.g. `P[Y<=1]`.
    pub fn delta_label(&self, j: usize) -> String {
        let j = j + 1;
        let n = j + 1;
        match (self.kind, self.reverse) {
            (FamilyKind::Cumulative, false) => format!("P[Y<={j}]"),
            (FamilyKind::Cumulative, true) => format!("P[Y>={n}]"),
            (FamilyKind::Sratio, false) => format!("P[Y={j}|Y>={j}]"),
            (FamilyKind::Sratio, true) => format!("P[Y={n}|Y<={n}]"),
            (FamilyKind::Cratio, false) => format!("P[Y>{j}|Y>={j}]"),
            (FamilyKind::Cratio, true) => format!("P[Y<{n}|Y<={n}]"),
            (FamilyKind::Acat, false) => format!("P[Y={n}|{j}<=Y<={n}]"),
            (FamilyKind::Acat, true) => format!("P[Y={j}|{j}<=Y<={n}]"),
        }
    }

    /// `δ = g_mo(p)`.
    pub fn g_mo(&self, p: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_simplex(p)?;
        let p = p.to_vec();
        let delta = if self.reverse {
            let mut d = g_forward(self.kind, &reverse_probs(&p));
            d.reverse();
            d
        } else {
            g_forward(self.kind, &p)
        };
        Ok(Array1::from(delta))
    }

    /// `p = h_mo(δ)`. Fails for the cumulative family when `δ` is not
    /// strictly monotone in the family's direction.
    pub fn h_mo(&self, delta: ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(Array1::from(self.h_mo_vec(&delta.to_vec(), true)?))
    }

    /// `D h_mo(δ)`, with `[D]_{mn} = ∂p_m/∂δ_n`.
    pub fn jacobian_h_mo(&self, delta: ArrayView1<f64>) -> Result<Array2<f64>> {
        let delta = delta.to_vec();
        // Validate feasibility the same way h_mo does.
        self.h_mo_vec(&delta, true)?;
        Ok(self.jacobian_vec(&delta))
    }

    fn h_mo_vec(&self, delta: &[f64], check: bool) -> Result<Vec<f64>> {
        if self.reverse {
            let mut d = delta.to_vec();
            d.reverse();
            let q = h_forward(self.kind, &d, check)?;
            Ok(reverse_probs(&q))
        } else {
            h_forward(self.kind, delta, check)
        }
    }

    fn jacobian_vec(&self, delta: &[f64]) -> Array2<f64> {
        if !self.reverse {
            return jacobian_forward(self.kind, delta);
        }
        let k = delta.len();
        let mut d = delta.to_vec();
        d.reverse();
        let jf = jacobian_forward(self.kind, &d);
        // p = R_c q(R_v δ): p_0 = 1 - Σq, p_j = q_{K-j}; columns follow δ reversal.
        let mut jac = Array2::zeros((k, k));
        for n in 0..k {
            let col = k - 1 - n;
            jac[[0, n]] = -(0..k).map(|m| jf[[m, col]]).sum::<f64>();
            for j in 1..k {
                jac[[j, n]] = jf[[k - j, col]];
            }
        }
        jac
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let dir = if self.reverse { "backward" } else { "forward" };
        write!(f, "{} ({dir})", self.kind.name())
    }
}

/// Reverse the order of the `K + 1` categories of a `K`-vector of free
/// probabilities; the returned vector leaves out the new last category.
pub fn reverse_probs(p: &[f64]) -> Vec<f64> {
    let k = p.len();
    let last = 1.0 - p.iter().sum::<f64>();
    let mut out = Vec::with_capacity(k);
    out.push(last);
    for j in 1..k {
        out.push(p[k - j]);
    }
    out
}

/// Reverse the category order of a full count (or probability) row.
pub fn reverse_categories(row: ArrayView1<f64>) -> Array1<f64> {
    row.iter().rev().copied().collect()
}

fn check_simplex(p: ArrayView1<f64>) -> Result<()> {
    if p.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidProbabilities(
            "entries must be strictly positive".into(),
        ));
    }
    if !(p.sum() < 1.0) {
        return Err(Error::InvalidProbabilities(
            "entries must sum to less than one".into(),
        ));
    }
    Ok(())
}

fn g_forward(kind: FamilyKind, p: &[f64]) -> Vec<f64> {
    let k = p.len();
    match kind {
        FamilyKind::Cumulative => p
            .iter()
            .scan(0.0, |acc, &v| {
                *acc += v;
                Some(*acc)
            })
            .collect(),
        FamilyKind::Sratio => {
            let mut rem = 1.0;
            p.iter()
                .map(|&v| {
                    let d = v / rem;
                    rem -= v;
                    d
                })
                .collect()
        }
        FamilyKind::Cratio => g_forward(FamilyKind::Sratio, p)
            .into_iter()
            .map(|d| 1.0 - d)
            .collect(),
        FamilyKind::Acat => {
            let last = 1.0 - p.iter().sum::<f64>();
            (0..k)
                .map(|j| {
                    let next = if j + 1 < k { p[j + 1] } else { last };
                    next / (p[j] + next)
                })
                .collect()
        }
    }
}

fn h_forward(kind: FamilyKind, delta: &[f64], check: bool) -> Result<Vec<f64>> {
    match kind {
        FamilyKind::Cumulative => {
            let mut p = Vec::with_capacity(delta.len());
            let mut prev = 0.0;
            for &d in delta {
                if check && !(d > prev) {
                    return Err(Error::Infeasible { observation: None });
                }
                p.push(d - prev);
                prev = d;
            }
            if check && !(prev < 1.0) {
                return Err(Error::Infeasible { observation: None });
            }
            Ok(p)
        }
        FamilyKind::Sratio => {
            let mut rem = 1.0;
            Ok(delta
                .iter()
                .map(|&d| {
                    let v = d * rem;
                    rem *= 1.0 - d;
                    v
                })
                .collect())
        }
        FamilyKind::Cratio => {
            let flipped: Vec<f64> = delta.iter().map(|d| 1.0 - d).collect();
            h_forward(FamilyKind::Sratio, &flipped, check)
        }
        FamilyKind::Acat => {
            // log p_{j+1} - log p_1 = Σ_{i<=j} log(δ_i / (1 - δ_i)); normalize in log space.
            let k = delta.len();
            let mut s = Vec::with_capacity(k + 1);
            s.push(0.0);
            for &d in delta {
                let last = *s.last().unwrap();
                s.push(last + d.ln() - (-d).ln_1p());
            }
            let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = s.iter().map(|v| (v - m).exp()).sum();
            Ok(s[..k].iter().map(|v| (v - m).exp() / z).collect())
        }
    }
}

fn jacobian_forward(kind: FamilyKind, delta: &[f64]) -> Array2<f64> {
    let k = delta.len();
    let mut jac = Array2::zeros((k, k));
    match kind {
        FamilyKind::Cumulative => {
            for m in 0..k {
                jac[[m, m]] = 1.0;
                if m > 0 {
                    jac[[m, m - 1]] = -1.0;
                }
            }
        }
        FamilyKind::Sratio => {
            // p_m = δ_m Π_{i<m} (1 - δ_i)
            let mut rem = 1.0;
            for m in 0..k {
                jac[[m, m]] = rem;
                for n in 0..m {
                    let others: f64 = (0..m)
                        .filter(|&i| i != n)
                        .map(|i| 1.0 - delta[i])
                        .product();
                    jac[[m, n]] = -delta[m] * others;
                }
                rem *= 1.0 - delta[m];
            }
        }
        FamilyKind::Cratio => {
            let flipped: Vec<f64> = delta.iter().map(|d| 1.0 - d).collect();
            jac = -jacobian_forward(FamilyKind::Sratio, &flipped);
        }
        FamilyKind::Acat => {
            // ∂p_m/∂δ_n = p_m (1{n < m} - T_n) / (δ_n (1 - δ_n)), T_n = Σ_{l > n} p_l
            // over all K + 1 classes (0-based indices).
            let p = h_forward(FamilyKind::Acat, delta, false).expect("acat is unconstrained");
            let mut tail = 1.0 - p.iter().sum::<f64>();
            let mut tails = vec![0.0; k];
            for n in (0..k).rev() {
                if n + 1 < k {
                    tail += p[n + 1];
                }
                tails[n] = tail;
            }
            for n in 0..k {
                let r = 1.0 / (delta[n] * (1.0 - delta[n]));
                for m in 0..k {
                    let ind = if n < m { 1.0 } else { 0.0 };
                    jac[[m, n]] = p[m] * (ind - tails[n]) * r;
                }
            }
        }
    }
    jac
}

/// Inverse link value and Jacobian at one linear predictor vector.
#[derive(Debug, Clone)]
pub struct InverseLink {
    pub p: Array1<f64>,
    /// `[jac]_{mn} = ∂p_m/∂η_n`
    pub jac: Array2<f64>,
}

fn clamped_delta(link: Link, eta: ArrayView1<f64>) -> Vec<f64> {
    eta.iter()
        .map(|&e| link.inverse(e).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
        .collect()
}

/// `p = h(η) = h_mo(h_el(η))`.
pub fn h_composite(link: Link, family: Family, eta: ArrayView1<f64>) -> Result<Array1<f64>> {
    let delta = clamped_delta(link, eta);
    Ok(Array1::from(family.h_mo_vec(&delta, true)?))
}

/// `h(η)` without the cumulative feasibility check; entries may be nonpositive.
pub fn h_composite_unchecked(link: Link, family: Family, eta: ArrayView1<f64>) -> Array1<f64> {
    let delta = clamped_delta(link, eta);
    Array1::from(family.h_mo_vec(&delta, false).expect("unchecked inverse never fails"))
}

/// `D h(η) = D h_mo(δ) · diag(h*'(η))`.
pub fn jacobian_h_composite(link: Link, family: Family, eta: ArrayView1<f64>) -> Result<Array2<f64>> {
    Ok(inverse_link(link, family, eta)?.jac)
}

/// Probabilities and Jacobian in one pass.
pub fn inverse_link(link: Link, family: Family, eta: ArrayView1<f64>) -> Result<InverseLink> {
    let delta = clamped_delta(link, eta);
    let p = Array1::from(family.h_mo_vec(&delta, true)?);
    let mut jac = family.jacobian_vec(&delta);
    for (n, &e) in eta.iter().enumerate() {
        let d = link.inverse_deriv(e);
        jac.column_mut(n).mapv_inplace(|v| v * d);
    }
    Ok(InverseLink { p, jac })
}

/// `η = g(p) = g_el(g_mo(p))`.
pub fn g_composite(link: Link, family: Family, p: ArrayView1<f64>) -> Result<Array1<f64>> {
    Ok(family.g_mo(p)?.mapv(|d| link.link(d)))
}
