//! Simulation experiments: data from a forward stopping-ratio logit model,
//! fits of the three model forms tuned by cross-validation, and
//! out-of-sample log-likelihood on fresh draws.
//!
//! Every replicate owns independent ChaCha8 streams derived from the master
//! seed: stream `4r` draws the training data, `4r + 1` the validation data and
//! `4r + 2` the fold assignment.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitConfig;
use crate::links::{h_composite, Family, FamilyKind, Link};
use crate::model::{Coefficients, Dataset, ModelForm, ModelSpec};
use crate::tune::{held_out_scores, kfold_tune, FoldPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Sim1,
    Sim2,
    Sim3,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Sim1, Scenario::Sim2, Scenario::Sim3];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Sim1 => "Sim1",
            Scenario::Sim2 => "Sim2",
            Scenario::Sim3 => "Sim3",
        }
    }

    /// Training sample size.
    pub fn n(self) -> usize {
        match self {
            Scenario::Sim1 => 500,
            Scenario::Sim2 | Scenario::Sim3 => 50,
        }
    }

    pub fn intercepts(self) -> Array1<f64> {
        Array1::from(vec![-0.5, 0.0])
    }

    /// `P × 2` nonparallel coefficient matrix.
    pub fn coefficients(self) -> Array2<f64> {
        match self {
            Scenario::Sim1 => Array2::from_shape_vec((1, 2), vec![0.0, 2.0]).unwrap(),
            Scenario::Sim2 | Scenario::Sim3 => {
                let mut b = Array2::zeros((15, 2));
                for c in 0..5 {
                    b.row_mut(c).fill(2.0);
                }
                if self == Scenario::Sim3 {
                    b[[0, 0]] = -2.0;
                }
                b
            }
        }
    }

    pub fn spec() -> ModelSpec {
        ModelSpec {
            link: Link::Logit,
            family: Family::forward(FamilyKind::Sratio),
            form: ModelForm::NONPARALLEL,
        }
    }

    /// The generating model as a nonparallel coefficient vector.
    pub fn truth(self) -> Coefficients {
        Coefficients::from_parts(
            ModelForm::NONPARALLEL,
            self.intercepts().view(),
            None,
            Some(self.coefficients().view()),
        )
        .expect("scenario dimensions are consistent")
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim1" | "1" => Ok(Scenario::Sim1),
            "sim2" | "2" => Ok(Scenario::Sim2),
            "sim3" | "3" => Ok(Scenario::Sim3),
            other => Err(Error::InvalidConfig(format!("unknown scenario '{other}'"))),
        }
    }
}

/// `n` one-trial observations with iid standard normal covariates.
pub fn simulate_n(scenario: Scenario, n: usize, rng: &mut impl Rng) -> Dataset {
    let b0 = scenario.intercepts();
    let b = scenario.coefficients();
    let p = b.nrows();
    let spec = Scenario::spec();
    let mut x = Array2::zeros((n, p));
    let mut classes = Vec::with_capacity(n);
    for i in 0..n {
        for c in 0..p {
            x[[i, c]] = rng.sample(StandardNormal);
        }
        let eta = &b0 + &b.t().dot(&x.row(i));
        let probs = h_composite(spec.link, spec.family, eta.view()).expect("stopping-ratio model is always feasible");
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut class = probs.len();
        for (j, pj) in probs.iter().enumerate() {
            acc += pj;
            if u < acc {
                class = j;
                break;
            }
        }
        classes.push(class);
    }
    Dataset::from_classes(x, &classes, 3).expect("simulated data are valid")
}

pub fn simulate(scenario: Scenario, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_n(scenario, scenario.n(), &mut rng)
}

/// Mean per-observation log-likelihood of `beta` on validation data; `−∞`
/// if any fitted probability vector is infeasible.
pub fn evaluate_oos(spec: &ModelSpec, beta: &Array1<f64>, validation: &Dataset) -> Result<f64> {
    let cfg = FitConfig::new(*spec);
    let (total, _) = held_out_scores(&cfg, beta, validation)?;
    Ok(total / validation.total_trials())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub replicates: usize,
    pub seed: u64,
    pub n_validation: usize,
    pub n_folds: usize,
    pub forms: Vec<ModelForm>,
    /// Base fitting configuration; its form is replaced per model.
    pub fit: FitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            replicates: 100,
            seed: 1,
            n_validation: 10_000,
            n_folds: 5,
            forms: vec![ModelForm::PARALLEL, ModelForm::NONPARALLEL, ModelForm::SEMI_PARALLEL],
            fit: FitConfig::new(Scenario::spec()),
        }
    }
}

/// Out-of-sample results for one model form across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormResult {
    pub form: ModelForm,
    /// One value per replicate; `None` when that replicate's fit failed.
    pub values: Vec<Option<f64>>,
    pub mean: f64,
    /// Sample standard deviation over successful replicates divided by √n.
    pub se: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub replicates: usize,
    pub seed: u64,
    pub forms: Vec<FormResult>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Run one replicate: returns the out-of-sample value per form.
pub fn run_replicate(scenario: Scenario, config: &ExperimentConfig, replicate: usize) -> Vec<Option<f64>> {
    let r = replicate as u64;
    let train = simulate_n(scenario, scenario.n(), &mut stream(config.seed, 4 * r));
    let valid = simulate_n(scenario, config.n_validation, &mut stream(config.seed, 4 * r + 1));
    let plan = FoldPlan::random_with(train.n_obs(), config.n_folds, &mut stream(config.seed, 4 * r + 2));
    config
        .forms
        .iter()
        .map(|&form| {
            let plan = plan.as_ref().ok()?;
            let mut cfg = config.fit.clone();
            cfg.spec.form = form;
            let tuned = kfold_tune(&cfg, &train, plan).ok()?;
            let best = tuned.best_index();
            let beta = &tuned.full_fit.path.points[best].beta;
            evaluate_oos(&cfg.spec, beta, &valid).ok()
        })
        .collect()
}

fn summarize(form: ModelForm, values: Vec<Option<f64>>) -> FormResult {
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let n = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / n;
    let var = ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    FormResult { form, failures: values.len() - ok.len(), values, mean, se: (var / n).sqrt() }
}

/// All replicates of one scenario, in parallel on the current rayon pool.
/// Results depend only on the configuration, not on scheduling.
pub fn run_experiment(scenario: Scenario, config: &ExperimentConfig) -> ExperimentResult {
    let per_rep: Vec<Vec<Option<f64>>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(scenario, config, r))
        .collect();
    let forms = config
        .forms
        .iter()
        .enumerate()
        .map(|(f, &form)| summarize(form, per_rep.iter().map(|v| v[f]).collect()))
        .collect();
    ExperimentResult { scenario, replicates: config.replicates, seed: config.seed, forms }
}
