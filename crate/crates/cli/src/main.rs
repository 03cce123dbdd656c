//! `ordnet` command-line front end.

mod data;
mod error;
mod fitfile;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::BoolishValueParser;
use clap::{ArgAction, Args, Parser, Subcommand};
use ordnet::optim::Termination;
use ordnet::sim::{run_experiment, ExperimentConfig, Scenario};
use ordnet::tune::{kfold_cv, kfold_tune, FoldPlan};
use ordnet::{fit, Controls, Dataset, Family, FamilyKind, Fit, FitConfig, LambdaSelector, LambdaSpec, Link, ModelForm, ModelSpec};

use data::{Response, Table};
use error::{Failure, Result};

#[derive(Debug, Parser)]
#[command(name = "ordnet", version, about = "Elastic-net penalized ordinal and multinomial regression")]
struct Cli {
    /// Worker threads for folds and replicates.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Print results as JSON instead of TSV.
    #[arg(long, global = true)]
    json: bool,

    /// Trace each fitted lambda on standard error.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a solution path and write summary, coefficients and a fit file.
    Fit(FitArgs),
    /// Held-out log-likelihood of the full-data lambda sequence by K-fold CV.
    Tune(TuneArgs),
    /// Cross-validated performance of models tuned inside each fold.
    Cv(CvArgs),
    /// Class probabilities for new data from a saved fit.
    Predict(PredictArgs),
    /// Reproduce the out-of-sample simulation experiments.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,

    /// Categorical response column.
    #[arg(long, required_unless_present = "count_columns", conflicts_with = "count_columns")]
    response: Option<String>,

    /// Category order of the response column; default is first appearance.
    #[arg(long, value_delimiter = ',', requires = "response")]
    levels: Option<Vec<String>>,

    /// One count column per category, in category order.
    #[arg(long, value_delimiter = ',')]
    count_columns: Option<Vec<String>>,

    /// Covariate columns; default is every non-response column.
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let response = match (&self.response, &self.count_columns) {
            (Some(name), _) => Response::Column { name: name.clone(), levels: self.levels.clone() },
            (None, Some(cols)) => Response::Counts(cols.clone()),
            (None, None) => return Err(Failure::config("either --response or --count-columns is required")),
        };
        let table = Table::from_path(&self.data)?;
        data::ingest(&table, &response, self.covariates.as_deref())
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "cumulative")]
    family: FamilyKind,

    #[arg(long, default_value = "logit")]
    link: Link,

    /// Use the backward version of the family.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value = "false", default_missing_value = "true", value_parser = BoolishValueParser::new())]
    reverse: bool,

    /// Elastic-net mixing parameter; 1 is the lasso.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    #[arg(long, alias = "nLambda", default_value_t = 20)]
    n_lambda: usize,

    #[arg(long, alias = "lambdaMinRatio", default_value_t = 0.01)]
    lambda_min_ratio: f64,

    /// Explicit lambda sequence, replacing the generated one.
    #[arg(long, alias = "lambdaVals", value_delimiter = ',')]
    lambda_vals: Option<Vec<f64>>,

    #[arg(long, alias = "includeLambda0", action = ArgAction::Set, num_args = 0..=1, default_value = "false", default_missing_value = "true", value_parser = BoolishValueParser::new())]
    include_lambda0: bool,

    #[arg(long, alias = "parallelTerms", action = ArgAction::Set, num_args = 0..=1, default_value = "true", default_missing_value = "true", value_parser = BoolishValueParser::new())]
    parallel_terms: bool,

    #[arg(long, alias = "nonparallelTerms", action = ArgAction::Set, num_args = 0..=1, default_value = "false", default_missing_value = "true", value_parser = BoolishValueParser::new())]
    nonparallel_terms: bool,

    #[arg(long, alias = "parallelPenaltyFactor", default_value_t = 1.0)]
    parallel_penalty_factor: f64,

    /// One factor per covariate, in covariate order.
    #[arg(long, alias = "penaltyFactors", value_delimiter = ',')]
    penalty_factors: Option<Vec<f64>>,

    /// One flag per covariate constraining its coefficients to be nonnegative.
    #[arg(long, alias = "positiveID", value_delimiter = ',', value_parser = BoolishValueParser::new())]
    positive_id: Option<Vec<bool>>,

    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value = "true", default_missing_value = "true", value_parser = BoolishValueParser::new())]
    standardize: bool,

    #[arg(long, alias = "alphaMin", default_value_t = 0.01)]
    alpha_min: f64,

    #[arg(long, alias = "pMin", default_value_t = 1e-8)]
    p_min: f64,

    #[arg(long, alias = "stopThresh", default_value_t = 1e-4)]
    stop_thresh: f64,

    #[arg(long, alias = "threshOut", default_value_t = 1e-8)]
    thresh_out: f64,

    #[arg(long, alias = "threshIn", default_value_t = 1e-8)]
    thresh_in: f64,

    #[arg(long, alias = "maxiterOut", default_value_t = 100)]
    maxiter_out: usize,

    #[arg(long, alias = "maxiterIn", default_value_t = 1000)]
    maxiter_in: usize,

    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value = "true", default_missing_value = "true", value_parser = BoolishValueParser::new())]
    warn: bool,
}

impl ModelArgs {
    fn config(&self) -> Result<FitConfig> {
        let family = Family { kind: self.family, reverse: self.reverse };
        let form = ModelForm::new(self.parallel_terms, self.nonparallel_terms)?;
        let mut cfg = FitConfig::new(ModelSpec { link: self.link, family, form });
        cfg.alpha = self.alpha;
        cfg.parallel_penalty_factor = self.parallel_penalty_factor;
        cfg.penalty_factors = self.penalty_factors.clone();
        cfg.positive_id = self.positive_id.clone();
        cfg.lambdas = match &self.lambda_vals {
            Some(v) => LambdaSpec::Values(v.clone()),
            None => LambdaSpec::Auto {
                n_lambda: self.n_lambda,
                min_ratio: self.lambda_min_ratio,
                include_zero: self.include_lambda0,
            },
        };
        cfg.standardize = self.standardize;
        cfg.alpha_min = self.alpha_min;
        cfg.controls = Controls {
            thresh_out: self.thresh_out,
            thresh_in: self.thresh_in,
            maxiter_out: self.maxiter_out,
            maxiter_in: self.maxiter_in,
            p_min: self.p_min,
            stop_thresh: self.stop_thresh,
        };
        cfg.controls.validate()?;
        cfg.warn = self.warn;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,

    /// Directory for summary.tsv, coefficients.tsv and fit.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FoldArgs {
    #[arg(long, alias = "nFolds", default_value_t = 5)]
    n_folds: usize,

    /// JSON array of folds, each an array of 1-based row numbers.
    #[arg(long, alias = "folds")]
    folds_file: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl FoldArgs {
    fn plan(&self, n_obs: usize) -> Result<FoldPlan> {
        match &self.folds_file {
            Some(path) => read_folds(path, n_obs),
            None => Ok(FoldPlan::random(n_obs, self.n_folds, self.seed)?),
        }
    }
}

fn read_folds(path: &Path, n_obs: usize) -> Result<FoldPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let folds: Vec<Vec<usize>> =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("invalid folds file {}: {e}", path.display())))?;
    let folds = folds
        .into_iter()
        .map(|f| {
            f.into_iter()
                .map(|i| i.checked_sub(1).ok_or_else(|| Failure::config("fold indices are 1-based")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    FoldPlan::from_folds(folds, n_obs).map_err(|e| Failure::config(e.to_string()))
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    folds: FoldArgs,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    folds: FoldArgs,

    /// Inner folds used to tune lambda within each outer fold.
    #[arg(long, alias = "nFoldsCV", default_value_t = 5)]
    n_folds_cv: usize,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Fit file written by `ordnet fit`.
    #[arg(long)]
    fit: PathBuf,

    /// CSV with the fitted covariate columns; other columns are ignored.
    #[arg(long)]
    data: PathBuf,

    /// bestAIC, bestBIC, or a 1-based lambda index.
    #[arg(long, alias = "whichLambda", default_value = "bestAIC")]
    lambda: String,

    /// Write the predictions here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// sim1, sim2, sim3 or a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "sim1,sim2,sim3")]
    scenario: Vec<Scenario>,

    #[arg(long, default_value_t = 100)]
    replicates: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, default_value_t = 10_000)]
    n_validation: usize,

    #[arg(long, alias = "nFolds", default_value_t = 5)]
    n_folds: usize,
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    print(&format!("{}\n", serde_json::to_string_pretty(v).expect("JSON values serialize")))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn trace(fit: &Fit) {
    for (i, p) in fit.path.points.iter().enumerate() {
        eprintln!(
            "lambda {} = {}: loglik {}, {} nonzero, {} outer iterations, {}, {}",
            i + 1,
            p.lambda,
            p.loglik,
            p.n_nonzero,
            p.outer_iterations,
            if p.converged { "converged" } else { "not converged" },
            fitfile::status_name(p.status)
        );
    }
}

fn run_fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let cfg = args.model.config()?;
    let data = args.data.load()?;
    let f = fit(&cfg, &data)?;
    if cli.verbose {
        trace(&f);
    }
    warn_all(&f.warnings);

    std::fs::create_dir_all(&args.out)?;
    let summary = f.summary();
    std::fs::write(args.out.join("summary.tsv"), output::summary_tsv(&summary))?;
    std::fs::write(args.out.join("coefficients.tsv"), output::coefficients_tsv(&f))?;
    fitfile::save(&f, &args.out.join("fit.json"))?;
    if cli.json {
        print_json(&serde_json::json!({ "summary": output::summary_json(&summary), "warnings": f.warnings }))?;
    } else {
        print(&output::summary_tsv(&summary))?;
    }

    if let Termination::Infeasible { at, .. } = f.path.termination {
        return Err(Failure::numeric(format!(
            "solution path truncated: fitted probabilities left the feasible region at lambda index {} (lambda = {})",
            at + 1,
            f.path.points[at].lambda
        )));
    }
    Ok(())
}

fn run_tune(cli: &Cli, args: &TuneArgs) -> Result<()> {
    let cfg = args.model.config()?;
    let data = args.data.load()?;
    let plan = args.folds.plan(data.n_obs())?;
    let t = kfold_tune(&cfg, &data, &plan)?;
    if cli.verbose {
        trace(&t.full_fit);
    }
    warn_all(&t.full_fit.warnings);
    warn_all(&t.warnings);
    if cli.json {
        print_json(&output::tune_json(&t))
    } else {
        eprintln!("best lambda index: {}", t.best_index() + 1);
        print(&output::tune_tsv(&t))
    }
}

fn run_cv(cli: &Cli, args: &CvArgs) -> Result<()> {
    let cfg = args.model.config()?;
    let data = args.data.load()?;
    let plan = args.folds.plan(data.n_obs())?;
    let folds = kfold_cv(&cfg, &data, &plan, args.n_folds_cv, args.folds.seed.wrapping_add(1))?;
    if cli.json {
        print_json(&output::cv_json(&folds))
    } else {
        print(&output::cv_tsv(&folds))
    }
}

fn run_predict(cli: &Cli, args: &PredictArgs) -> Result<()> {
    let f = fitfile::load(&args.fit)?;
    let selector: LambdaSelector = args.lambda.parse()?;
    let index = f.select(selector)?;
    let table = Table::from_path(&args.data)?;
    let x = table.matrix(&f.covariate_names)?;
    let pred = f.predict(x.view(), index)?;
    let flagged = pred.nonmonotone.iter().filter(|b| **b).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} rows have non-monotone cumulative probabilities");
    }
    let text = if cli.json {
        format!("{}\n", serde_json::to_string_pretty(&output::predictions_json(&f.levels, &pred)).expect("JSON values serialize"))
    } else {
        output::predictions_csv(&f.levels, &pred)
    };
    match &args.output {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => print(&text),
    }
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let config = ExperimentConfig {
        replicates: args.replicates,
        seed: args.seed,
        n_validation: args.n_validation,
        n_folds: args.n_folds,
        ..ExperimentConfig::default()
    };
    if args.replicates < 2 {
        return Err(Failure::config("at least two replicates are needed for a standard error"));
    }
    let mut results = Vec::new();
    for &scenario in &args.scenario {
        let r = run_experiment(scenario, &config);
        if cli.verbose {
            for f in &r.forms {
                eprintln!("{} {}: {} of {} replicates failed", scenario.name(), f.form.name(), f.failures, r.replicates);
            }
        }
        results.push(r);
    }
    if cli.json {
        print_json(&output::simulation_json(&results))
    } else {
        print(&output::simulation_tsv(&results))
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Failure::config("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))?;
    match &cli.command {
        Command::Fit(a) => run_fit(cli, a),
        Command::Tune(a) => run_tune(cli, a),
        Command::Cv(a) => run_cv(cli, a),
        Command::Predict(a) => run_predict(cli, a),
        Command::Simulate(a) => run_simulate(cli, a),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}
