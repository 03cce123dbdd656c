//! Tables written to files and standard output.

use std::fmt::Write;

use ordnet::fit::{Fit, Prediction};
use ordnet::sim::ExperimentResult;
use ordnet::tune::{CvFold, SummaryRow, TuneResult};
use serde_json::{json, Value};

/// JSON number, or a string for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("lambdaVals\tnNonzero\tloglik\tdevPct\taic\tbic\n");
    for r in rows {
        writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", r.lambda, r.n_nonzero, r.loglik, r.dev_pct, r.aic, r.bic).unwrap();
    }
    s
}

pub fn summary_json(rows: &[SummaryRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "lambdaVals": num(r.lambda),
                    "nNonzero": r.n_nonzero,
                    "loglik": num(r.loglik),
                    "devPct": num(r.dev_pct),
                    "aic": num(r.aic),
                    "bic": num(r.bic),
                })
            })
            .collect(),
    )
}

/// One block per `λ`: the intercept row and one row per covariate, with a
/// column per linear predictor.
pub fn coefficients_tsv(fit: &Fit) -> String {
    let mut s = String::from("lambdaIndex\tterm");
    for label in fit.predictor_labels() {
        write!(s, "\t{label}").unwrap();
    }
    s.push('\n');
    for index in 0..fit.n_lambda() {
        let m = fit.coefficients(index).matrix();
        for (r, row) in m.outer_iter().enumerate() {
            let term = if r == 0 { "(Intercept)" } else { fit.covariate_names[r - 1].as_str() };
            write!(s, "{}\t{term}", index + 1).unwrap();
            for v in row {
                write!(s, "\t{v}").unwrap();
            }
            s.push('\n');
        }
    }
    s
}

fn header_fields(s: &mut String, names: impl Iterator<Item = String>) {
    for n in names {
        write!(s, "\t{n}").unwrap();
    }
    s.push('\n');
}

pub fn tune_tsv(t: &TuneResult) -> String {
    let folds = t.loglik.ncols();
    let mut s = String::from("lambdaIndex\tlambdaVals");
    header_fields(&mut s, (1..=folds).map(|f| format!("fold{f}")).chain(["meanLoglik".into(), "meanMisclass".into()]));
    let (means, mis) = (t.mean_loglik(), t.mean_misclass());
    for (l, lambda) in t.lambdas.iter().enumerate() {
        write!(s, "{}\t{lambda}", l + 1).unwrap();
        for v in t.loglik.row(l) {
            write!(s, "\t{v}").unwrap();
        }
        writeln!(s, "\t{}\t{}", means[l], mis[l]).unwrap();
    }
    s
}

pub fn tune_json(t: &TuneResult) -> Value {
    let rows = |m: &ndarray::Array2<f64>| -> Value {
        Value::Array(m.outer_iter().map(|r| Value::Array(r.iter().map(|v| num(*v)).collect())).collect())
    };
    json!({
        "lambdaVals": t.lambdas.iter().map(|v| num(*v)).collect::<Vec<_>>(),
        "loglik": rows(&t.loglik),
        "misclass": rows(&t.misclass),
        "bestLambdaIndex": t.best_index() + 1,
        "warnings": t.warnings,
    })
}

pub fn cv_tsv(folds: &[CvFold]) -> String {
    let mut s = String::from("fold\tbestLambdaIndex\tlambdaVals\tloglik\tmisclass\n");
    for (f, c) in folds.iter().enumerate() {
        writeln!(s, "{}\t{}\t{}\t{}\t{}", f + 1, c.best_lambda_index + 1, c.lambda, c.loglik, c.misclass).unwrap();
    }
    s
}

pub fn cv_json(folds: &[CvFold]) -> Value {
    Value::Array(
        folds
            .iter()
            .enumerate()
            .map(|(f, c)| {
                json!({
                    "fold": f + 1,
                    "bestLambdaIndex": c.best_lambda_index + 1,
                    "lambdaVals": num(c.lambda),
                    "loglik": num(c.loglik),
                    "misclass": num(c.misclass),
                })
            })
            .collect(),
    )
}

pub fn simulation_tsv(results: &[ExperimentResult]) -> String {
    let mut s = String::from("scenario\tform\treplicates\tfailures\tmean\tse\n");
    for r in results {
        for f in &r.forms {
            writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", r.scenario.name(), f.form.name(), r.replicates, f.failures, f.mean, f.se).unwrap();
        }
    }
    s
}

pub fn simulation_json(results: &[ExperimentResult]) -> Value {
    Value::Array(
        results
            .iter()
            .flat_map(|r| {
                r.forms.iter().map(move |f| {
                    json!({
                        "scenario": r.scenario.name(),
                        "seed": r.seed,
                        "form": f.form.name(),
                        "replicates": r.replicates,
                        "failures": f.failures,
                        "mean": num(f.mean),
                        "se": num(f.se),
                        "values": f.values.iter().map(|v| v.map(num).unwrap_or(Value::Null)).collect::<Vec<_>>(),
                    })
                })
            })
            .collect(),
    )
}

/// Probabilities, argmax class label and non-monotone flag per row.
pub fn predictions_csv(levels: &[String], p: &Prediction) -> String {
    let mut s = String::new();
    let header: Vec<String> = levels.iter().map(|l| format!("P[Y={l}]")).chain(["class".into(), "nonmonotone".into()]).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for (i, row) in p.probabilities.outer_iter().enumerate() {
        for v in row {
            write!(s, "{v},").unwrap();
        }
        writeln!(s, "{},{}", levels[p.classes[i]], u8::from(p.nonmonotone[i])).unwrap();
    }
    s
}

pub fn predictions_json(levels: &[String], p: &Prediction) -> Value {
    Value::Array(
        p.probabilities
            .outer_iter()
            .enumerate()
            .map(|(i, row)| {
                json!({
                    "probabilities": row.iter().map(|v| num(*v)).collect::<Vec<_>>(),
                    "class": levels[p.classes[i]],
                    "nonmonotone": p.nonmonotone[i],
                })
            })
            .collect(),
    )
}
