//! CSV ingestion.

use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use ordnet::Dataset;

use crate::error::{Failure, Result};

/// How the response is encoded in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    /// One categorical column; categories ordered by `levels` or by first
    /// appearance.
    Column { name: String, levels: Option<Vec<String>> },
    /// One count column per category, in order.
    Counts(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;
        Table::from_reader(file).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(Failure::data(format!("duplicate column '{h}'")));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(|v| v.trim().to_string()).collect());
        }
        if rows.is_empty() {
            return Err(Failure::data("no data rows"));
        }
        Ok(Table { headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::data(format!("missing column '{name}'")))
    }

    fn cell(&self, row: usize, col: usize) -> Result<&str> {
        let v = self.rows[row].get(col).map(String::as_str).unwrap_or("");
        if v.is_empty() || v == "NA" {
            return Err(Failure::data(format!("missing value at row {}, column '{}'", row + 1, self.headers[col])));
        }
        Ok(v)
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let v = self.cell(row, col)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(Failure::data(format!(
                "non-numeric value '{v}' at row {}, column '{}'",
                row + 1,
                self.headers[col]
            ))),
        }
    }

    /// `N × P` matrix of the named columns.
    pub fn matrix(&self, names: &[String]) -> Result<Array2<f64>> {
        let cols = names.iter().map(|n| self.column(n)).collect::<Result<Vec<_>>>()?;
        let mut x = Array2::zeros((self.rows.len(), cols.len()));
        for i in 0..self.rows.len() {
            for (j, &c) in cols.iter().enumerate() {
                x[[i, j]] = self.number(i, c)?;
            }
        }
        Ok(x)
    }
}

/// Build a dataset; covariates default to every column not used by the
/// response.
pub fn ingest(table: &Table, response: &Response, covariates: Option<&[String]>) -> Result<Dataset> {
    let used: Vec<&str> = match response {
        Response::Column { name, .. } => vec![name.as_str()],
        Response::Counts(names) => names.iter().map(String::as_str).collect(),
    };
    for name in &used {
        table.column(name)?;
    }
    let covariates: Vec<String> = match covariates {
        Some(c) => c.to_vec(),
        None => table.headers.iter().filter(|h| !used.contains(&h.as_str())).cloned().collect(),
    };
    let x = table.matrix(&covariates)?;

    let (y, levels) = match response {
        Response::Column { name, levels } => categorical(table, table.column(name)?, levels.as_deref())?,
        Response::Counts(names) => {
            if names.len() < 2 {
                return Err(Failure::config("count-column mode needs at least two columns"));
            }
            (table.matrix(names)?, names.clone())
        }
    };
    Ok(Dataset::new(x, y)?.with_names(covariates, levels)?)
}

fn categorical(table: &Table, col: usize, levels: Option<&[String]>) -> Result<(Array2<f64>, Vec<String>)> {
    let mut seen: Vec<String> = levels.map(<[String]>::to_vec).unwrap_or_default();
    if levels.is_some() {
        for (i, l) in seen.iter().enumerate() {
            if seen[..i].contains(l) {
                return Err(Failure::config(format!("level '{l}' listed twice")));
            }
        }
    }
    let mut classes = Vec::with_capacity(table.rows.len());
    for i in 0..table.rows.len() {
        let v = table.cell(i, col)?;
        let c = match seen.iter().position(|l| l == v) {
            Some(c) => c,
            None if levels.is_some() => {
                return Err(Failure::data(format!(
                    "unknown level '{v}' at row {}, column '{}'",
                    i + 1,
                    table.headers[col]
                )))
            }
            None => {
                seen.push(v.to_string());
                seen.len() - 1
            }
        };
        classes.push(c);
    }
    let mut y = Array2::zeros((classes.len(), seen.len()));
    for (i, c) in classes.into_iter().enumerate() {
        y[[i, c]] = 1.0;
    }
    Ok((y, seen))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        Table::from_reader(text.as_bytes()).unwrap()
    }

    #[test]
    fn one_hot_by_first_appearance() {
        let t = table("x,y\n1.0,b\n2.0,a\n3.0,b\n");
        let resp = Response::Column { name: "y".into(), levels: None };
        let d = ingest(&t, &resp, None).unwrap();
        assert_eq!(d.levels(), ["b", "a"]);
        assert_eq!(d.y().row(1).to_vec(), vec![0.0, 1.0]);
        assert_eq!(d.covariate_names(), ["x"]);
    }

    #[test]
    fn explicit_levels() {
        let t = table("y,x\na,0\nb,1\nc,2\n");
        let d = ingest(&t, &Response::Column { name: "y".into(), levels: Some(vec!["a".into(), "b".into(), "c".into()]) }, None).unwrap();
        assert_eq!(d.y(), &Array2::<f64>::eye(3));
        let r = ingest(&t, &Response::Column { name: "y".into(), levels: Some(vec!["c".into(), "b".into(), "a".into()]) }, None).unwrap();
        assert_eq!(r.y(), d.reversed().y());
        assert_eq!(r.levels(), ["c", "b", "a"]);
    }

    #[test]
    fn counts_keep_trials() {
        let t = table("x,n1,n2,n3\n0.5,2,0,1\n");
        let d = ingest(&t, &Response::Counts(vec!["n1".into(), "n2".into(), "n3".into()]), None).unwrap();
        assert_eq!(d.total_trials(), 3.0);
        assert_eq!(d.n_covariates(), 1);
    }

    #[test]
    fn errors_name_the_cell() {
        let resp = Response::Column { name: "y".into(), levels: None };
        let e = ingest(&table("x,y\n1,a\n,b\n"), &resp, None).unwrap_err();
        assert_eq!(e.message, "missing value at row 2, column 'x'");
        let e = ingest(&table("x,y\n1,a\nfoo,b\n"), &resp, None).unwrap_err();
        assert_eq!(e.message, "non-numeric value 'foo' at row 2, column 'x'");
        let levels = Response::Column { name: "y".into(), levels: Some(vec!["a".into()]) };
        let e = ingest(&table("x,y\n1,a\n2,b\n"), &levels, None).unwrap_err();
        assert_eq!(e.message, "unknown level 'b' at row 2, column 'y'");
        let e = ingest(&table("x,y\n1,a\n"), &Response::Column { name: "z".into(), levels: None }, None).unwrap_err();
        assert_eq!(e.code, crate::error::DATA);
    }
}
