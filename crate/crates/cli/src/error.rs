use std::fmt;

/// Process exit codes per error class.
pub const CONFIG: i32 = 2;
pub const DATA: i32 = 3;
pub const NUMERIC: i32 = 4;
pub const IO: i32 = 1;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: CONFIG, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { code: DATA, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure { code: NUMERIC, message: message.into() }
    }

    pub fn context(self, what: &str) -> Self {
        Failure { code: self.code, message: format!("{what}: {}", self.message) }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ordnet::Error> for Failure {
    fn from(e: ordnet::Error) -> Self {
        use ordnet::Error::*;
        let code = match e {
            InvalidConfig(_) | NoPenalizedCoefficients => CONFIG,
            InvalidData(_) | DimensionMismatch(_) | InvalidProbabilities(_) => DATA,
            Infeasible { .. } | DegenerateCoordinate(_) => NUMERIC,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: IO, message: e.to_string() }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Failure>;
