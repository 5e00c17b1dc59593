//! Uniform record for one checked inequality or identity.

use std::fmt;
use std::io::Write;

use crate::error::Error;

/// Formats a float with 17 significant digits, the precision used in every
/// exported table.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// CSV writer with LF line endings.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    /// Short identifier, e.g. `decay` or `pairing`.
    pub name: String,
    /// Plain-language form of the statement being checked.
    pub statement: String,
    pub lhs: f64,
    pub rhs: f64,
    pub fitted_constant: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Extra named numbers (secondary constants, arg-max locations, counts).
    pub details: Vec<(String, f64)>,
    /// Grid and quadrature parameters the numbers depend on.
    pub provenance: Vec<(String, String)>,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, statement: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            fitted_constant: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            details: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn sides(mut self, lhs: f64, rhs: f64) -> Self {
        self.lhs = lhs;
        self.rhs = rhs;
        self
    }

    pub fn fitted(mut self, c: f64) -> Self {
        self.fitted_constant = c;
        self
    }

    pub fn verdict(mut self, tolerance: f64, pass: bool) -> Self {
        self.tolerance = tolerance;
        self.pass = pass;
        self
    }

    pub fn detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.push((key.into(), value));
        self
    }

    pub fn note(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.provenance.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

impl fmt::Display for EstimateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: lhs={} rhs={} C={} tol={} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            sig17(self.lhs),
            sig17(self.rhs),
            sig17(self.fitted_constant),
            self.tolerance,
            self.statement
        )
    }
}
