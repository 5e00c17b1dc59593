//! Check records and the summary table.

use std::io::Write;

use bmoext::report::{csv_writer, sig17};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub threshold: f64,
    /// Plain statement of what is being checked.
    pub statement: String,
    pub reason: String,
}

impl Check {
    fn new(name: &str, statement: &str, measured: f64, threshold: f64, pass: bool) -> Self {
        Self {
            suite: String::new(),
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            measured,
            threshold,
            statement: statement.to_string(),
            reason: String::new(),
        }
    }

    /// Passes when `measured <= threshold`; NaN fails.
    pub fn at_most(name: &str, statement: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, statement, measured, threshold, measured <= threshold)
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: &str, statement: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, statement, measured, threshold, measured >= threshold)
    }

    pub fn holds(name: &str, statement: &str, measured: f64, pass: bool) -> Self {
        Self::new(name, statement, measured, f64::NAN, pass)
    }

    pub fn failed(name: &str, statement: &str, reason: impl ToString) -> Self {
        let mut c = Self::new(name, statement, f64::NAN, f64::NAN, false);
        c.reason = reason.to_string();
        c
    }

    pub fn skipped(name: &str, statement: &str, reason: impl ToString) -> Self {
        let mut c = Self::new(name, statement, f64::NAN, f64::NAN, false);
        c.status = Status::Skipped;
        c.reason = reason.to_string();
        c
    }

    pub fn because(mut self, reason: impl ToString) -> Self {
        self.reason = reason.to_string();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: String,
    pub checks: Vec<Check>,
    pub wall_seconds: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }
}

pub const SUMMARY_HEADER: [&str; 7] = ["suite", "check", "status", "measured", "threshold", "statement", "reason"];

pub fn write_summary<W: Write>(results: &[SuiteResult], w: W) -> std::io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in results {
        for c in &r.checks {
            let num = |x: f64| if x.is_nan() { String::new() } else { sig17(x) };
            out.write_record([
                r.suite.as_str(),
                c.name.as_str(),
                c.status.as_str(),
                &num(c.measured),
                &num(c.threshold),
                c.statement.as_str(),
                c.reason.as_str(),
            ])?;
        }
    }
    out.flush()
}
