//! Theory × problem matrices and their JSON, CSV and Markdown renderings.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::proofudt::SearchTrace;
use crate::rational::Rational;
use crate::theories::{prescribe, Score, Settings, TheoryId};
use crate::worldmodel::DecisionProblem;

pub const SCHEMA: &str = "report-v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("unsupported format `{0}` (expected json, csv or md)")]
    UnsupportedFormat(String),
    #[error("csv output failed: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Md,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" => Ok(Format::Md),
            other => Err(ReportError::UnsupportedFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Md => "md",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Row {
    pub problem: String,
    pub theory: TheoryId,
    pub chosen: Option<String>,
    pub eu: Option<Rational>,
    pub scores: Vec<Score>,
    pub trace: Option<SearchTrace>,
    pub error: Option<ErrorRecord>,
}

impl Row {
    pub fn trace_ref(&self) -> Option<String> {
        self.trace.as_ref().map(|_| format!("{}/{}", self.problem, self.theory.name()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrescriptionReport {
    pub schema: &'static str,
    pub rows: Vec<Row>,
}

impl PrescriptionReport {
    pub fn row(&self, problem: &str, theory: TheoryId) -> Option<&Row> {
        self.rows.iter().find(|r| r.problem == problem && r.theory == theory)
    }
}

pub fn evaluate_pair(problem: &DecisionProblem, theory: TheoryId, settings: &Settings) -> Row {
    let base = Row {
        problem: problem.name.clone(),
        theory,
        chosen: None,
        eu: None,
        scores: Vec::new(),
        trace: None,
        error: None,
    };
    match prescribe(problem, theory, settings) {
        Ok(p) => Row {
            chosen: Some(p.chosen.to_string()),
            eu: p.value().cloned(),
            scores: p.scores,
            trace: p.trace,
            ..base
        },
        Err(e) => Row { error: Some(ErrorRecord { kind: e.kind(), message: e.to_string() }), ..base },
    }
}

/// Every (problem, theory) pair, sorted by problem name then theory. A
/// failing pair becomes an error row.
pub fn evaluate_matrix(problems: &[DecisionProblem], theories: &[TheoryId], settings: &Settings) -> PrescriptionReport {
    let mut rows = Vec::with_capacity(problems.len() * theories.len());
    for p in problems {
        for &t in theories {
            rows.push(evaluate_pair(p, t, settings));
        }
    }
    rows.sort_by(|a, b| (a.problem.as_str(), a.theory).cmp(&(b.problem.as_str(), b.theory)));
    rows.dedup_by(|a, b| a.problem == b.problem && a.theory == b.theory);
    PrescriptionReport { schema: SCHEMA, rows }
}

fn cell(v: &Option<impl ToString>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn render_report(report: &PrescriptionReport, format: Format) -> Result<Vec<u8>, ReportError> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| ReportError::Csv(e.to_string());
            w.write_record(["problem", "theory", "chosen", "eu", "error", "trace_ref"]).map_err(csv_err)?;
            for r in &report.rows {
                let error = r.error.as_ref().map(|e| e.kind.clone()).unwrap_or_default();
                w.write_record([
                    r.problem.clone(),
                    r.theory.name().to_string(),
                    cell(&r.chosen),
                    cell(&r.eu),
                    error,
                    cell(&r.trace_ref()),
                ])
                .map_err(csv_err)?;
            }
            w.into_inner().map_err(|e| ReportError::Csv(e.to_string()))
        }
        Format::Md => {
            let mut s = String::from("| problem | theory | chosen | value | note |\n|---|---|---|---|---|\n");
            for r in &report.rows {
                let note = match (&r.error, &r.trace) {
                    (Some(e), _) => format!("error: {}", e.kind),
                    (None, Some(t)) => match &t.proved {
                        Some(p) => format!("proved `{p}`"),
                        None => "no implication proved".to_string(),
                    },
                    _ => String::new(),
                };
                s.push_str(&format!(
                    "| {} | {} | {} | {} | {} |\n",
                    r.problem,
                    r.theory.name(),
                    cell(&r.chosen).replace('|', "\\|"),
                    cell(&r.eu),
                    note
                ));
            }
            Ok(s.into_bytes())
        }
    }
}
