//! Reconstruction error metrics and ensemble summaries.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `|u_rec − u_true| / |u_true|`.
pub fn relative_l2(u_true: &DVector<f64>, u_rec: &DVector<f64>) -> Result<f64> {
    if u_true.len() != u_rec.len() {
        return Err(Error::Dimension(format!(
            "truth has length {} but reconstruction has {}",
            u_true.len(),
            u_rec.len()
        )));
    }
    let denom = u_true.norm();
    if denom == 0.0 {
        return Err(Error::validation("relative error undefined for a zero reference field"));
    }
    Ok((u_rec - u_true).norm() / denom)
}

/// `|Θα − y| / |y|`.
pub fn relative_obs_residual(theta: &DMatrix<f64>, alpha: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    if theta.ncols() != alpha.len() || theta.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "sampled basis is {}x{}, coefficients {}, observations {}",
            theta.nrows(),
            theta.ncols(),
            alpha.len(),
            y.len()
        )));
    }
    let denom = y.norm();
    if denom == 0.0 {
        return Err(Error::validation("relative residual undefined for zero observations"));
    }
    Ok((theta * alpha - y).norm() / denom)
}

/// Mean and 95% confidence half-width `1.96·s/√n` (sample standard deviation; 0 for a single value).
pub fn ensemble_stats(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::validation("ensemble statistics of an empty list"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, 1.96 * var.sqrt() / n.sqrt()))
}

/// Outcome of reconstructing one test case with one method.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub case: usize,
    pub r: usize,
    pub method: String,
    /// `None` when the solve failed.
    pub relative_error: Option<f64>,
    pub relative_residual: Option<f64>,
    pub lambda_opt: Option<f64>,
    pub max_violation: Option<f64>,
    pub forecast_error: Option<f64>,
    /// `ok`, or the error category of a failed solve.
    pub status: String,
}

impl CaseRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Ensemble summary for one `(r, method)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub r: usize,
    pub method: String,
    pub mean_error: f64,
    pub error_ci95: f64,
    pub mean_residual: f64,
    pub residual_ci95: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub max_violation: f64,
    pub mean_forecast_error: Option<f64>,
    pub forecast_ci95: Option<f64>,
}

/// Per-case records and their per-`(r, method)` summaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub cases: Vec<CaseRecord>,
}

impl MetricReport {
    pub fn from_cases(cases: Vec<CaseRecord>) -> Self {
        let rows = summarize(&cases);
        Self { rows, cases }
    }

    pub fn row(&self, r: usize, method: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|row| row.r == r && row.method == method)
    }

    /// Summary table: `r,method,mean_error,ci95,mean_residual,ci95,...`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "r,method,mean_error,ci95,mean_residual,ci95,n_ok,n_failed,max_violation,mean_forecast_error,forecast_ci95\n",
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                row.r,
                row.method,
                row.mean_error,
                row.error_ci95,
                row.mean_residual,
                row.residual_ci95,
                row.n_ok,
                row.n_failed,
                row.max_violation,
                opt(row.mean_forecast_error),
                opt(row.forecast_ci95),
            );
        }
        out
    }

    pub fn cases_csv(&self) -> String {
        let mut out = String::from(CASES_HEADER);
        out.push('\n');
        for c in &self.cases {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.case,
                c.r,
                c.method,
                opt(c.relative_error),
                opt(c.relative_residual),
                opt(c.lambda_opt),
                opt(c.max_violation),
                opt(c.forecast_error),
                c.status
            );
        }
        out
    }

    /// Parses the output of [`MetricReport::cases_csv`].
    pub fn parse_cases_csv(text: &str) -> std::result::Result<Vec<CaseRecord>, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CASES_HEADER => {}
            other => return Err(format!("unexpected header {other:?}")),
        }
        let mut cases = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(format!("line {}: expected 9 fields, got {}", lineno + 2, f.len()));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| format!("line {}: {e}", lineno + 2));
            let num = |s: &str| -> std::result::Result<Option<f64>, String> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|e| format!("line {}: {e}", lineno + 2))
                }
            };
            cases.push(CaseRecord {
                case: int(f[0])?,
                r: int(f[1])?,
                method: f[2].to_string(),
                relative_error: num(f[3])?,
                relative_residual: num(f[4])?,
                lambda_opt: num(f[5])?,
                max_violation: num(f[6])?,
                forecast_error: num(f[7])?,
                status: f[8].to_string(),
            });
        }
        Ok(cases)
    }
}

const CASES_HEADER: &str =
    "case,r,method,relative_error,relative_residual,lambda_opt,max_violation,forecast_error,status";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summarize(cases: &[CaseRecord]) -> Vec<MetricRow> {
    let mut keys: Vec<(usize, String)> = Vec::new();
    for c in cases {
        if !keys.iter().any(|(r, m)| *r == c.r && *m == c.method) {
            keys.push((c.r, c.method.clone()));
        }
    }
    keys.into_iter()
        .map(|(r, method)| {
            let group: Vec<&CaseRecord> = cases.iter().filter(|c| c.r == r && c.method == method).collect();
            let ok: Vec<&&CaseRecord> = group.iter().filter(|c| c.is_ok()).collect();
            let collect = |f: fn(&CaseRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|c| f(c)).collect() };
            let stats = |v: &[f64]| ensemble_stats(v).unwrap_or((f64::NAN, f64::NAN));
            let (mean_error, error_ci95) = stats(&collect(|c| c.relative_error));
            let (mean_residual, residual_ci95) = stats(&collect(|c| c.relative_residual));
            let forecasts = collect(|c| c.forecast_error);
            let (fm, fc) = if forecasts.is_empty() {
                (None, None)
            } else {
                let (a, b) = stats(&forecasts);
                (Some(a), Some(b))
            };
            MetricRow {
                r,
                mean_error,
                error_ci95,
                mean_residual,
                residual_ci95,
                n_ok: ok.len(),
                n_failed: group.len() - ok.len(),
                max_violation: collect(|c| c.max_violation).into_iter().fold(0.0, f64::max),
                mean_forecast_error: fm,
                forecast_ci95: fc,
                method,
            }
        })
        .collect()
}
