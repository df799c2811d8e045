//! Per-parameter error tables and their CSV form.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use socrom_ddrom::{FitReport, TrainingSet};

/// Below this magnitude of `y` the relative error is left undefined.
pub const RELATIVE_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub mu: f64,
    pub y: f64,
    pub y_hat: f64,
    pub abs_err: f64,
    /// `None` where `|y| <= RELATIVE_GUARD`.
    pub rel_err: Option<f64>,
}

impl ErrorRow {
    pub fn new(mu: f64, y: f64, y_hat: f64) -> Self {
        let abs_err = (y - y_hat).abs();
        Self {
            mu,
            y,
            y_hat,
            abs_err,
            rel_err: (y.abs() > RELATIVE_GUARD).then(|| abs_err / y.abs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    /// Discrete L2 norm of `y - ŷ` under the sample weights.
    pub l2_abs: f64,
    /// `l2_abs / ‖y‖_L2`.
    pub l2_rel: f64,
    pub max_abs: f64,
    /// Largest defined relative error.
    pub max_rel: Option<f64>,
    pub undefined_relative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub summary: ErrorSummary,
}

impl ErrorReport {
    pub fn new(set: &TrainingSet, y: &[f64], y_hat: &[f64]) -> Result<Self> {
        if y.len() != set.len() || y_hat.len() != set.len() {
            bail!("{} samples but {} outputs and {} predictions", set.len(), y.len(), y_hat.len());
        }
        let rows: Vec<ErrorRow> = set
            .samples()
            .iter()
            .zip(y.iter().zip(y_hat))
            .map(|(&mu, (&a, &b))| ErrorRow::new(mu, a, b))
            .collect();
        let diff: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| a - b).collect();
        let l2_abs = set.norm(&diff);
        let norm_y = set.norm(y);
        let summary = ErrorSummary {
            l2_abs,
            l2_rel: if norm_y > 0.0 { l2_abs / norm_y } else { f64::NAN },
            max_abs: rows.iter().map(|r| r.abs_err).fold(0.0, f64::max),
            max_rel: rows.iter().filter_map(|r| r.rel_err).reduce(f64::max),
            undefined_relative: rows.iter().filter(|r| r.rel_err.is_none()).count(),
        };
        Ok(Self { rows, summary })
    }

    /// `mu,y,y_hat,abs_err,rel_err`; undefined relative errors are written
    /// as `nan`. Numbers use the shortest round-trip representation.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(["mu", "y", "y_hat", "abs_err", "rel_err"])?;
        for r in &self.rows {
            w.write_record([
                fmt(r.mu),
                fmt(r.y),
                fmt(r.y_hat),
                fmt(r.abs_err),
                r.rel_err.map_or_else(|| "nan".to_string(), fmt),
            ])?;
        }
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let mut mu = Vec::new();
        let mut y = Vec::new();
        let mut y_hat = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .context("short record")?
                    .parse::<f64>()
                    .with_context(|| format!("field {i} of {}", path.display()))
            };
            mu.push(get(0)?);
            y.push(get(1)?);
            y_hat.push(get(2)?);
        }
        let set = TrainingSet::uniform(mu)?;
        Self::new(&set, &y, &y_hat)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_fit_history(report: &FitReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "iteration",
        "objective",
        "grad_norm",
        "step_length",
        "step_norm",
        "line_search_evals",
        "relative_change",
    ])?;
    for h in &report.history {
        w.write_record([
            h.iteration.to_string(),
            fmt(h.objective),
            fmt(h.grad_norm),
            fmt(h.step_length),
            fmt(h.step_norm),
            h.line_search_evals.to_string(),
            fmt(h.relative_change),
        ])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes `(μ, y)` pairs as `mu,y`.
pub fn write_samples(mu: &[f64], y: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["mu", "y"])?;
    for (a, b) in mu.iter().zip(y) {
        w.write_record([fmt(*a), fmt(*b)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `mu,y` pairs.
pub fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .with_context(|| format!("row {} of {} is short", i + 1, path.display()))?
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {} of {}", i + 1, path.display()))
        };
        out.push((parse(0)?, parse(1)?));
    }
    Ok(out)
}

/// A matrix as comma-separated rows.
pub fn write_matrix_csv<W: Write>(mut w: W, rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> std::io::Result<()> {
    for i in 0..rows {
        let line: Vec<String> = (0..cols).map(|j| fmt(at(i, j))).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_guard() {
        let r = ErrorRow::new(1.0, 1e-15, 2e-15);
        assert!(r.rel_err.is_none());
        let r = ErrorRow::new(1.0, 2.0, 1.5);
        assert_eq!(r.rel_err, Some(0.25));
        assert_eq!(r.abs_err, 0.5);
    }

    #[test]
    fn summary_norms() {
        let t = TrainingSet::uniform(vec![1.0, 2.0]).unwrap();
        let rep = ErrorReport::new(&t, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((rep.summary.l2_abs - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((rep.summary.l2_rel - 1.0).abs() < 1e-15);
        assert_eq!(rep.summary.max_abs, 1.0);
        assert_eq!(rep.summary.undefined_relative, 1);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let t = TrainingSet::uniform(vec![1.0, 1.0 / 3.0, 7.25]).unwrap();
        let rep = ErrorReport::new(&t, &[0.1, -2.0 / 7.0, 0.0], &[0.2, 1e-300, 3.0]).unwrap();
        let p = dir.path().join("errors.csv");
        rep.write_csv(&p).unwrap();
        let back = ErrorReport::read_csv(&p).unwrap();
        assert_eq!(back, rep);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("mu,y,y_hat,abs_err,rel_err\n"));
        assert!(text.contains("nan"));
    }
}
