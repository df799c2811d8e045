//! L2-optimal fitting loop: quasi-Newton steps on the free parameters,
//! stopped on the relative change of the model output.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bfgs::{Bfgs, Point, WolfeParams};
use crate::error::{DdromError, Result};
use crate::matrices::DdromMatrices;
use crate::model::DEFAULT_FEASIBILITY_CAP;
use crate::objective::value_and_gradient;
use crate::training::{aligned_outputs, OutputSample, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub maxit: usize,
    pub tol: f64,
    pub wolfe: WolfeParams,
    pub feasibility_cap: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            maxit: 1000,
            tol: 1e-16,
            wolfe: WolfeParams::default(),
            feasibility_cap: DEFAULT_FEASIBILITY_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Relative output change fell to `tol`.
    RelativeChange,
    MaxIterations,
    /// The line search found no acceptable step.
    WolfeFailed,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::RelativeChange => "relative_change",
            StopReason::MaxIterations => "max_iterations",
            StopReason::WolfeFailed => "wolfe_failed",
        }
    }
}

/// One row of the iterate table. Row 0 is the initial model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step_length: f64,
    pub step_norm: f64,
    pub line_search_evals: usize,
    pub relative_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub history: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// Line-search failure message, when `stop_reason` is `WolfeFailed`.
    pub failure: Option<String>,
    pub final_relative_change: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub n_params: usize,
    pub objective_evaluations: usize,
    pub options: FitOptions,
}

impl FitReport {
    /// Number of quasi-Newton iterations performed (failed attempts included).
    pub fn iterations(&self) -> usize {
        self.history.last().map_or(0, |r| r.iteration)
            + usize::from(self.stop_reason == StopReason::WolfeFailed)
    }
}

/// Fits the model to `(μ_j, y_j)` pairs. Only the initial matrices and the
/// output samples are read.
pub fn fit(
    initial: &DdromMatrices,
    data: &[OutputSample],
    training: &TrainingSet,
    options: &FitOptions,
) -> Result<(DdromMatrices, FitReport)> {
    let y = aligned_outputs(data, training)?;
    let cap = options.feasibility_cap;
    let mut evaluations = 0usize;

    let mut eval = |p: &DVector<f64>| -> Option<Point<Vec<f64>>> {
        evaluations += 1;
        let m = initial.with_params(p).ok()?;
        let (val, g) = value_and_gradient(&m, &y, training, cap).ok()?;
        let grad = m.free_gradient(&g);
        if !val.value.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Point {
            x: p.clone(),
            f: val.value,
            g: grad,
            aux: val.y_hat,
        })
    };

    let start = eval(&initial.params()).ok_or_else(|| {
        // surface the underlying reason
        match value_and_gradient(initial, &y, training, cap) {
            Err(e) => e,
            Ok(_) => DdromError::Infeasible {
                mu: f64::NAN,
                reason: "non-finite objective at the initial model".into(),
            },
        }
    })?;
    let initial_objective = start.f;
    let n_params = start.x.len();
    let mut history = vec![IterationRecord {
        iteration: 0,
        objective: start.f,
        grad_norm: start.g.norm(),
        step_length: 0.0,
        step_norm: 0.0,
        line_search_evals: 0,
        relative_change: f64::NAN,
    }];

    let mut opt = Bfgs::new(start, options.wolfe);
    let mut stop_reason = StopReason::MaxIterations;
    let mut failure = None;
    let mut final_change = f64::NAN;
    for i in 1..=options.maxit {
        let prev_out = opt.current.aux.clone();
        match opt.step(&mut eval) {
            Err(reason) => {
                stop_reason = StopReason::WolfeFailed;
                failure = Some(reason.to_string());
                break;
            }
            Ok(info) => {
                let out = &opt.current.aux;
                let diff: Vec<f64> = prev_out.iter().zip(out).map(|(a, b)| a - b).collect();
                let denom = training.norm(out);
                let num = training.norm(&diff);
                let change = if num == 0.0 { 0.0 } else { num / denom };
                final_change = change;
                history.push(IterationRecord {
                    iteration: i,
                    objective: opt.current.f,
                    grad_norm: opt.current.g.norm(),
                    step_length: info.alpha,
                    step_norm: info.step_norm,
                    line_search_evals: info.evals,
                    relative_change: change,
                });
                if change <= options.tol {
                    stop_reason = StopReason::RelativeChange;
                    break;
                }
            }
        }
    }

    let fitted = initial.with_params(&opt.current.x)?;
    let report = FitReport {
        final_objective: opt.current.f,
        history,
        stop_reason,
        failure,
        final_relative_change: final_change,
        initial_objective,
        n_params,
        objective_evaluations: evaluations,
        options: *options,
    };
    Ok((fitted, report))
}
