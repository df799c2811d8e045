//! Squared discrete L2 output error and its closed-form gradients.
//!
//! With `e_j = y_j - ŷ_j` and weights `w_j`:
//!
//! ```text
//! 𝒥      = Σ_j w_j e_j²
//! ∇_Ã_q  = 2 Σ_j w_j Q̃_a^q(μ_j) e_j x̂_d(μ_j) x̂(μ_j)ᵀ
//! ∇_B̃_p  = -2 Σ_j w_j Q̃_u^p(μ_j) e_j x̂_d(μ_j)
//! ∇_C̃_k  = -2 Σ_j w_j Q̃_l^k(μ_j) e_j x̂(μ_j)ᵀ
//! ```
//!
//! Per-sample solves run in parallel; the weighted sums are reduced in
//! sample order so results do not depend on scheduling.

use rayon::prelude::*;

use crate::error::Result;
use crate::matrices::{DdromMatrices, FullGradient};
use crate::model::{Evaluation, DEFAULT_FEASIBILITY_CAP};
use crate::training::{aligned_outputs, OutputSample, TrainingSet};

/// Objective value together with the model outputs it was computed from.
#[derive(Debug, Clone)]
pub struct ObjectiveValue {
    pub value: f64,
    pub y_hat: Vec<f64>,
}

/// Evaluates the model at every sample, in sample order.
pub fn evaluate_all(m: &DdromMatrices, samples: &[f64], cap: f64) -> Result<Vec<Evaluation>> {
    samples.par_iter().map(|&mu| m.evaluate(mu, cap)).collect()
}

/// Model outputs `ŷ(μ_j)` without dual solves.
pub fn outputs(m: &DdromMatrices, samples: &[f64]) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|&mu| m.solve(mu).map(|(_, y)| y))
        .collect()
}

/// `𝒥 = Σ_j w_j (y_j - ŷ_j)²`
pub fn objective(m: &DdromMatrices, data: &[OutputSample], training: &TrainingSet) -> Result<f64> {
    let y = aligned_outputs(data, training)?;
    Ok(objective_with_cap(m, &y, training, DEFAULT_FEASIBILITY_CAP)?.value)
}

pub fn objective_with_cap(
    m: &DdromMatrices,
    y: &[f64],
    training: &TrainingSet,
    cap: f64,
) -> Result<ObjectiveValue> {
    let evals: Vec<f64> = training
        .samples()
        .par_iter()
        .map(|&mu| {
            m.feasibility_measure(mu).and_then(|f| {
                if f <= cap {
                    m.solve(mu).map(|(_, y)| y)
                } else {
                    Err(crate::error::DdromError::Infeasible {
                        mu,
                        reason: format!("weighted inverse norm {f:e} exceeds cap {cap:e}"),
                    })
                }
            })
        })
        .collect::<Result<_>>()?;
    Ok(ObjectiveValue {
        value: squared_error(y, &evals, training),
        y_hat: evals,
    })
}

/// Full-matrix gradients of `𝒥` at `m`.
pub fn gradients(
    m: &DdromMatrices,
    data: &[OutputSample],
    training: &TrainingSet,
) -> Result<FullGradient> {
    let y = aligned_outputs(data, training)?;
    Ok(value_and_gradient(m, &y, training, DEFAULT_FEASIBILITY_CAP)?.1)
}

/// Objective, outputs and full-matrix gradients from one pass of forward and
/// dual solves.
pub fn value_and_gradient(
    m: &DdromMatrices,
    y: &[f64],
    training: &TrainingSet,
    cap: f64,
) -> Result<(ObjectiveValue, FullGradient)> {
    let evals = evaluate_all(m, training.samples(), cap)?;
    let y_hat: Vec<f64> = evals.iter().map(|e| e.y).collect();
    let value = squared_error(y, &y_hat, training);

    let mut g = FullGradient::zeros_like(m);
    for ((e, &w), &yj) in evals.iter().zip(training.weights()).zip(y) {
        let mu = e.mu;
        // 2 w_j (y_j - ŷ_j)
        let s = 2.0 * w * (yj - e.y);
        if s == 0.0 {
            continue;
        }
        for (q, ga) in g.a.iter_mut().enumerate() {
            ga.ger(s * m.a_weight(q, mu), &e.x_dual, &e.x, 1.0);
        }
        for (p, gb) in g.b.iter_mut().enumerate() {
            gb.axpy(-s * m.b_weight(p, mu), &e.x_dual, 1.0);
        }
        for (k, gc) in g.c.iter_mut().enumerate() {
            gc.axpy(-s * m.c_weight(k, mu), &e.x, 1.0);
        }
    }
    Ok((ObjectiveValue { value, y_hat }, g))
}

/// `Σ_j w_j (y_j - ŷ_j)²`
pub fn squared_error(y: &[f64], y_hat: &[f64], training: &TrainingSet) -> f64 {
    training
        .weights()
        .iter()
        .zip(y.iter().zip(y_hat))
        .map(|(w, (a, b))| w * (a - b) * (a - b))
        .sum()
}
