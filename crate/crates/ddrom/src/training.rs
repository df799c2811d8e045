//! Discrete parameter measures and the parameter/output pairs the fitter
//! consumes.

use serde::{Deserialize, Serialize};

use crate::error::{DdromError, Result};

/// Parameter samples with quadrature weights defining a discrete measure on Γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    samples: Vec<f64>,
    weights: Vec<f64>,
}

impl TrainingSet {
    /// Uniform weights `1/n`.
    pub fn uniform(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(DdromError::Training("no samples".into()));
        }
        let w = 1.0 / samples.len() as f64;
        let weights = vec![w; samples.len()];
        Self::weighted(samples, weights)
    }

    pub fn weighted(samples: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(DdromError::Training("no samples".into()));
        }
        if samples.len() != weights.len() {
            return Err(DdromError::Training(format!(
                "{} samples but {} weights",
                samples.len(),
                weights.len()
            )));
        }
        if let Some(mu) = samples.iter().find(|m| !m.is_finite()) {
            return Err(DdromError::Training(format!("non-finite sample {mu}")));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(DdromError::Training("negative or NaN weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DdromError::Training(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { samples, weights })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True when every sample lies in `[a, b]`.
    pub fn within(&self, a: f64, b: f64) -> bool {
        self.samples.iter().all(|&m| m >= a && m <= b)
    }

    /// Weighted inner product `Σ w_j u_j v_j`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.len());
        debug_assert_eq!(v.len(), self.len());
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// Discrete L2 norm `(Σ w_j v_j^2)^{1/2}`.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).sqrt()
    }
}

/// One measured parameter/output pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputSample {
    pub mu: f64,
    pub y: f64,
}

/// Checks that `data[j].mu` matches `training.samples()[j]` and returns the
/// outputs in training order.
pub fn aligned_outputs(data: &[OutputSample], training: &TrainingSet) -> Result<Vec<f64>> {
    if data.len() != training.len() {
        return Err(DdromError::Training(format!(
            "{} outputs for {} training samples",
            data.len(),
            training.len()
        )));
    }
    data.iter()
        .zip(training.samples())
        .map(|(d, &mu)| {
            if (d.mu - mu).abs() > 1e-12 * mu.abs().max(1.0) {
                Err(DdromError::Training(format!(
                    "output sample at mu = {} does not match training mu = {}",
                    d.mu, mu
                )))
            } else if !d.y.is_finite() {
                Err(DdromError::Training(format!("non-finite output at mu = {mu}")))
            } else {
                Ok(d.y)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_weights_sum_to_one() {
        let t = TrainingSet::uniform(vec![1.0, 2.0, 3.0]).unwrap();
        assert!((t.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(t.within(1.0, 3.0));
        assert!(!t.within(1.5, 3.0));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(TrainingSet::weighted(vec![1.0, 2.0], vec![0.7, 0.7]).is_err());
        assert!(TrainingSet::weighted(vec![1.0, 2.0], vec![1.5, -0.5]).is_err());
        assert!(TrainingSet::weighted(vec![1.0], vec![0.5, 0.5]).is_err());
        assert!(TrainingSet::uniform(vec![]).is_err());
    }

    #[test]
    fn norm_is_weighted() {
        let t = TrainingSet::weighted(vec![0.0, 1.0], vec![0.25, 0.75]).unwrap();
        assert!((t.norm(&[2.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alignment_is_checked() {
        let t = TrainingSet::uniform(vec![1.0, 2.0]).unwrap();
        let ok = [OutputSample { mu: 1.0, y: 3.0 }, OutputSample { mu: 2.0, y: 4.0 }];
        assert_eq!(aligned_outputs(&ok, &t).unwrap(), vec![3.0, 4.0]);
        let bad = [OutputSample { mu: 1.0, y: 3.0 }, OutputSample { mu: 2.5, y: 4.0 }];
        assert!(aligned_outputs(&bad, &t).is_err());
        assert!(aligned_outputs(&ok[..1], &t).is_err());
    }
}
