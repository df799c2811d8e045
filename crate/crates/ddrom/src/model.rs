//! Forward and dual solves of the reduced model at one parameter value.

use nalgebra::{DMatrix, DVector};

use crate::error::{DdromError, Result};
use crate::matrices::DdromMatrices;

/// Models whose weighted inverse norm `(1 + Σ_q |Q̃_a^q(μ)|) ‖𝐀(μ)⁻¹‖_F`
/// exceeds this cap at a sample are treated as outside the allowable set.
pub const DEFAULT_FEASIBILITY_CAP: f64 = 1e12;

/// Forward state, dual state and output of the reduced model at one `mu`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub mu: f64,
    /// `x̂ = 𝐀(μ)⁻¹ 𝐁(μ)`
    pub x: DVector<f64>,
    /// `x̂_d = 𝐀(μ)⁻ᵀ 𝐂(μ)ᵀ`
    pub x_dual: DVector<f64>,
    /// `ŷ = 𝐂(μ) x̂`
    pub y: f64,
    /// `(1 + Σ_q |Q̃_a^q(μ)|) ‖𝐀(μ)⁻¹‖_F`
    pub feasibility: f64,
}

impl DdromMatrices {
    /// Reduced state and output at `mu`.
    pub fn solve(&self, mu: f64) -> Result<(DVector<f64>, f64)> {
        let a = self.system_matrix(mu);
        let x = lu_solve(a, self.rhs(mu), mu)?;
        let y = self.output_row(mu).dot(&x);
        Ok((x, y))
    }

    /// Dual state `𝐀(μ)⁻ᵀ 𝐂(μ)ᵀ`.
    pub fn dual_solve(&self, mu: f64) -> Result<DVector<f64>> {
        let at = self.system_matrix(mu).transpose();
        lu_solve(at, self.output_row(mu), mu)
    }

    /// The quantity bounded by membership in the allowable set.
    pub fn feasibility_measure(&self, mu: f64) -> Result<f64> {
        let a = self.system_matrix(mu);
        let inv = a.lu().try_inverse().ok_or_else(|| singular(mu))?;
        Ok(self.weight_sum(mu) * inv.norm())
    }

    /// Forward and dual solves plus the feasibility check against `cap`.
    pub fn evaluate(&self, mu: f64, cap: f64) -> Result<Evaluation> {
        let a = self.system_matrix(mu);
        let lu = a.clone().lu();
        let inv = lu.try_inverse().ok_or_else(|| singular(mu))?;
        let feasibility = self.weight_sum(mu) * inv.norm();
        if !(feasibility <= cap) {
            return Err(DdromError::Infeasible {
                mu,
                reason: format!("weighted inverse norm {feasibility:e} exceeds cap {cap:e}"),
            });
        }
        let x = lu.solve(&self.rhs(mu)).ok_or_else(|| singular(mu))?;
        let c = self.output_row(mu);
        let x_dual = lu_solve(a.transpose(), c.clone(), mu)?;
        let y = c.dot(&x);
        if !y.is_finite() {
            return Err(DdromError::Infeasible {
                mu,
                reason: "non-finite output".into(),
            });
        }
        Ok(Evaluation {
            mu,
            x,
            x_dual,
            y,
            feasibility,
        })
    }

    fn weight_sum(&self, mu: f64) -> f64 {
        1.0 + (1..self.a_terms().len())
            .map(|q| self.a_weight(q, mu).abs())
            .sum::<f64>()
    }
}

fn lu_solve(a: DMatrix<f64>, b: DVector<f64>, mu: f64) -> Result<DVector<f64>> {
    let x = a.lu().solve(&b).ok_or_else(|| singular(mu))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular(mu));
    }
    Ok(x)
}

fn singular(mu: f64) -> DdromError {
    DdromError::Infeasible {
        mu,
        reason: "singular system matrix".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::tests::small_blocks;
    use crate::matrices::{BlockLayout, DdromMatrices};
    use crate::scalar::ScalarFn;

    #[test]
    fn forward_and_dual_agree_on_duality_identity() {
        let m = DdromMatrices::structured(small_blocks()).unwrap();
        for mu in [1.0, 2.5, 7.0] {
            let e = m.evaluate(mu, DEFAULT_FEASIBILITY_CAP).unwrap();
            let lhs = e.y;
            let rhs = m.rhs(mu).dot(&e.x_dual);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            let (x, y) = m.solve(mu).unwrap();
            assert!((x - &e.x).norm() < 1e-12);
            assert_eq!(y, e.y);
        }
    }

    #[test]
    fn symmetric_system_dual_is_forward_with_output_rhs() {
        let l = BlockLayout::new(1, 1);
        let a0 = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let c = DVector::from_vec(vec![1.0, -1.0, 2.0]);
        let m = DdromMatrices::unstructured(
            l,
            a0.clone(),
            vec![],
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            vec![],
            vec![(ScalarFn::ONE, c.clone())],
        )
        .unwrap();
        let xd = m.dual_solve(3.0).unwrap();
        let fwd = a0.lu().solve(&c).unwrap();
        assert!((xd - fwd).norm() < 1e-14);
    }

    #[test]
    fn zero_output_rows_give_zero_dual() {
        let mut b = small_blocks();
        for (_, c) in &mut b.outputs {
            c.fill(0.0);
        }
        let m = DdromMatrices::structured(b).unwrap();
        assert_eq!(m.dual_solve(2.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn output_is_linear_in_constant_rhs() {
        let mut b = small_blocks();
        b.loads.clear();
        let m1 = DdromMatrices::structured(b.clone()).unwrap();
        b.boundary *= 2.0;
        let m2 = DdromMatrices::structured(b).unwrap();
        let (_, y1) = m1.solve(4.0).unwrap();
        let (_, y2) = m2.solve(4.0).unwrap();
        assert!((y2 - 2.0 * y1).abs() < 1e-13 * y1.abs().max(1.0));
    }

    #[test]
    fn singular_matrix_is_infeasible() {
        let l = BlockLayout::new(1, 1);
        let m = DdromMatrices::unstructured(
            l,
            DMatrix::zeros(3, 3),
            vec![],
            DVector::from_element(3, 1.0),
            vec![],
            vec![(ScalarFn::ONE, DVector::from_element(3, 1.0))],
        )
        .unwrap();
        assert!(matches!(m.solve(1.0), Err(DdromError::Infeasible { .. })));
        assert!(matches!(m.evaluate(1.0, 1e12), Err(DdromError::Infeasible { .. })));
    }

    #[test]
    fn cap_rejects_nearly_singular() {
        let l = BlockLayout::new(1, 1);
        let mut a0 = DMatrix::identity(3, 3);
        a0[(2, 2)] = 1e-14;
        let m = DdromMatrices::unstructured(
            l,
            a0,
            vec![],
            DVector::from_element(3, 1.0),
            vec![],
            vec![(ScalarFn::ONE, DVector::from_element(3, 1.0))],
        )
        .unwrap();
        assert!(m.evaluate(1.0, 1e12).is_err());
        assert!(m.evaluate(1.0, 1e15).is_ok());
        assert!(m.feasibility_measure(1.0).unwrap() > 1e13);
    }
}
