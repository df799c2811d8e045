//! Assembly and direct solution of the full-order optimality system.

use log::warn;
use nalgebra::DVector;
use rayon::prelude::*;
use socrom_ddrom::{OutputSample, TrainingSet};

use crate::error::{CoreError, Result};
use crate::sparse::{accurate_residual, inverse_norm1_estimate, CompensatedSum, CsrMatrix, SparseLu, TripletBuilder};
use crate::system::AffineSaddleSystem;

/// Backward error a solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// 1-norm condition estimate above which a warning is logged.
pub const CONDITION_WARN: f64 = 1e14;

const MAX_REFINEMENT_STEPS: usize = 10;
/// Refinement continues while the backward error is above this.

#[derive(Debug, Clone, PartialEq)]
pub struct FomSolution {
    pub mu: f64,
    pub f: DVector<f64>,
    pub u: DVector<f64>,
    pub lambda: DVector<f64>,
    pub y: f64,
    /// Componentwise backward error of the returned solution.
    pub residual: f64,
    /// Estimate of the 1-norm condition number of the system matrix.
    pub condition: f64,
}

impl FomSolution {
    /// `x = [F; U; Λ]`
    pub fn state(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.f.len() + self.u.len() + self.lambda.len());
        x.rows_mut(0, self.f.len()).copy_from(&self.f);
        x.rows_mut(self.f.len(), self.u.len()).copy_from(&self.u);
        x.rows_mut(self.f.len() + self.u.len(), self.lambda.len()).copy_from(&self.lambda);
        x
    }
}

/// System matrix and right-hand side `[0; Û(μ); d]` at `mu`.
pub fn assemble_kkt(sys: &AffineSaddleSystem, mu: f64) -> (CsrMatrix, DVector<f64>) {
    let (nf, nu) = (sys.n_control(), sys.n_state());
    let n = sys.dim();
    let k = sys.stiffness_at(mu);
    let mut b = TripletBuilder::with_capacity(
        n,
        n,
        sys.m1.nnz() + 2 * sys.m2.nnz() + sys.m3.nnz() + 2 * k.nnz(),
    );
    b.push_block(0, 0, &sys.m1, 2.0 * sys.beta);
    b.push_block_transposed(0, nf + nu, &sys.m2, -1.0);
    b.push_block(nf, nf, &sys.m3, 1.0);
    b.push_block_transposed(nf, nf + nu, &k, 1.0);
    b.push_block(nf + nu, 0, &sys.m2, -1.0);
    b.push_block(nf + nu, nf, &k, 1.0);

    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(nf, nu).copy_from(&sys.load_at(mu));
    rhs.rows_mut(nf + nu, nu).copy_from(&sys.boundary);
    (b.build(), rhs)
}

pub fn solve_fom(sys: &AffineSaddleSystem, mu: f64) -> Result<FomSolution> {
    let (a, rhs) = assemble_kkt(sys, mu);
    let solver = KktFactor::new(sys, mu, &a).map_err(|msg| CoreError::Singular { mu, msg })?;
    let b = rhs.as_slice();
    let abs_a = a.abs();

    // refinement with residuals in extended precision drives the forward
    // error toward the working precision
    let mut x = solver.solve(b);
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_REFINEMENT_STEPS {
        let r = accurate_residual(&a, &x, b);
        let dx = solver.solve(&r);
        let step = dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !step.is_finite() || step >= 0.5 * last_step {
            break;
        }
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        last_step = step;
        let size = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if step <= f64::EPSILON * size {
            break;
        }
    }
    let residual = backward_error(&a, &abs_a, &x, b);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(CoreError::Singular {
            mu,
            msg: "factorization produced non-finite values".into(),
        });
    }
    if !(residual <= RESIDUAL_TOL) {
        return Err(CoreError::Inaccurate { mu, residual });
    }
    let condition = a.norm1()
        * inverse_norm1_estimate(a.nrows(), |v| solver.solve(v), |v| solver.solve_transpose(v));
    if condition > CONDITION_WARN {
        warn!("system at mu = {mu} is ill-conditioned (cond1 ~ {condition:.3e})");
    }

    let (nf, nu) = (sys.n_control(), sys.n_state());
    let x = DVector::from_vec(x);
    let y = sys.output_row(mu).dot(&x);
    Ok(FomSolution {
        mu,
        f: x.rows(0, nf).into_owned(),
        u: x.rows(nf, nu).into_owned(),
        lambda: x.rows(nf + nu, nu).into_owned(),
        y,
        residual,
        condition,
    })
}

/// Direct solver for the optimality system. With a diagonal control mass
/// `D = 2β M1` the control is eliminated first,
///
/// ```text
/// F = D⁻¹ (b1 + M2ᵀ Λ),    [ M3   Kᵀ        ] [U]   [ b2            ]
///                          [ K   -M2 D⁻¹ M2ᵀ ] [Λ] = [ b3 + M2 D⁻¹ b1 ]
/// ```
///
/// which keeps the factorization sparse when `M2` has dense rows. The
/// transposed system reduces the same way with the transposed block matrix.
enum KktFactor {
    Full(SparseLu),
    Reduced {
        lu: SparseLu,
        d_inv: Vec<f64>,
        m2: CsrMatrix,
        nf: usize,
        nu: usize,
    },
}

impl KktFactor {
    fn new(sys: &AffineSaddleSystem, mu: f64, full: &CsrMatrix) -> std::result::Result<Self, String> {
        let (nf, nu) = (sys.n_control(), sys.n_state());
        let mut d = vec![0.0; nf];
        let mut diagonal = true;
        for (i, j, v) in sys.m1.iter() {
            if i == j {
                d[i] += 2.0 * sys.beta * v;
            } else if v != 0.0 {
                diagonal = false;
                break;
            }
        }
        if !diagonal || d.iter().any(|v| !(v.abs() > 0.0)) {
            return SparseLu::factor(full).map(Self::Full);
        }
        let d_inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        let mut scaled = TripletBuilder::with_capacity(nu, nf, sys.m2.nnz());
        for (i, j, v) in sys.m2.iter() {
            scaled.push(i, j, v * d_inv[j]);
        }
        let g = scaled.build().matmul(&sys.m2.transpose());
        let k = sys.stiffness_at(mu);
        let mut s = TripletBuilder::with_capacity(2 * nu, 2 * nu, sys.m3.nnz() + 2 * k.nnz() + g.nnz());
        s.push_block(0, 0, &sys.m3, 1.0);
        s.push_block_transposed(0, nu, &k, 1.0);
        s.push_block(nu, 0, &k, 1.0);
        s.push_block(nu, nu, &g, -1.0);
        let lu = SparseLu::factor(&s.build())?;
        Ok(Self::Reduced {
            lu,
            d_inv,
            m2: sys.m2.clone(),
            nf,
            nu,
        })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.apply(b, false)
    }

    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        self.apply(b, true)
    }

    fn apply(&self, b: &[f64], transpose: bool) -> Vec<f64> {
        match self {
            Self::Full(lu) if transpose => lu.solve_transpose(b),
            Self::Full(lu) => lu.solve(b),
            Self::Reduced { lu, d_inv, m2, nf, nu } => {
                let (nf, nu) = (*nf, *nu);
                let b1: Vec<f64> = b[..nf].iter().zip(d_inv).map(|(v, w)| v * w).collect();
                let mut rhs = b[nf..].to_vec();
                for (r, v) in rhs[nu..].iter_mut().zip(m2.mul_vec(&b1)) {
                    *r += v;
                }
                let ul = if transpose { lu.solve_transpose(&rhs) } else { lu.solve(&rhs) };
                let m2t_l = m2.tr_mul_vec(&ul[nu..]);
                let mut x = Vec::with_capacity(nf + 2 * nu);
                x.extend(b1.iter().zip(&m2t_l).zip(d_inv).map(|((f, g), w)| f + g * w));
                x.extend_from_slice(&ul);
                x
            }
        }
    }
}

/// Componentwise backward error `max_i |b − A x|_i / (|A| |x| + |b|)_i`.
fn backward_error(a: &CsrMatrix, abs_a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let xa: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let scale = abs_a.mul_vec(&xa);
    (0..b.len())
        .map(|i| {
            let r = (b[i] - ax[i]).abs();
            let s = scale[i] + b[i].abs();
            if s > 0.0 {
                r / s
            } else if r == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// `y = Σ_k Q_l^k(μ) C_k x`
pub fn evaluate_output(x: &DVector<f64>, sys: &AffineSaddleSystem, mu: f64) -> Result<f64> {
    if x.len() != sys.dim() {
        return Err(CoreError::Dimension(format!(
            "state has length {}, system expects {}",
            x.len(),
            sys.dim()
        )));
    }
    Ok(sys.output_row(mu).dot(x))
}

/// Full solves for every sample, in sample order.
pub fn solve_all(sys: &AffineSaddleSystem, samples: &[f64]) -> Result<Vec<FomSolution>> {
    samples.par_iter().map(|&mu| solve_fom(sys, mu)).collect()
}

/// `(μ, y(μ))` for every training sample. This is all the data-driven fit
/// ever sees of the full model.
pub fn sweep_outputs(sys: &AffineSaddleSystem, training: &TrainingSet) -> Result<Vec<OutputSample>> {
    if training.is_empty() {
        return Err(CoreError::InvalidInput("empty sample set".into()));
    }
    Ok(solve_all(sys, training.samples())?
        .into_iter()
        .map(|s| OutputSample { mu: s.mu, y: s.y })
        .collect())
}

/// Relative residuals of the gradient, adjoint and state equations, each
/// scaled by the sum of the norms of its terms. The residual sums are
/// accumulated in extended precision so cancellation between large terms
/// does not pollute them.
pub fn block_residuals(sys: &AffineSaddleSystem, sol: &FomSolution) -> [f64; 3] {
    let k = sys.stiffness_at(sol.mu);
    let kt = k.transpose();
    let m2t = sys.m2.transpose();
    let (f, u, l) = (sol.f.as_slice(), sol.u.as_slice(), sol.lambda.as_slice());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rel = |terms: &[(&CsrMatrix, &[f64], f64)], rhs: &[f64]| {
        let mut acc = vec![CompensatedSum::default(); rhs.len()];
        let mut scale = norm(rhs);
        for &(m, x, s) in terms {
            m.accumulate_mul(x, s, &mut acc);
            scale += s.abs() * norm(&m.mul_vec(x));
        }
        acc.iter_mut().zip(rhs).for_each(|(a, &b)| a.add(-b));
        let r = norm(&acc.iter().map(CompensatedSum::value).collect::<Vec<_>>());
        if scale > 0.0 {
            r / scale
        } else {
            0.0
        }
    };
    let zero_f = vec![0.0; sys.n_control()];
    let gradient = rel(&[(&sys.m1, f, 2.0 * sys.beta), (&m2t, l, -1.0)], &zero_f);
    let adjoint = rel(&[(&sys.m3, u, 1.0), (&kt, l, 1.0)], sys.load_at(sol.mu).as_slice());
    let state = rel(&[(&sys.m2, f, -1.0), (&k, u, 1.0)], sys.boundary.as_slice());
    [gradient, adjoint, state]
}

/// `½ UᵀM3U − UᵀÛ(μ) + β FᵀM1F`, i.e. the discrete cost without the
/// control-independent term `½‖û‖²`.
pub fn reduced_cost(sys: &AffineSaddleSystem, mu: f64, f: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let m3u = sys.m3.mul_vec(u.as_slice());
    let m1f = sys.m1.mul_vec(f.as_slice());
    0.5 * u.as_slice().iter().zip(&m3u).map(|(a, b)| a * b).sum::<f64>() - u.dot(&sys.load_at(mu))
        + sys.beta * f.as_slice().iter().zip(&m1f).map(|(a, b)| a * b).sum::<f64>()
}

/// State equation solved for a given control: `K(μ) U = M2 F + d`.
pub fn solve_state(sys: &AffineSaddleSystem, mu: f64, f: &DVector<f64>) -> Result<DVector<f64>> {
    let k = sys.stiffness_at(mu);
    let lu = SparseLu::factor(&k).map_err(|msg| CoreError::Singular { mu, msg })?;
    let mut rhs = sys.m2.mul_vec(f.as_slice());
    rhs.iter_mut().zip(sys.boundary.iter()).for_each(|(r, d)| *r += d);
    let u = lu.solve(&rhs);
    if !u.iter().all(|v| v.is_finite()) {
        return Err(CoreError::Singular {
            mu,
            msg: "state solve produced non-finite values".into(),
        });
    }
    Ok(DVector::from_vec(u))
}
