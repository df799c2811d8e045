//! BFGS with a strong Wolfe line search.
//!
//! The objective closure returns `None` for points outside the feasible
//! domain; the line search treats those as `+inf` and shrinks the step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Strong Wolfe constants and line-search budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfeParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Maximum objective evaluations per line search.
    pub max_evals: usize,
    /// Largest step length tried during bracketing.
    pub alpha_max: f64,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            max_evals: 50,
            alpha_max: 1e10,
        }
    }
}

/// One evaluated point.
#[derive(Debug, Clone)]
pub struct Point<A> {
    pub x: DVector<f64>,
    pub f: f64,
    pub g: DVector<f64>,
    pub aux: A,
}

/// Outcome of a line search.
#[derive(Debug)]
pub enum LineSearch<A> {
    Accepted {
        point: Point<A>,
        alpha: f64,
        evals: usize,
    },
    Failed {
        evals: usize,
        reason: &'static str,
    },
}

/// Searches along `p` from `start` for a step satisfying the strong Wolfe
/// conditions.
pub fn strong_wolfe<A, F>(
    eval: &mut F,
    start: &Point<A>,
    p: &DVector<f64>,
    alpha_init: f64,
    params: &WolfeParams,
) -> LineSearch<A>
where
    F: FnMut(&DVector<f64>) -> Option<Point<A>>,
{
    let f0 = start.f;
    let d0 = start.g.dot(p);
    if !(d0 < 0.0) {
        return LineSearch::Failed {
            evals: 0,
            reason: "not a descent direction",
        };
    }
    let mut evals = 0usize;
    let mut trial = |alpha: f64, evals: &mut usize| -> Option<(Point<A>, f64)> {
        *evals += 1;
        let x = &start.x + p * alpha;
        eval(&x).filter(|pt| pt.f.is_finite()).map(|pt| {
            let d = pt.g.dot(p);
            (pt, d)
        })
    };

    // bracketing phase
    let mut lo = Bracket {
        alpha: 0.0,
        f: f0,
        d: d0,
    };
    let mut alpha = alpha_init.min(params.alpha_max);
    let mut first = true;
    let hi;
    loop {
        if evals >= params.max_evals {
            return LineSearch::Failed {
                evals,
                reason: "evaluation budget exhausted while bracketing",
            };
        }
        match trial(alpha, &mut evals) {
            None => {
                hi = Bracket {
                    alpha,
                    f: f64::INFINITY,
                    d: f64::NAN,
                };
                break;
            }
            Some((pt, d)) => {
                if pt.f > f0 + params.c1 * alpha * d0 || (!first && pt.f >= lo.f) {
                    hi = Bracket { alpha, f: pt.f, d };
                    break;
                }
                if d.abs() <= -params.c2 * d0 {
                    return LineSearch::Accepted {
                        point: pt,
                        alpha,
                        evals,
                    };
                }
                if d >= 0.0 {
                    // the minimum lies between alpha and the previous low
                    let new_lo = Bracket { alpha, f: pt.f, d };
                    hi = lo;
                    lo = new_lo;
                    break;
                }
                lo = Bracket { alpha, f: pt.f, d };
                if alpha >= params.alpha_max {
                    return LineSearch::Failed {
                        evals,
                        reason: "step length reached alpha_max",
                    };
                }
                alpha = (2.0 * alpha).min(params.alpha_max);
                first = false;
            }
        }
    }

    // zoom phase: lo satisfies sufficient decrease and has the lowest value
    let mut hi = hi;
    loop {
        if evals >= params.max_evals {
            return LineSearch::Failed {
                evals,
                reason: "evaluation budget exhausted while zooming",
            };
        }
        let width = (hi.alpha - lo.alpha).abs();
        if width <= 1e-16 * lo.alpha.abs().max(hi.alpha.abs()) || width == 0.0 {
            return LineSearch::Failed {
                evals,
                reason: "bracket collapsed",
            };
        }
        let a = interpolate(&lo, &hi);
        match trial(a, &mut evals) {
            None => {
                hi = Bracket {
                    alpha: a,
                    f: f64::INFINITY,
                    d: f64::NAN,
                };
            }
            Some((pt, d)) => {
                if pt.f > f0 + params.c1 * a * d0 || pt.f >= lo.f {
                    hi = Bracket { alpha: a, f: pt.f, d };
                } else {
                    if d.abs() <= -params.c2 * d0 {
                        return LineSearch::Accepted {
                            point: pt,
                            alpha: a,
                            evals,
                        };
                    }
                    if d * (hi.alpha - lo.alpha) >= 0.0 {
                        hi = lo;
                    }
                    lo = Bracket { alpha: a, f: pt.f, d };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    alpha: f64,
    f: f64,
    d: f64,
}

/// Cubic interpolation between bracket ends, safeguarded to the middle 80%
/// of the interval; bisection when the high end is infeasible.
fn interpolate(lo: &Bracket, hi: &Bracket) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let left = a.min(b);
    let right = a.max(b);
    let margin = 0.1 * (right - left);
    let mid = 0.5 * (a + b);
    if !hi.f.is_finite() || !hi.d.is_finite() {
        return mid;
    }
    let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.d * hi.d;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = hi.d - lo.d + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let t = b - (b - a) * (hi.d + d2 - d1) / denom;
    if t.is_finite() && t >= left + margin && t <= right - margin {
        t
    } else {
        mid
    }
}

/// Quasi-Newton state: current point and inverse-Hessian approximation.
#[derive(Debug, Clone)]
pub struct Bfgs<A> {
    pub current: Point<A>,
    pub inv_hessian: DMatrix<f64>,
    pub params: WolfeParams,
    iterations: usize,
}

/// One accepted quasi-Newton step.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub alpha: f64,
    pub evals: usize,
    pub step_norm: f64,
}

impl<A: Clone> Bfgs<A> {
    pub fn new(start: Point<A>, params: WolfeParams) -> Self {
        let n = start.x.len();
        Self {
            current: start,
            inv_hessian: DMatrix::identity(n, n),
            params,
            iterations: 0,
        }
    }

    /// Performs one line search along the quasi-Newton direction and updates
    /// the inverse Hessian. On failure the state is left untouched.
    pub fn step<F>(&mut self, eval: &mut F) -> Result<StepInfo, &'static str>
    where
        F: FnMut(&DVector<f64>) -> Option<Point<A>>,
    {
        let g = &self.current.g;
        if g.iter().all(|v| *v == 0.0) {
            self.iterations += 1;
            return Ok(StepInfo {
                alpha: 0.0,
                evals: 0,
                step_norm: 0.0,
            });
        }
        let mut p = -(&self.inv_hessian * g);
        if !(p.dot(g) < 0.0) {
            // lost positive definiteness; restart from steepest descent
            self.inv_hessian.fill_with_identity();
            p = -g.clone();
        }
        let alpha_init = if self.iterations == 0 {
            (1.0 / g.norm()).min(1.0)
        } else {
            1.0
        };
        match strong_wolfe(eval, &self.current, &p, alpha_init, &self.params) {
            LineSearch::Failed { reason, .. } => Err(reason),
            LineSearch::Accepted { point, alpha, evals } => {
                let s = &point.x - &self.current.x;
                let y = &point.g - &self.current.g;
                let sy = s.dot(&y);
                if sy > 1e-300 && sy.is_finite() {
                    if self.iterations == 0 {
                        let scale = sy / y.dot(&y);
                        self.inv_hessian *= scale;
                    }
                    let rho = 1.0 / sy;
                    let hy = &self.inv_hessian * &y;
                    let yhy = y.dot(&hy);
                    // H+ = H - ρ (H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
                    self.inv_hessian.ger(-rho, &hy, &s, 1.0);
                    self.inv_hessian.ger(-rho, &s, &hy, 1.0);
                    self.inv_hessian.ger(rho * rho * yhy + rho, &s, &s, 1.0);
                }
                let step_norm = s.norm();
                self.current = point;
                self.iterations += 1;
                Ok(StepInfo {
                    alpha,
                    evals,
                    step_norm,
                })
            }
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}
