//! The parameter-separable optimality system
//!
//! ```text
//! [ 2β M1   0      -M2ᵀ  ] [F]   [ 0    ]
//! [ 0       M3     K(μ)ᵀ ] [U] = [ Û(μ) ]
//! [ -M2     K(μ)   0     ] [Λ]   [ d    ]
//! ```
//!
//! with `K(μ) = Σ_q Q_a^q(μ) K^q`, `Û(μ) = Σ_p û_p(μ) Û_p` and scalar output
//! `y(μ) = Σ_k Q_l^k(μ) C_k x`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use socrom_ddrom::{BlockLayout, ScalarFn};

use crate::error::{CoreError, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct StiffnessTerm {
    pub fun: ScalarFn,
    pub matrix: CsrMatrix,
    /// False for advection parts.
    pub symmetric: bool,
}

#[derive(Debug, Clone)]
pub struct AffineSaddleSystem {
    pub beta: f64,
    /// Control mass, `n_control x n_control`.
    pub m1: CsrMatrix,
    /// Control-to-state coupling, `n_state x n_control`.
    pub m2: CsrMatrix,
    /// State mass, `n_state x n_state`.
    pub m3: CsrMatrix,
    pub stiffness: Vec<StiffnessTerm>,
    pub loads: Vec<(ScalarFn, DVector<f64>)>,
    pub boundary: DVector<f64>,
    /// Rows of length `n_control + 2 n_state`.
    pub outputs: Vec<(ScalarFn, DVector<f64>)>,
}

impl AffineSaddleSystem {
    pub fn n_control(&self) -> usize {
        self.m1.nrows()
    }

    pub fn n_state(&self) -> usize {
        self.m3.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n_control() + 2 * self.n_state()
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(self.n_control(), self.n_state())
    }

    pub fn validate(&self) -> Result<()> {
        let (nf, nu) = (self.n_control(), self.n_state());
        let shape = |name: &str, m: &CsrMatrix, r: usize, c: usize| {
            if m.shape() == (r, c) {
                Ok(())
            } else {
                Err(CoreError::Dimension(format!(
                    "{name} is {:?}, expected ({r}, {c})",
                    m.shape()
                )))
            }
        };
        shape("M1", &self.m1, nf, nf)?;
        shape("M2", &self.m2, nu, nf)?;
        shape("M3", &self.m3, nu, nu)?;
        for (q, t) in self.stiffness.iter().enumerate() {
            shape(&format!("K{}", q + 1), &t.matrix, nu, nu)?;
        }
        let len = |name: String, v: &DVector<f64>, n: usize| {
            if v.len() == n {
                Ok(())
            } else {
                Err(CoreError::Dimension(format!("{name} has length {}, expected {n}", v.len())))
            }
        };
        len("d".into(), &self.boundary, nu)?;
        for (p, (_, u)) in self.loads.iter().enumerate() {
            len(format!("U{}", p + 1), u, nu)?;
        }
        for (k, (_, c)) in self.outputs.iter().enumerate() {
            len(format!("C{}", k + 1), c, self.dim())?;
        }
        if !(self.beta > 0.0) {
            return Err(CoreError::InvalidInput(format!("beta must be positive, got {}", self.beta)));
        }
        if self.outputs.is_empty() {
            return Err(CoreError::InvalidInput("system has no output rows".into()));
        }
        Ok(())
    }

    pub fn stiffness_at(&self, mu: f64) -> CsrMatrix {
        let mut k = CsrMatrix::zeros(self.n_state(), self.n_state());
        for t in &self.stiffness {
            k = k.add_scaled(&t.matrix, t.fun.eval(mu));
        }
        k
    }

    pub fn load_at(&self, mu: f64) -> DVector<f64> {
        let mut u = DVector::zeros(self.n_state());
        for (f, v) in &self.loads {
            u.axpy(f.eval(mu), v, 1.0);
        }
        u
    }

    pub fn output_row(&self, mu: f64) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim());
        for (f, v) in &self.outputs {
            c.axpy(f.eval(mu), v, 1.0);
        }
        c
    }

    /// Same system with a different output functional.
    pub fn with_outputs(&self, outputs: Vec<(ScalarFn, DVector<f64>)>) -> Result<Self> {
        let mut s = self.clone();
        s.outputs = outputs;
        s.validate()?;
        Ok(s)
    }
}

/// Scalar outputs of the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputVariant {
    /// `[0; 0; d] + μ [0; Û_1; 0]` applied to the state.
    #[default]
    Full,
    /// Mean of the state coefficients.
    StateMean,
    /// Mean of the control coefficients.
    ControlMean,
}

impl OutputVariant {
    pub const ALL: [OutputVariant; 3] = [Self::Full, Self::StateMean, Self::ControlMean];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::StateMean => "state_mean",
            Self::ControlMean => "control_mean",
        }
    }

    /// Two output rows with weights `1` and `μ`; the mean variants carry a
    /// zero second row.
    pub fn rows(
        &self,
        layout: BlockLayout,
        first_load: &DVector<f64>,
        boundary: &DVector<f64>,
    ) -> Vec<(ScalarFn, DVector<f64>)> {
        let n = layout.dim();
        let mut c1 = DVector::zeros(n);
        let mut c2 = DVector::zeros(n);
        match self {
            Self::Full => {
                c1.rows_mut(layout.adjoint().start, layout.n_state).copy_from(boundary);
                c2.rows_mut(layout.state().start, layout.n_state).copy_from(first_load);
            }
            Self::StateMean => {
                let w = 1.0 / layout.n_state as f64;
                c1.rows_mut(layout.state().start, layout.n_state).fill(w);
            }
            Self::ControlMean => {
                let w = 1.0 / layout.n_control as f64;
                c1.rows_mut(0, layout.n_control).fill(w);
            }
        }
        vec![(ScalarFn::ONE, c1), (ScalarFn::MU, c2)]
    }
}

impl std::str::FromStr for OutputVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown output variant `{s}`"))
    }
}
