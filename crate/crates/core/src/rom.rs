//! Snapshots, POD bases and Galerkin-projected reduced systems.
//!
//! Bases follow the `N / 2N` convention: `V` holds `N` control modes and `W`
//! holds `2N` modes shared by state and adjoint, so the reduced system has
//! size `5N`.

use nalgebra::{DMatrix, DVector};
use socrom_ddrom::{DdromMatrices, SaddleBlocks, TrainingSet};

use crate::error::{CoreError, Result};
use crate::fom::{solve_all, FomSolution};
use crate::sparse::project_dense;
use crate::system::AffineSaddleSystem;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-14;

/// FOM solution blocks stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub samples: Vec<f64>,
    pub f: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
}

impl SnapshotSet {
    pub fn from_solutions(sols: &[FomSolution]) -> Result<Self> {
        let first = sols
            .first()
            .ok_or_else(|| CoreError::InvalidInput("no snapshots".into()))?;
        let (nf, nu) = (first.f.len(), first.u.len());
        let col = |n: usize, get: &dyn Fn(&FomSolution) -> &DVector<f64>| {
            DMatrix::from_fn(n, sols.len(), |i, j| get(&sols[j])[i])
        };
        let s = Self {
            samples: sols.iter().map(|s| s.mu).collect(),
            f: col(nf, &|s| &s.f),
            u: col(nu, &|s| &s.u),
            lambda: col(nu, &|s| &s.lambda),
        };
        if s.f.iter().chain(s.u.iter()).chain(s.lambda.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput("snapshot contains non-finite values".into()));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `[U, Λ]`
    pub fn state_adjoint(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(self.u.nrows(), 2 * n);
        m.columns_mut(0, n).copy_from(&self.u);
        m.columns_mut(n, n).copy_from(&self.lambda);
        m
    }
}

/// One full solve per training sample.
pub fn collect_snapshots(sys: &AffineSaddleSystem, training: &TrainingSet) -> Result<SnapshotSet> {
    if training.is_empty() {
        return Err(CoreError::InvalidInput("empty training set".into()));
    }
    SnapshotSet::from_solutions(&solve_all(sys, training.samples())?)
}

/// Orthonormal trial/test bases: `V` for the control, `W` for state and
/// adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// Singular values of the control snapshots (all of them, descending).
    pub control_singular_values: Vec<f64>,
    /// Singular values of `[U, Λ]`, descending.
    pub state_singular_values: Vec<f64>,
}

impl ProjectionBasis {
    /// Basis from given orthonormal columns.
    pub fn new(v: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let b = Self {
            v,
            w,
            control_singular_values: Vec::new(),
            state_singular_values: Vec::new(),
        };
        let err = b.orthonormality_error();
        if err > 1e-10 {
            return Err(CoreError::InvalidInput(format!(
                "basis columns are not orthonormal (error {err:.2e})"
            )));
        }
        Ok(b)
    }

    pub fn identity(n_control: usize, n_state: usize) -> Self {
        Self::new(DMatrix::identity(n_control, n_control), DMatrix::identity(n_state, n_state))
            .expect("identity is orthonormal")
    }

    pub fn n_control(&self) -> usize {
        self.v.ncols()
    }

    pub fn n_state(&self) -> usize {
        self.w.ncols()
    }

    /// `max(‖VᵀV − I‖_max, ‖WᵀW − I‖_max)`
    pub fn orthonormality_error(&self) -> f64 {
        let e = |m: &DMatrix<f64>| {
            let g = m.transpose() * m;
            (g - DMatrix::identity(m.ncols(), m.ncols())).abs().max()
        };
        e(&self.v).max(e(&self.w))
    }

    /// Captured fraction `Σ_{k<r} σ_k² / Σ σ_k²` of the control and
    /// state/adjoint snapshots.
    pub fn energy_fractions(&self) -> (f64, f64) {
        let frac = |s: &[f64], r: usize| {
            let total: f64 = s.iter().map(|x| x * x).sum();
            if total == 0.0 {
                1.0
            } else {
                s.iter().take(r).map(|x| x * x).sum::<f64>() / total
            }
        };
        (
            frac(&self.control_singular_values, self.n_control()),
            frac(&self.state_singular_values, self.n_state()),
        )
    }

    /// `blockdiag(V, W, W) x̂`
    pub fn lift(&self, x_hat: &DVector<f64>) -> DVector<f64> {
        let (rv, rw) = (self.n_control(), self.n_state());
        let (nf, nu) = (self.v.nrows(), self.w.nrows());
        let mut x = DVector::zeros(nf + 2 * nu);
        x.rows_mut(0, nf).copy_from(&(&self.v * x_hat.rows(0, rv)));
        x.rows_mut(nf, nu).copy_from(&(&self.w * x_hat.rows(rv, rw)));
        x.rows_mut(nf + nu, nu).copy_from(&(&self.w * x_hat.rows(rv + rw, rw)));
        x
    }
}

/// Leading left singular vectors, descending, plus all singular values.
fn leading_modes(m: &DMatrix<f64>, r: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let sv: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let top = sv.first().copied().unwrap_or(0.0);
    let available = sv.iter().filter(|&&s| s > RANK_TOL * top && s > 0.0).count();
    if r > available {
        return Err(CoreError::RankDeficient {
            requested: r,
            available,
        });
    }
    let mut modes = DMatrix::zeros(m.nrows(), r);
    for (c, &k) in order.iter().take(r).enumerate() {
        let mut col = u.column(k).into_owned();
        // fix the sign so the largest entry is positive
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        modes.set_column(c, &col);
    }
    Ok((modes, sv))
}

/// `W` = leading `2N` left singular vectors of `[U, Λ]`, `V` = leading `N`
/// of `F`. Raw Euclidean inner product, no mass weighting.
pub fn pod_basis(snapshots: &SnapshotSet, n: usize) -> Result<ProjectionBasis> {
    if n == 0 {
        return Err(CoreError::InvalidInput("reduction level must be at least 1".into()));
    }
    let (v, sv_f) = leading_modes(&snapshots.f, n)?;
    let (w, sv_u) = leading_modes(&snapshots.state_adjoint(), 2 * n)?;
    Ok(ProjectionBasis {
        v,
        w,
        control_singular_values: sv_f,
        state_singular_values: sv_u,
    })
}

/// A Galerkin-reduced saddle system.
#[derive(Debug, Clone)]
pub struct GalerkinRom {
    pub blocks: SaddleBlocks,
}

pub fn project_rom(sys: &AffineSaddleSystem, basis: &ProjectionBasis) -> Result<GalerkinRom> {
    let (v, w) = (&basis.v, &basis.w);
    if v.nrows() != sys.n_control() || w.nrows() != sys.n_state() {
        return Err(CoreError::Dimension(format!(
            "basis is ({}, {}) x ({}, {}), system has {} control and {} state unknowns",
            v.nrows(),
            v.ncols(),
            w.nrows(),
            w.ncols(),
            sys.n_control(),
            sys.n_state()
        )));
    }
    let wt = w.transpose();
    let (nf, nu) = (sys.n_control(), sys.n_state());
    let outputs = sys
        .outputs
        .iter()
        .map(|(f, c)| {
            let mut r = DVector::zeros(v.ncols() + 2 * w.ncols());
            r.rows_mut(0, v.ncols()).copy_from(&(v.transpose() * c.rows(0, nf)));
            r.rows_mut(v.ncols(), w.ncols()).copy_from(&(&wt * c.rows(nf, nu)));
            r.rows_mut(v.ncols() + w.ncols(), w.ncols()).copy_from(&(&wt * c.rows(nf + nu, nu)));
            (*f, r)
        })
        .collect();
    let blocks = SaddleBlocks {
        beta: sys.beta,
        m1: symmetrize(project_dense(v, &sys.m1, v)),
        m2: project_dense(w, &sys.m2, v),
        m3: symmetrize(project_dense(w, &sys.m3, w)),
        stiffness: sys
            .stiffness
            .iter()
            .map(|t| {
                let k = project_dense(w, &t.matrix, w);
                (t.fun, if t.symmetric { symmetrize(k) } else { k })
            })
            .collect(),
        boundary: &wt * &sys.boundary,
        loads: sys.loads.iter().map(|(f, u)| (*f, &wt * u)).collect(),
        outputs,
    };
    Ok(GalerkinRom { blocks })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

impl GalerkinRom {
    pub fn n_control(&self) -> usize {
        self.blocks.m1.nrows()
    }

    pub fn n_state(&self) -> usize {
        self.blocks.m3.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n_control() + 2 * self.n_state()
    }

    pub fn system_matrix(&self, mu: f64) -> DMatrix<f64> {
        let (nf, nu) = (self.n_control(), self.n_state());
        let b = &self.blocks;
        let mut k = DMatrix::zeros(nu, nu);
        for (f, kq) in &b.stiffness {
            k += kq * f.eval(mu);
        }
        let mut a = DMatrix::zeros(self.dim(), self.dim());
        a.view_mut((0, 0), (nf, nf)).copy_from(&(&b.m1 * (2.0 * b.beta)));
        a.view_mut((0, nf + nu), (nf, nu)).copy_from(&(-b.m2.transpose()));
        a.view_mut((nf, nf), (nu, nu)).copy_from(&b.m3);
        a.view_mut((nf, nf + nu), (nu, nu)).copy_from(&k.transpose());
        a.view_mut((nf + nu, 0), (nu, nf)).copy_from(&(-&b.m2));
        a.view_mut((nf + nu, nf), (nu, nu)).copy_from(&k);
        a
    }

    pub fn rhs(&self, mu: f64) -> DVector<f64> {
        let (nf, nu) = (self.n_control(), self.n_state());
        let mut r = DVector::zeros(self.dim());
        for (f, u) in &self.blocks.loads {
            r.rows_mut(nf, nu).axpy(f.eval(mu), u, 1.0);
        }
        r.rows_mut(nf + nu, nu).copy_from(&self.blocks.boundary);
        r
    }

    pub fn output_row(&self, mu: f64) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim());
        for (f, v) in &self.blocks.outputs {
            c.axpy(f.eval(mu), v, 1.0);
        }
        c
    }

    /// Parameter-separable matrices for the data-driven fit.
    pub fn to_ddrom(&self) -> Result<DdromMatrices> {
        Ok(DdromMatrices::structured(self.blocks.clone())?)
    }
}

/// Dense solve of the reduced system; returns `(x̂, ŷ)`.
pub fn solve_rom(rom: &GalerkinRom, mu: f64) -> Result<(DVector<f64>, f64)> {
    let a = rom.system_matrix(mu);
    let x = a
        .lu()
        .solve(&rom.rhs(mu))
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| CoreError::Singular {
            mu,
            msg: "reduced system matrix is singular".into(),
        })?;
    let y = rom.output_row(mu).dot(&x);
    Ok((x, y))
}
