//! Generalized multiscale basis: spectral modes of local Neumann problems on
//! coarse-node neighborhoods, localized by a bilinear partition of unity.
//!
//! On each neighborhood `ω_i` we solve `K φ = λ S φ`, with `K` the Neumann
//! stiffness of `κ` and `S` the mass matrix weighted by
//! `κ̃ = κ Σ_j H² |∇χ_j|²`, keep the lowest modes and multiply them by `χ_i`.
//! The rows of `R` are the resulting fine-grid vectors and the coarse system
//! is `R 𝒜 Rᵀ` on the state and adjoint blocks.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::fem::{element_mass, element_stiffness, CoefficientField, DirichletRestriction};
use crate::fom::FomSolution;
use crate::mesh::{CoarseOverlay, Point};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::system::{AffineSaddleSystem, StiffnessTerm};

/// Values of a function on a subset of fine vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// Bilinear coarse hat functions sampled at the fine vertices of each
/// neighborhood.
pub fn build_partition_of_unity(overlay: &CoarseOverlay) -> Vec<LocalVector> {
    let r = overlay.refinement() as i64;
    let fine = overlay.fine();
    let coarse = overlay.coarse();
    let denom = (r * r) as f64;
    (0..overlay.n_coarse_nodes())
        .map(|node| {
            let (ci, cj) = ((node % (coarse.nx() + 1)) as i64, (node / (coarse.nx() + 1)) as i64);
            let indices = overlay.neighborhood_vertices(node);
            let values = indices
                .iter()
                .map(|&v| {
                    let (fi, fj) = ((v % (fine.nx() + 1)) as i64, (v / (fine.nx() + 1)) as i64);
                    let a = (r - (fi - ci * r).abs()).max(0);
                    let b = (r - (fj - cj * r).abs()).max(0);
                    (a * b) as f64 / denom
                })
                .collect();
            LocalVector { indices, values }
        })
        .collect()
}

/// `Σ_j H² |∇χ_j|²` at a point, for bilinear hats on the coarse squares.
fn gradient_energy(overlay: &CoarseOverlay, p: Point) -> f64 {
    let coarse = overlay.coarse();
    let (hx, hy) = (coarse.hx(), coarse.hy());
    let h = overlay.coarse_h();
    let si = ((p[0] / hx).floor() as usize).min(coarse.nx() - 1);
    let sj = ((p[1] / hy).floor() as usize).min(coarse.ny() - 1);
    let s = p[0] / hx - si as f64;
    let t = p[1] / hy - sj as f64;
    let gx = [-(1.0 - t), 1.0 - t, -t, t].map(|g| g / hx);
    let gy = [-(1.0 - s), -s, 1.0 - s, s].map(|g| g / hy);
    h * h * (0..4).map(|k| gx[k] * gx[k] + gy[k] * gy[k]).sum::<f64>()
}

/// `κ̃` at every fine cell centroid.
pub fn kappa_tilde(overlay: &CoarseOverlay, kappa: &CoefficientField) -> Vec<f64> {
    let fine = overlay.fine();
    (0..fine.n_cells())
        .map(|c| {
            let x = fine.centroid(c);
            kappa.eval(x) * gradient_energy(overlay, x)
        })
        .collect()
}

/// Lowest eigenpairs of one neighborhood problem, eigenvalues ascending and
/// eigenvectors `S`-orthonormal.
#[derive(Debug, Clone)]
pub struct LocalEigenpairs {
    pub node: usize,
    /// Fine vertices of `ω_i`, ascending.
    pub vertices: Vec<usize>,
    pub values: Vec<f64>,
    /// One column per kept mode, indexed like `vertices`.
    pub vectors: DMatrix<f64>,
}

impl LocalEigenpairs {
    /// The lowest `modes` pairs.
    pub fn truncated(&self, modes: usize) -> Self {
        let m = modes.min(self.values.len());
        Self {
            node: self.node,
            vertices: self.vertices.clone(),
            values: self.values[..m].to_vec(),
            vectors: self.vectors.columns(0, m).into_owned(),
        }
    }
}

pub fn local_eigenproblems(
    overlay: &CoarseOverlay,
    kappa: &CoefficientField,
    per_node_modes: usize,
) -> Result<Vec<LocalEigenpairs>> {
    if per_node_modes == 0 {
        return Err(CoreError::InvalidInput("need at least one mode per node".into()));
    }
    let tilde = kappa_tilde(overlay, kappa);
    (0..overlay.n_coarse_nodes())
        .into_par_iter()
        .map(|node| solve_local(overlay, kappa, &tilde, node, per_node_modes))
        .collect()
}

fn solve_local(
    overlay: &CoarseOverlay,
    kappa: &CoefficientField,
    tilde: &[f64],
    node: usize,
    modes: usize,
) -> Result<LocalEigenpairs> {
    let fine = overlay.fine();
    let cells = overlay.neighborhood(node);
    let vertices = overlay.neighborhood_vertices(node);
    if cells.is_empty() {
        return Err(CoreError::Eigen {
            node,
            msg: "neighborhood has zero measure".into(),
        });
    }
    let n = vertices.len();
    if modes > n {
        return Err(CoreError::Eigen {
            node,
            msg: format!("{modes} modes requested from {n} local unknowns"),
        });
    }
    let local = |v: usize| vertices.binary_search(&v).expect("cell vertex in neighborhood");

    let mut k = DMatrix::zeros(n, n);
    let mut s = DMatrix::zeros(n, n);
    for &c in cells {
        let kc = kappa.eval(fine.centroid(c));
        if !(kc > 0.0) {
            return Err(CoreError::Eigen {
                node,
                msg: format!("coefficient {kc} at cell {c}"),
            });
        }
        let ke = element_stiffness(&fine.cell_points(c), kc);
        let me = element_mass(fine.signed_area(c), tilde[c]);
        let idx = fine.cells()[c].map(local);
        for a in 0..3 {
            for b in 0..3 {
                k[(idx[a], idx[b])] += ke[a][b];
                s[(idx[a], idx[b])] += me[a][b];
            }
        }
    }

    let chol = s.clone().cholesky().ok_or_else(|| CoreError::Eigen {
        node,
        msg: "weighted mass matrix is not positive definite".into(),
    })?;
    let l = chol.l();
    let linv_k = l.solve_lower_triangular(&k).ok_or_else(|| CoreError::Eigen {
        node,
        msg: "triangular solve failed".into(),
    })?;
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or_else(|| CoreError::Eigen {
            node,
            msg: "triangular solve failed".into(),
        })?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    // Rayleigh quotients on the original pencil are more accurate than the
    // transformed eigenvalues, notably for the near-zero Neumann mode
    let mut pairs = Vec::with_capacity(modes);
    for &j in order.iter().take(modes) {
        let y = eig.eigenvectors.column(j).into_owned();
        let mut phi = l.tr_solve_lower_triangular(&y).ok_or_else(|| CoreError::Eigen {
            node,
            msg: "back substitution failed".into(),
        })?;
        let imax = phi.iamax();
        if phi[imax] < 0.0 {
            phi.neg_mut();
        }
        let value = phi.dot(&(&k * &phi)) / phi.dot(&(&s * &phi));
        if !value.is_finite() || phi.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::Eigen {
                node,
                msg: "non-finite eigenpair".into(),
            });
        }
        pairs.push((value, phi));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = DMatrix::zeros(n, modes);
    for (m, (_, phi)) in pairs.iter().enumerate() {
        vectors.set_column(m, phi);
    }
    Ok(LocalEigenpairs {
        node,
        vertices,
        values,
        vectors,
    })
}

/// The multiscale space on interior fine DOFs.
#[derive(Debug, Clone)]
pub struct GmsfemBasis {
    /// Rows are basis vectors over interior fine DOFs.
    pub r: CsrMatrix,
    /// `(node, mode)` of every row.
    pub owners: Vec<(usize, usize)>,
    /// Rows kept per coarse node.
    pub counts: Vec<usize>,
    pub partition: Vec<LocalVector>,
    pub eigenvalues: Vec<Vec<f64>>,
}

impl GmsfemBasis {
    pub fn n_basis(&self) -> usize {
        self.r.nrows()
    }

    /// `Rᵀ v`: coarse coefficients to interior fine values.
    pub fn downscale(&self, coarse: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(self.r.tr_mul_vec(coarse.as_slice()))
    }
}

/// `φ_{i,ℓ} = χ_i ⊙ ϕ_{i,ℓ}`, restricted to interior fine vertices. Vectors
/// that vanish after the restriction (possible only without refinement) are
/// dropped.
pub fn assemble_msbasis(
    eigen: &[LocalEigenpairs],
    partition: &[LocalVector],
    restriction: &DirichletRestriction,
) -> Result<GmsfemBasis> {
    if eigen.len() != partition.len() {
        return Err(CoreError::Dimension(format!(
            "{} eigenproblems for {} partition functions",
            eigen.len(),
            partition.len()
        )));
    }
    let mut interior_index = vec![usize::MAX; restriction.n_full()];
    for (k, &v) in restriction.interior().iter().enumerate() {
        interior_index[v] = k;
    }
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut owners = Vec::new();
    let mut counts = vec![0; eigen.len()];
    for (ep, chi) in eigen.iter().zip(partition) {
        if ep.vertices != chi.indices {
            return Err(CoreError::Dimension(format!(
                "node {}: eigenvector and partition supports differ",
                ep.node
            )));
        }
        for m in 0..ep.vectors.ncols() {
            let row: Vec<(usize, f64)> = ep
                .vertices
                .iter()
                .enumerate()
                .filter_map(|(a, &v)| {
                    let k = interior_index[v];
                    let val = chi.values[a] * ep.vectors[(a, m)];
                    (k != usize::MAX && val != 0.0).then_some((k, val))
                })
                .collect();
            if row.is_empty() {
                continue;
            }
            rows.push(row);
            owners.push((ep.node, m));
            counts[ep.node] += 1;
        }
    }
    let mut b = TripletBuilder::new(rows.len(), restriction.n_interior());
    for (i, row) in rows.iter().enumerate() {
        for &(k, v) in row {
            b.push(i, k, v);
        }
    }
    Ok(GmsfemBasis {
        r: b.build(),
        owners,
        counts,
        partition: partition.to_vec(),
        eigenvalues: eigen.iter().map(|e| e.values.clone()).collect(),
    })
}

/// Partition of unity, local eigenproblems and assembly in one call.
pub fn build_gmsfem_basis(
    overlay: &CoarseOverlay,
    kappa: &CoefficientField,
    per_node_modes: usize,
) -> Result<GmsfemBasis> {
    let eig = local_eigenproblems(overlay, kappa, per_node_modes)?;
    let pou = build_partition_of_unity(overlay);
    assemble_msbasis(&eig, &pou, &DirichletRestriction::new(overlay.fine()))
}

/// The optimality system with state and adjoint in the multiscale space;
/// the control keeps its fine dimension.
pub fn coarse_optimality_system(sys: &AffineSaddleSystem, basis: &GmsfemBasis) -> Result<AffineSaddleSystem> {
    let r = &basis.r;
    if r.ncols() != sys.n_state() {
        return Err(CoreError::Dimension(format!(
            "basis acts on {} fine unknowns, system has {}",
            r.ncols(),
            sys.n_state()
        )));
    }
    let rt = r.transpose();
    let galerkin = |m: &CsrMatrix| r.matmul(m).matmul(&rt);
    let (nf, nu) = (sys.n_control(), sys.n_state());
    let nc = r.nrows();
    let restrict = |v: &DVector<f64>| DVector::from_vec(r.mul_vec(v.as_slice()));
    let outputs = sys
        .outputs
        .iter()
        .map(|(f, c)| {
            let mut out = DVector::zeros(nf + 2 * nc);
            out.rows_mut(0, nf).copy_from(&c.rows(0, nf));
            out.rows_mut(nf, nc).copy_from(&restrict(&c.rows(nf, nu).into_owned()));
            out.rows_mut(nf + nc, nc).copy_from(&restrict(&c.rows(nf + nu, nu).into_owned()));
            (*f, out)
        })
        .collect();
    let coarse = AffineSaddleSystem {
        beta: sys.beta,
        m1: sys.m1.clone(),
        m2: r.matmul(&sys.m2),
        m3: galerkin(&sys.m3),
        stiffness: sys
            .stiffness
            .iter()
            .map(|t| StiffnessTerm {
                fun: t.fun,
                matrix: galerkin(&t.matrix),
                symmetric: t.symmetric,
            })
            .collect(),
        loads: sys.loads.iter().map(|(f, u)| (*f, restrict(u))).collect(),
        boundary: restrict(&sys.boundary),
        outputs,
    };
    coarse.validate()?;
    Ok(coarse)
}

/// A coarse solution with state and adjoint mapped back to fine DOFs.
pub fn downscale_solution(basis: &GmsfemBasis, coarse: &FomSolution) -> FomSolution {
    FomSolution {
        u: basis.downscale(&coarse.u),
        lambda: basis.downscale(&coarse.lambda),
        ..coarse.clone()
    }
}
