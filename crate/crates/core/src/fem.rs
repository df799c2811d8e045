//! Finite-element assembly: continuous P1 for state and adjoint, P0 per cell
//! for the control.
//!
//! Everything here is assembled over all mesh vertices; [`DirichletRestriction`]
//! removes the boundary rows and columns afterwards. Mass matrices are exact.
//! Stiffness and advection evaluate their coefficients at the cell centroid,
//! loads use the edge-midpoint rule.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::mesh::{Point, StructuredMesh};
use crate::quadrature::{self, EDGE_MIDPOINTS};
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    HighContrast,
    AffineTerm,
    Advection,
    DesiredState,
    Custom,
}

/// A pure scalar function of position.
#[derive(Clone)]
pub struct CoefficientField {
    kind: FieldKind,
    label: String,
    eval: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .finish()
    }
}

impl CoefficientField {
    pub fn new(
        kind: FieldKind,
        label: impl Into<String>,
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind,
            label: label.into(),
            eval: Arc::new(f),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(FieldKind::Custom, format!("{value}"), move |_| value)
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        (self.eval)(p)
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Smallest value over all cell centroids of `mesh`.
    pub fn min_at_centroids(&self, mesh: &StructuredMesh) -> f64 {
        (0..mesh.n_cells())
            .map(|c| self.eval(mesh.centroid(c)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

/// Inclusion geometry of a high-contrast field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionPattern {
    pub rects: Vec<Rect>,
}

impl Default for InclusionPattern {
    /// Two horizontal channels, a vertical channel and three blocks; about
    /// 15% of the unit square.
    fn default() -> Self {
        Self {
            rects: vec![
                Rect::new(0.1, 0.9, 0.2, 0.25),
                Rect::new(0.1, 0.9, 0.55, 0.6),
                Rect::new(0.25, 0.35, 0.7, 0.9),
                Rect::new(0.6, 0.75, 0.3, 0.45),
                Rect::new(0.65, 0.8, 0.75, 0.85),
                Rect::new(0.45, 0.5, 0.05, 0.45),
            ],
        }
    }
}

impl InclusionPattern {
    pub fn validate(&self) -> Result<()> {
        for r in &self.rects {
            let ok = [r.x0, r.x1, r.y0, r.y1]
                .iter()
                .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
                && r.x0 < r.x1
                && r.y0 < r.y1;
            if !ok {
                return Err(CoreError::InvalidInput(format!(
                    "inclusion {r:?} is empty or leaves the unit square"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        self.rects.iter().any(|r| r.contains(p))
    }
}

/// Background 1, `contrast` inside the inclusions. Cell-wise constant once
/// sampled at centroids.
pub fn make_high_contrast_field(contrast: f64, pattern: &InclusionPattern) -> Result<CoefficientField> {
    if !(contrast >= 1.0) || !contrast.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "contrast must be a finite value >= 1, got {contrast}"
        )));
    }
    pattern.validate()?;
    let pattern = pattern.clone();
    Ok(CoefficientField::new(
        FieldKind::HighContrast,
        format!("high_contrast({contrast})"),
        move |p| if pattern.contains(p) { contrast } else { 1.0 },
    ))
}

/// Gradients of the three barycentric functions and the (positive) area.
pub fn p1_gradients(p: &[Point; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let g = [
        [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
        [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
        [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
    ];
    (g, 0.5 * det.abs())
}

/// `κ |T| ∇λ_a · ∇λ_b` for one cell.
pub fn element_stiffness(p: &[Point; 3], kappa: f64) -> [[f64; 3]; 3] {
    let (g, area) = p1_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = kappa * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    k
}

/// Exact P1 mass matrix `|T|/12 (1 + δ_ab)` for one cell, scaled by `w`.
pub fn element_mass(area: f64, w: f64) -> [[f64; 3]; 3] {
    let d = w * area / 6.0;
    let o = w * area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// `M1`: P0 mass, the diagonal of cell areas.
pub fn assemble_control_mass(mesh: &StructuredMesh) -> CsrMatrix {
    let n = mesh.n_cells();
    let mut b = TripletBuilder::with_capacity(n, n, n);
    for c in 0..n {
        b.push(c, c, mesh.signed_area(c));
    }
    b.build()
}

/// `M2`: `(φ_j, ψ_k)` with rows indexed by vertices, columns by cells.
pub fn assemble_coupling(mesh: &StructuredMesh) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.n_vertices(), mesh.n_cells(), 3 * mesh.n_cells());
    for (c, tri) in mesh.cells().iter().enumerate() {
        let third = mesh.signed_area(c) / 3.0;
        for &v in tri {
            b.push(v, c, third);
        }
    }
    b.build()
}

/// `M3`: P1 mass.
pub fn assemble_state_mass(mesh: &StructuredMesh) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(n, n, 9 * mesh.n_cells());
    for (c, tri) in mesh.cells().iter().enumerate() {
        let m = element_mass(mesh.signed_area(c), 1.0);
        for a in 0..3 {
            for bb in 0..3 {
                b.push(tri[a], tri[bb], m[a][bb]);
            }
        }
    }
    b.build()
}

/// `(M1, M2, M3)` over all vertices.
pub fn assemble_mass_matrices(mesh: &StructuredMesh) -> (CsrMatrix, CsrMatrix, CsrMatrix) {
    (
        assemble_control_mass(mesh),
        assemble_coupling(mesh),
        assemble_state_mass(mesh),
    )
}

/// Diffusion matrix `(κ ∇ψ_j, ∇ψ_i)`; rejects `κ <= 0` at any centroid.
pub fn assemble_stiffness(mesh: &StructuredMesh, coeff: &CoefficientField) -> Result<CsrMatrix> {
    for c in 0..mesh.n_cells() {
        let x = mesh.centroid(c);
        let value = coeff.eval(x);
        if !(value > 0.0) {
            return Err(CoreError::NonPositiveCoefficient { x: x[0], y: x[1], value });
        }
    }
    Ok(assemble_stiffness_term(mesh, coeff))
}

/// Like [`assemble_stiffness`] without the sign check, for affine terms that
/// are only positive in combination.
pub fn assemble_stiffness_term(mesh: &StructuredMesh, coeff: &CoefficientField) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(n, n, 9 * mesh.n_cells());
    for (c, tri) in mesh.cells().iter().enumerate() {
        let k = element_stiffness(&mesh.cell_points(c), coeff.eval(mesh.centroid(c)));
        for a in 0..3 {
            for bb in 0..3 {
                b.push(tri[a], tri[bb], k[a][bb]);
            }
        }
    }
    b.build()
}

/// Advection matrix with entries `(ψ_i, δ · ∇ψ_j)`, test function by row.
pub fn assemble_advection(
    mesh: &StructuredMesh,
    delta: (&CoefficientField, &CoefficientField),
) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(n, n, 9 * mesh.n_cells());
    for (c, tri) in mesh.cells().iter().enumerate() {
        let (g, area) = p1_gradients(&mesh.cell_points(c));
        let x = mesh.centroid(c);
        let (d1, d2) = (delta.0.eval(x), delta.1.eval(x));
        for a in 0..3 {
            for bb in 0..3 {
                b.push(tri[a], tri[bb], area / 3.0 * (d1 * g[bb][0] + d2 * g[bb][1]));
            }
        }
    }
    b.build()
}

/// Load vector `(f, ψ_k)` over all vertices.
pub fn assemble_load(mesh: &StructuredMesh, f: &CoefficientField) -> DVector<f64> {
    let mut out = DVector::zeros(mesh.n_vertices());
    for (c, tri) in mesh.cells().iter().enumerate() {
        let p = mesh.cell_points(c);
        let area = mesh.signed_area(c);
        for (bary, w) in EDGE_MIDPOINTS.iter() {
            let fx = f.eval(quadrature::to_physical(&p, bary));
            for a in 0..3 {
                out[tri[a]] += area * w * fx * bary[a];
            }
        }
    }
    out
}

/// One load vector per separated term `ū_p` of the desired state.
pub fn assemble_desired_state_loads(mesh: &StructuredMesh, terms: &[CoefficientField]) -> Vec<DVector<f64>> {
    terms.iter().map(|t| assemble_load(mesh, t)).collect()
}

/// Elimination of homogeneous Dirichlet vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletRestriction {
    n_full: usize,
    interior: Vec<usize>,
}

impl DirichletRestriction {
    pub fn new(mesh: &StructuredMesh) -> Self {
        Self {
            n_full: mesh.n_vertices(),
            interior: mesh.interior_vertices(),
        }
    }

    pub fn n_full(&self) -> usize {
        self.n_full
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Interior rows and columns of a vertex-by-vertex matrix.
    pub fn restrict_matrix(&self, m: &CsrMatrix) -> CsrMatrix {
        m.submatrix(&self.interior, &self.interior)
    }

    /// Interior rows of a vertex-by-anything matrix.
    pub fn restrict_rows(&self, m: &CsrMatrix) -> CsrMatrix {
        let cols: Vec<usize> = (0..m.ncols()).collect();
        m.submatrix(&self.interior, &cols)
    }

    pub fn restrict_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.interior.len(), self.interior.iter().map(|&i| v[i]))
    }

    /// Pads interior values with zeros on the boundary.
    pub fn extend_vector(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_full);
        for (k, &i) in self.interior.iter().enumerate() {
            out[i] = v[k];
        }
        out
    }
}
