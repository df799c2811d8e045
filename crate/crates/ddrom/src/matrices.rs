//! The tuple of reduced matrices `(Ã_q, B̃_p, C̃_k)` and its free-parameter
//! vectorization.
//!
//! The reduced state is ordered `[control; state; adjoint]` with block sizes
//! `(n_control, n_state, n_state)`. In the structured parameterization the
//! saddle skeleton
//!
//! ```text
//! Ã_0 = [ 2β M̃1   0    -M̃2ᵀ ]     Ã_q = [ 0  0    0    ]
//!       [ 0       M̃3   0    ]           [ 0  0    K̃_qᵀ ]
//!       [ -M̃2     0    0    ]           [ 0  K̃_q  0    ]
//!
//! B̃_0 = [0; 0; d̃]   B̃_p = [0; Ũ_p; 0]
//! ```
//!
//! is fixed and only `M̃1, M̃2, M̃3, K̃_q, d̃, Ũ_p, C̃_k` are free. Tied entries
//! (`-M̃2` and `-M̃2ᵀ`, `K̃_q` and `K̃_qᵀ`) share one parameter. The
//! unstructured parameterization frees every entry of every matrix.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DdromError, Result};
use crate::scalar::ScalarFn;

/// Block sizes of the reduced saddle system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub n_control: usize,
    pub n_state: usize,
}

impl BlockLayout {
    pub fn new(n_control: usize, n_state: usize) -> Self {
        Self { n_control, n_state }
    }

    /// Total reduced dimension `n_control + 2 n_state`.
    pub fn dim(&self) -> usize {
        self.n_control + 2 * self.n_state
    }

    pub fn control(&self) -> Range<usize> {
        0..self.n_control
    }

    pub fn state(&self) -> Range<usize> {
        self.n_control..self.n_control + self.n_state
    }

    pub fn adjoint(&self) -> Range<usize> {
        self.n_control + self.n_state..self.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// Only the saddle sub-blocks are free; the skeleton is reimposed.
    #[default]
    Structured,
    /// Every entry of every matrix is free.
    Unstructured,
}

/// Sub-blocks of a structured reduced saddle system.
#[derive(Debug, Clone)]
pub struct SaddleBlocks {
    pub beta: f64,
    /// `n_control x n_control`
    pub m1: DMatrix<f64>,
    /// `n_state x n_control`
    pub m2: DMatrix<f64>,
    /// `n_state x n_state`
    pub m3: DMatrix<f64>,
    /// Stiffness terms `(Q̃_a^q, K̃_q)`, each `n_state x n_state`.
    pub stiffness: Vec<(ScalarFn, DMatrix<f64>)>,
    /// Boundary vector `d̃` (length `n_state`).
    pub boundary: DVector<f64>,
    /// Desired-state loads `(Q̃_u^p, Ũ_p)`, each of length `n_state`.
    pub loads: Vec<(ScalarFn, DVector<f64>)>,
    /// Output rows `(Q̃_l^k, C̃_k)`, each of length `n_control + 2 n_state`.
    pub outputs: Vec<(ScalarFn, DVector<f64>)>,
}

/// A data-driven reduced-order model in parameter-separable form.
///
/// `a[0]` and `b[0]` carry the implicit weight 1; `a_funs[q-1]` weights
/// `a[q]`, likewise for `b`. Every output row has its own weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DdromMatrices {
    layout: BlockLayout,
    beta: f64,
    parameterization: Parameterization,
    a: Vec<DMatrix<f64>>,
    a_funs: Vec<ScalarFn>,
    b: Vec<DVector<f64>>,
    b_funs: Vec<ScalarFn>,
    c: Vec<DVector<f64>>,
    c_funs: Vec<ScalarFn>,
}

/// Gradients of a scalar with respect to every full matrix of the tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct FullGradient {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
    pub c: Vec<DVector<f64>>,
}

impl DdromMatrices {
    /// Builds a structured model from its saddle sub-blocks.
    pub fn structured(blocks: SaddleBlocks) -> Result<Self> {
        let nf = blocks.m1.nrows();
        let nu = blocks.m3.nrows();
        let layout = BlockLayout::new(nf, nu);
        check_shape("M1", &blocks.m1, nf, nf)?;
        check_shape("M2", &blocks.m2, nu, nf)?;
        check_shape("M3", &blocks.m3, nu, nu)?;
        for (q, (_, k)) in blocks.stiffness.iter().enumerate() {
            check_shape(&format!("K{}", q + 1), k, nu, nu)?;
        }
        check_len("d", &blocks.boundary, nu)?;
        for (p, (_, u)) in blocks.loads.iter().enumerate() {
            check_len(&format!("U{}", p + 1), u, nu)?;
        }
        for (k, (_, c)) in blocks.outputs.iter().enumerate() {
            check_len(&format!("C{}", k + 1), c, layout.dim())?;
        }
        if !(blocks.beta > 0.0) {
            return Err(DdromError::Dimension(format!(
                "structured model needs beta > 0, got {}",
                blocks.beta
            )));
        }
        if blocks.outputs.is_empty() {
            return Err(DdromError::Dimension("no output rows".into()));
        }

        let mut a = vec![mass_skeleton(layout, blocks.beta, &blocks.m1, &blocks.m2, &blocks.m3)];
        let mut a_funs = Vec::with_capacity(blocks.stiffness.len());
        for (f, k) in &blocks.stiffness {
            a.push(stiffness_skeleton(layout, k));
            a_funs.push(*f);
        }
        let mut b = vec![embed(layout.dim(), layout.adjoint(), &blocks.boundary)];
        let mut b_funs = Vec::with_capacity(blocks.loads.len());
        for (f, u) in &blocks.loads {
            b.push(embed(layout.dim(), layout.state(), u));
            b_funs.push(*f);
        }
        let (c_funs, c) = blocks.outputs.into_iter().unzip();
        Ok(Self {
            layout,
            beta: blocks.beta,
            parameterization: Parameterization::Structured,
            a,
            a_funs,
            b,
            b_funs,
            c,
            c_funs,
        })
    }

    /// Builds an unstructured model from full matrices. `a_terms` and
    /// `b_terms` exclude the constant terms `a0`, `b0`.
    pub fn unstructured(
        layout: BlockLayout,
        a0: DMatrix<f64>,
        a_terms: Vec<(ScalarFn, DMatrix<f64>)>,
        b0: DVector<f64>,
        b_terms: Vec<(ScalarFn, DVector<f64>)>,
        outputs: Vec<(ScalarFn, DVector<f64>)>,
    ) -> Result<Self> {
        let r = layout.dim();
        check_shape("A0", &a0, r, r)?;
        check_len("B0", &b0, r)?;
        for (q, (_, m)) in a_terms.iter().enumerate() {
            check_shape(&format!("A{}", q + 1), m, r, r)?;
        }
        for (p, (_, v)) in b_terms.iter().enumerate() {
            check_len(&format!("B{}", p + 1), v, r)?;
        }
        for (k, (_, v)) in outputs.iter().enumerate() {
            check_len(&format!("C{}", k + 1), v, r)?;
        }
        if outputs.is_empty() {
            return Err(DdromError::Dimension("no output rows".into()));
        }
        let (a_funs, rest): (Vec<_>, Vec<_>) = a_terms.into_iter().unzip();
        let (b_funs, brest): (Vec<_>, Vec<_>) = b_terms.into_iter().unzip();
        let (c_funs, c) = outputs.into_iter().unzip();
        let mut a = vec![a0];
        a.extend(rest);
        let mut b = vec![b0];
        b.extend(brest);
        Ok(Self {
            layout,
            beta: 0.0,
            parameterization: Parameterization::Unstructured,
            a,
            a_funs,
            b,
            b_funs,
            c,
            c_funs,
        })
    }

    /// Same matrices, optimized over every entry.
    pub fn into_unstructured(mut self) -> Self {
        self.parameterization = Parameterization::Unstructured;
        self
    }

    pub fn with_parameterization(self, p: Parameterization) -> Result<Self> {
        match p {
            Parameterization::Unstructured => Ok(self.into_unstructured()),
            Parameterization::Structured if self.parameterization == p => Ok(self),
            Parameterization::Structured => {
                let blocks = self.saddle_blocks();
                let rebuilt = Self::structured(blocks)?;
                // only accept when the full matrices actually follow the skeleton
                let same = rebuilt
                    .a
                    .iter()
                    .zip(&self.a)
                    .all(|(x, y)| (x - y).abs().max() <= 1e-14 * y.abs().max().max(1.0))
                    && rebuilt.b.iter().zip(&self.b).all(|(x, y)| x == y);
                if same {
                    Ok(rebuilt)
                } else {
                    Err(DdromError::Dimension(
                        "matrices do not follow the saddle skeleton".into(),
                    ))
                }
            }
        }
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn a_terms(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    pub fn b_terms(&self) -> &[DVector<f64>] {
        &self.b
    }

    pub fn c_terms(&self) -> &[DVector<f64>] {
        &self.c
    }

    pub fn a_funs(&self) -> &[ScalarFn] {
        &self.a_funs
    }

    pub fn b_funs(&self) -> &[ScalarFn] {
        &self.b_funs
    }

    pub fn c_funs(&self) -> &[ScalarFn] {
        &self.c_funs
    }

    /// Weight of `a[q]` at `mu` (`1` for `q = 0`).
    pub fn a_weight(&self, q: usize, mu: f64) -> f64 {
        if q == 0 {
            1.0
        } else {
            self.a_funs[q - 1].eval(mu)
        }
    }

    pub fn b_weight(&self, p: usize, mu: f64) -> f64 {
        if p == 0 {
            1.0
        } else {
            self.b_funs[p - 1].eval(mu)
        }
    }

    pub fn c_weight(&self, k: usize, mu: f64) -> f64 {
        self.c_funs[k].eval(mu)
    }

    /// `𝐀(μ) = Σ_q Q̃_a^q(μ) Ã_q`
    pub fn system_matrix(&self, mu: f64) -> DMatrix<f64> {
        let mut m = self.a[0].clone();
        for q in 1..self.a.len() {
            m += &self.a[q] * self.a_weight(q, mu);
        }
        m
    }

    /// `𝐁(μ) = Σ_p Q̃_u^p(μ) B̃_p`
    pub fn rhs(&self, mu: f64) -> DVector<f64> {
        let mut v = self.b[0].clone();
        for p in 1..self.b.len() {
            v.axpy(self.b_weight(p, mu), &self.b[p], 1.0);
        }
        v
    }

    /// `𝐂(μ)ᵀ = Σ_k Q̃_l^k(μ) C̃_kᵀ`
    pub fn output_row(&self, mu: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for k in 0..self.c.len() {
            v.axpy(self.c_weight(k, mu), &self.c[k], 1.0);
        }
        v
    }

    /// Extracts the saddle sub-blocks from the full matrices. Entries off the
    /// skeleton are ignored.
    pub fn saddle_blocks(&self) -> SaddleBlocks {
        let l = self.layout;
        let a0 = &self.a[0];
        let two_beta = 2.0 * self.beta;
        let m1 = if two_beta > 0.0 {
            block(a0, l.control(), l.control()) / two_beta
        } else {
            block(a0, l.control(), l.control())
        };
        let m2 = -block(a0, l.adjoint(), l.control());
        let m3 = block(a0, l.state(), l.state());
        let stiffness = self.a[1..]
            .iter()
            .zip(&self.a_funs)
            .map(|(a, f)| (*f, block(a, l.adjoint(), l.state())))
            .collect();
        let boundary = self.b[0].rows_range(l.adjoint()).into_owned();
        let loads = self.b[1..]
            .iter()
            .zip(&self.b_funs)
            .map(|(b, f)| (*f, b.rows_range(l.state()).into_owned()))
            .collect();
        let outputs = self.c_funs.iter().copied().zip(self.c.iter().cloned()).collect();
        SaddleBlocks {
            beta: self.beta,
            m1,
            m2,
            m3,
            stiffness,
            boundary,
            loads,
            outputs,
        }
    }

    /// Number of free parameters under the current parameterization.
    pub fn n_params(&self) -> usize {
        let l = self.layout;
        let (nf, nu, r) = (l.n_control, l.n_state, l.dim());
        let outputs = self.c.len() * r;
        match self.parameterization {
            Parameterization::Structured => {
                nf * nf
                    + nu * nf
                    + nu * nu
                    + (self.a.len() - 1) * nu * nu
                    + nu
                    + (self.b.len() - 1) * nu
                    + outputs
            }
            Parameterization::Unstructured => {
                self.a.len() * r * r + self.b.len() * r + outputs
            }
        }
    }

    /// The free parameters as one vector (column-major within each matrix).
    pub fn params(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        match self.parameterization {
            Parameterization::Structured => {
                let s = self.saddle_blocks();
                out.extend_from_slice(s.m1.as_slice());
                out.extend_from_slice(s.m2.as_slice());
                out.extend_from_slice(s.m3.as_slice());
                for (_, k) in &s.stiffness {
                    out.extend_from_slice(k.as_slice());
                }
                out.extend_from_slice(s.boundary.as_slice());
                for (_, u) in &s.loads {
                    out.extend_from_slice(u.as_slice());
                }
            }
            Parameterization::Unstructured => {
                for a in &self.a {
                    out.extend_from_slice(a.as_slice());
                }
                for b in &self.b {
                    out.extend_from_slice(b.as_slice());
                }
            }
        }
        for c in &self.c {
            out.extend_from_slice(c.as_slice());
        }
        DVector::from_vec(out)
    }

    /// A copy with the free parameters replaced; the skeleton (zero and tied
    /// entries) is rebuilt from the parameters.
    pub fn with_params(&self, p: &DVector<f64>) -> Result<Self> {
        if p.len() != self.n_params() {
            return Err(DdromError::Dimension(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                p.len()
            )));
        }
        let l = self.layout;
        let (nf, nu, r) = (l.n_control, l.n_state, l.dim());
        let mut cur = Cursor::new(p.as_slice());
        let mut out = self.clone();
        match self.parameterization {
            Parameterization::Structured => {
                let m1 = cur.matrix(nf, nf);
                let m2 = cur.matrix(nu, nf);
                let m3 = cur.matrix(nu, nu);
                out.a[0] = mass_skeleton(l, self.beta, &m1, &m2, &m3);
                for q in 1..self.a.len() {
                    out.a[q] = stiffness_skeleton(l, &cur.matrix(nu, nu));
                }
                out.b[0] = embed(r, l.adjoint(), &cur.vector(nu));
                for p in 1..self.b.len() {
                    out.b[p] = embed(r, l.state(), &cur.vector(nu));
                }
            }
            Parameterization::Unstructured => {
                for q in 0..self.a.len() {
                    out.a[q] = cur.matrix(r, r);
                }
                for p in 0..self.b.len() {
                    out.b[p] = cur.vector(r);
                }
            }
        }
        for k in 0..self.c.len() {
            out.c[k] = cur.vector(r);
        }
        Ok(out)
    }

    /// Chain rule from full-matrix gradients to the free parameters: tied
    /// entries receive the sum of their contributions, fixed entries none.
    pub fn free_gradient(&self, g: &FullGradient) -> DVector<f64> {
        let l = self.layout;
        let mut out = Vec::with_capacity(self.n_params());
        match self.parameterization {
            Parameterization::Structured => {
                let g0 = &g.a[0];
                let gm1 = block(g0, l.control(), l.control()) * (2.0 * self.beta);
                let gm2 = -(block(g0, l.adjoint(), l.control())
                    + block(g0, l.control(), l.adjoint()).transpose());
                let gm3 = block(g0, l.state(), l.state());
                out.extend_from_slice(gm1.as_slice());
                out.extend_from_slice(gm2.as_slice());
                out.extend_from_slice(gm3.as_slice());
                for gq in &g.a[1..] {
                    let gk = block(gq, l.adjoint(), l.state())
                        + block(gq, l.state(), l.adjoint()).transpose();
                    out.extend_from_slice(gk.as_slice());
                }
                out.extend_from_slice(g.b[0].rows_range(l.adjoint()).as_slice());
                for gp in &g.b[1..] {
                    out.extend_from_slice(gp.rows_range(l.state()).as_slice());
                }
            }
            Parameterization::Unstructured => {
                for ga in &g.a {
                    out.extend_from_slice(ga.as_slice());
                }
                for gb in &g.b {
                    out.extend_from_slice(gb.as_slice());
                }
            }
        }
        for gc in &g.c {
            out.extend_from_slice(gc.as_slice());
        }
        DVector::from_vec(out)
    }

    /// Reassembles from raw parts (used by the text reader).
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        layout: BlockLayout,
        beta: f64,
        parameterization: Parameterization,
        a: Vec<DMatrix<f64>>,
        a_funs: Vec<ScalarFn>,
        b: Vec<DVector<f64>>,
        b_funs: Vec<ScalarFn>,
        c: Vec<DVector<f64>>,
        c_funs: Vec<ScalarFn>,
    ) -> Result<Self> {
        let r = layout.dim();
        let ok = !a.is_empty()
            && !b.is_empty()
            && !c.is_empty()
            && a.len() == a_funs.len() + 1
            && b.len() == b_funs.len() + 1
            && c.len() == c_funs.len()
            && a.iter().all(|m| m.shape() == (r, r))
            && b.iter().all(|v| v.len() == r)
            && c.iter().all(|v| v.len() == r);
        if !ok {
            return Err(DdromError::Dimension("inconsistent matrix tuple".into()));
        }
        Ok(Self {
            layout,
            beta,
            parameterization,
            a,
            a_funs,
            b,
            b_funs,
            c,
            c_funs,
        })
    }
}

impl FullGradient {
    pub fn zeros_like(m: &DdromMatrices) -> Self {
        let r = m.dim();
        Self {
            a: vec![DMatrix::zeros(r, r); m.a.len()],
            b: vec![DVector::zeros(r); m.b.len()],
            c: vec![DVector::zeros(r); m.c.len()],
        }
    }

    /// Frobenius inner product with another gradient-shaped tuple.
    pub fn dot(&self, other: &FullGradient) -> f64 {
        let a: f64 = self.a.iter().zip(&other.a).map(|(x, y)| x.dot(y)).sum();
        let b: f64 = self.b.iter().zip(&other.b).map(|(x, y)| x.dot(y)).sum();
        let c: f64 = self.c.iter().zip(&other.c).map(|(x, y)| x.dot(y)).sum();
        a + b + c
    }
}

fn mass_skeleton(
    l: BlockLayout,
    beta: f64,
    m1: &DMatrix<f64>,
    m2: &DMatrix<f64>,
    m3: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(l.dim(), l.dim());
    set_block(&mut a, l.control(), l.control(), &(m1 * (2.0 * beta)));
    set_block(&mut a, l.control(), l.adjoint(), &(-m2.transpose()));
    set_block(&mut a, l.state(), l.state(), m3);
    set_block(&mut a, l.adjoint(), l.control(), &(-m2));
    a
}

fn stiffness_skeleton(l: BlockLayout, k: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(l.dim(), l.dim());
    set_block(&mut a, l.state(), l.adjoint(), &k.transpose());
    set_block(&mut a, l.adjoint(), l.state(), k);
    a
}

fn embed(n: usize, rows: Range<usize>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    out.rows_range_mut(rows).copy_from(v);
    out
}

fn block(m: &DMatrix<f64>, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
    m.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
}

fn set_block(m: &mut DMatrix<f64>, rows: Range<usize>, cols: Range<usize>, b: &DMatrix<f64>) {
    m.view_mut((rows.start, cols.start), (rows.len(), cols.len())).copy_from(b);
}

fn check_shape(name: &str, m: &DMatrix<f64>, r: usize, c: usize) -> Result<()> {
    if m.shape() != (r, c) {
        return Err(DdromError::Dimension(format!(
            "{name} is {}x{}, expected {r}x{c}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_len(name: &str, v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(DdromError::Dimension(format!(
            "{name} has length {}, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

struct Cursor<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [f64]) -> Self {
        Self { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> &'a [f64] {
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    fn matrix(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(r, c, self.take(r * c))
    }

    fn vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_column_slice(self.take(n))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn small_blocks() -> SaddleBlocks {
        let nf = 2;
        let nu = 3;
        let m1 = DMatrix::from_fn(nf, nf, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
        let m2 = DMatrix::from_fn(nu, nf, |i, j| 0.3 * (i as f64) - 0.2 * (j as f64) + 0.5);
        let m3 = DMatrix::from_fn(nu, nu, |i, j| if i == j { 2.0 } else { 0.2 });
        let k1 = DMatrix::from_fn(nu, nu, |i, j| if i == j { 4.0 } else { -1.0 + 0.1 * j as f64 });
        let k2 = DMatrix::from_fn(nu, nu, |i, j| if i == j { 1.0 } else { 0.05 * (i + j) as f64 });
        SaddleBlocks {
            beta: 0.5,
            m1,
            m2,
            m3,
            stiffness: vec![(ScalarFn::ONE, k1), (ScalarFn::MU, k2)],
            boundary: DVector::from_vec(vec![0.1, 0.0, -0.2]),
            loads: vec![(ScalarFn::ONE, DVector::from_vec(vec![1.0, 0.5, 0.25]))],
            outputs: vec![(ScalarFn::MU, DVector::from_fn(nf + 2 * nu, |i, _| 0.1 * i as f64))],
        }
    }

    #[test]
    fn skeleton_places_blocks() {
        let m = DdromMatrices::structured(small_blocks()).unwrap();
        let l = m.layout();
        assert_eq!(l.dim(), 8);
        let a0 = &m.a_terms()[0];
        // 2β M1 with β = 0.5
        assert_eq!(a0[(0, 0)], 1.0);
        assert_eq!(a0[(1, 1)], 2.0);
        // -M2 and -M2ᵀ are tied
        assert_eq!(a0[(5, 0)], -0.5);
        assert_eq!(a0[(0, 5)], -0.5);
        // zero blocks stay zero
        assert_eq!(a0[(2, 5)], 0.0);
        assert_eq!(a0[(5, 5)], 0.0);
        let a1 = &m.a_terms()[1];
        assert_eq!(a1[(5, 2)], a1[(2, 5)]);
        assert_eq!(a1[(0, 0)], 0.0);
        assert_eq!(m.b_terms()[0][5], 0.1);
        assert_eq!(m.b_terms()[1][2], 1.0);
    }

    #[test]
    fn params_round_trip_structured_and_unstructured() {
        let m = DdromMatrices::structured(small_blocks()).unwrap();
        let p = m.params();
        assert_eq!(p.len(), m.n_params());
        assert_eq!(m.with_params(&p).unwrap(), m);

        let u = m.clone().into_unstructured();
        assert_eq!(u.n_params(), 3 * 64 + 2 * 8 + 8);
        let pu = u.params();
        assert_eq!(u.with_params(&pu).unwrap(), u);
    }

    #[test]
    fn with_params_reimposes_skeleton() {
        let m = DdromMatrices::structured(small_blocks()).unwrap();
        let p = m.params().map(|v| v + 0.37);
        let m2 = m.with_params(&p).unwrap();
        let l = m2.layout();
        let a0 = &m2.a_terms()[0];
        for i in l.control() {
            for j in l.state() {
                assert_eq!(a0[(i, j)], 0.0);
            }
        }
        for i in l.adjoint() {
            for j in l.control() {
                assert_eq!(a0[(i, j)], a0[(j, i)]);
            }
        }
        for i in l.adjoint() {
            for j in l.adjoint() {
                assert_eq!(a0[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn structured_switch_rejects_off_skeleton_matrices() {
        let m = DdromMatrices::structured(small_blocks()).unwrap();
        let u = m.clone().into_unstructured();
        assert_eq!(u.clone().with_parameterization(Parameterization::Structured).unwrap(), m);
        let mut p = u.params();
        p[2] += 1.0; // a0[(2, 0)] lives in a structural zero
        let bent = u.with_params(&p).unwrap();
        assert!(bent.with_parameterization(Parameterization::Structured).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut b = small_blocks();
        b.m2 = DMatrix::zeros(2, 2);
        assert!(DdromMatrices::structured(b).is_err());
        let mut b = small_blocks();
        b.beta = 0.0;
        assert!(DdromMatrices::structured(b).is_err());
        let m = DdromMatrices::structured(small_blocks()).unwrap();
        assert!(m.with_params(&DVector::zeros(3)).is_err());
    }
}
