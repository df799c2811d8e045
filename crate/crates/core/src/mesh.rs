//! Uniform triangulations of the unit square and coarse-grid overlays.
//!
//! Vertices are numbered row by row (`v = j (nx + 1) + i` for the vertex at
//! `(i/nx, j/ny)`). Square `(i, j)` is split along its bottom-left to
//! top-right diagonal into cells `2 s` and `2 s + 1`, `s = j nx + i`, both
//! counter-clockwise.

use crate::error::{CoreError, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    nx: usize,
    ny: usize,
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

impl StructuredMesh {
    /// Unit square split into `nx x ny` squares, two triangles each.
    pub fn unit_square(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(CoreError::InvalidInput(format!(
                "mesh needs at least one cell per axis, got {nx}x{ny}"
            )));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([i as f64 / nx as f64, j as f64 / ny as f64]);
                boundary.push(i == 0 || j == 0 || i == nx || j == ny);
            }
        }
        let v = |i: usize, j: usize| j * (nx + 1) + i;
        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1));
                cells.push([v00, v10, v11]);
                cells.push([v00, v11, v01]);
            }
        }
        Ok(Self {
            nx,
            ny,
            vertices,
            cells,
            boundary,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// The two cells of square `(i, j)`.
    pub fn square_cells(&self, i: usize, j: usize) -> [usize; 2] {
        let s = j * self.nx + i;
        [2 * s, 2 * s + 1]
    }

    /// Vertices not on the boundary, ascending.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.boundary[v]).collect()
    }

    pub fn cell_points(&self, c: usize) -> [Point; 3] {
        let [a, b, d] = self.cells[c];
        [self.vertices[a], self.vertices[b], self.vertices[d]]
    }

    /// Signed area (positive for counter-clockwise cells).
    pub fn signed_area(&self, c: usize) -> f64 {
        let [p0, p1, p2] = self.cell_points(c);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn centroid(&self, c: usize) -> Point {
        let [p0, p1, p2] = self.cell_points(c);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }
}

/// A coarse grid of squares whose refinement is the fine mesh, with the
/// fine cells of every coarse-node neighborhood.
#[derive(Debug, Clone)]
pub struct CoarseOverlay {
    coarse: StructuredMesh,
    fine: StructuredMesh,
    refinement: usize,
    neighborhoods: Vec<Vec<usize>>,
}

impl CoarseOverlay {
    pub fn new(coarse: StructuredMesh, refinement: usize) -> Result<Self> {
        if refinement == 0 {
            return Err(CoreError::InvalidInput("refinement must be >= 1".into()));
        }
        let fine = StructuredMesh::unit_square(coarse.nx * refinement, coarse.ny * refinement)?;
        let mut neighborhoods = Vec::with_capacity(coarse.n_vertices());
        for cj in 0..=coarse.ny {
            for ci in 0..=coarse.nx {
                let mut cells = Vec::new();
                for sj in cj.saturating_sub(1)..cj.min(coarse.ny - 1) + 1 {
                    for si in ci.saturating_sub(1)..ci.min(coarse.nx - 1) + 1 {
                        for fj in sj * refinement..(sj + 1) * refinement {
                            for fi in si * refinement..(si + 1) * refinement {
                                cells.extend(fine.square_cells(fi, fj));
                            }
                        }
                    }
                }
                cells.sort_unstable();
                neighborhoods.push(cells);
            }
        }
        Ok(Self {
            coarse,
            fine,
            refinement,
            neighborhoods,
        })
    }

    pub fn coarse(&self) -> &StructuredMesh {
        &self.coarse
    }

    pub fn fine(&self) -> &StructuredMesh {
        &self.fine
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn n_coarse_nodes(&self) -> usize {
        self.coarse.n_vertices()
    }

    /// Fine cells of the neighborhood of coarse node `i`, ascending.
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    /// Fine vertices touched by the neighborhood of coarse node `i`,
    /// ascending.
    pub fn neighborhood_vertices(&self, i: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.neighborhoods[i]
            .iter()
            .flat_map(|&c| self.fine.cells()[c])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Coarse square size `H` (uniform in both directions when `nx == ny`).
    pub fn coarse_h(&self) -> f64 {
        self.coarse.hx().max(self.coarse.hy())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_mesh() {
        let m = StructuredMesh::unit_square(1, 1).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 2);
        assert!(m.boundary_flags().iter().all(|&b| b));
        assert!(m.interior_vertices().is_empty());
    }

    #[test]
    fn counts_at_experiment_resolutions() {
        let m = StructuredMesh::unit_square(64, 64).unwrap();
        assert_eq!(m.n_vertices(), 4225);
        assert_eq!(m.n_cells(), 8192);
        let c = StructuredMesh::unit_square(8, 8).unwrap();
        assert_eq!(c.n_vertices(), 81);
        assert_eq!(c.n_cells(), 128);
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(StructuredMesh::unit_square(0, 3).is_err());
        assert!(StructuredMesh::unit_square(3, 0).is_err());
    }

    #[test]
    fn cells_are_positive_and_cover_unit_area() {
        let m = StructuredMesh::unit_square(5, 3).unwrap();
        let mut total = 0.0;
        for c in 0..m.n_cells() {
            let a = m.signed_area(c);
            assert!(a > 0.0);
            total += a;
        }
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_flags_match_coordinates() {
        let m = StructuredMesh::unit_square(4, 6).unwrap();
        for (v, p) in m.vertices().iter().enumerate() {
            let on = p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
            assert_eq!(m.is_boundary(v), on);
        }
        assert_eq!(m.interior_vertices().len(), 3 * 5);
    }

    #[test]
    fn ordering_is_lexicographic_y_major() {
        let m = StructuredMesh::unit_square(2, 2).unwrap();
        assert_eq!(m.vertices()[1], [0.5, 0.0]);
        assert_eq!(m.vertices()[3], [0.0, 0.5]);
        assert_eq!(m, StructuredMesh::unit_square(2, 2).unwrap());
    }

    #[test]
    fn overlay_resolution() {
        let o = CoarseOverlay::new(StructuredMesh::unit_square(8, 8).unwrap(), 16).unwrap();
        assert_eq!(o.fine().nx(), 128);
        assert_eq!(o.fine().ny(), 128);
        assert!(CoarseOverlay::new(StructuredMesh::unit_square(2, 2).unwrap(), 0).is_err());
    }

    #[test]
    fn refinement_one_neighborhoods_cover_all_cells() {
        let o = CoarseOverlay::new(StructuredMesh::unit_square(2, 2).unwrap(), 1).unwrap();
        let mut count = vec![0usize; o.fine().n_cells()];
        for i in 0..o.n_coarse_nodes() {
            for &c in o.neighborhood(i) {
                count[c] += 1;
            }
        }
        assert_eq!(count.len(), 8);
        // every fine cell lies in its coarse square, which touches 4 nodes
        assert!(count.iter().all(|&k| k == 4));
        // the centre node owns everything
        assert_eq!(o.neighborhood(4).len(), 8);
    }

    #[test]
    fn corner_and_interior_neighborhood_sizes() {
        let o = CoarseOverlay::new(StructuredMesh::unit_square(4, 4).unwrap(), 2).unwrap();
        assert_eq!(o.neighborhood(0).len(), 8);
        // interior node owns 4 coarse squares of 2 r^2 fine cells
        let centre = o.coarse().vertex_index(2, 2);
        assert_eq!(o.neighborhood(centre).len(), 4 * 2 * 2 * 2);
        // edge node owns 2 coarse squares
        let edge = o.coarse().vertex_index(2, 0);
        assert_eq!(o.neighborhood(edge).len(), 2 * 8);
        assert_eq!(o.neighborhood_vertices(0).len(), 9);
    }

    #[test]
    fn incidence_total_is_four_per_fine_cell() {
        for (n, r) in [(2, 3), (4, 2), (8, 1)] {
            let o = CoarseOverlay::new(StructuredMesh::unit_square(n, n).unwrap(), r).unwrap();
            let total: usize = (0..o.n_coarse_nodes()).map(|i| o.neighborhood(i).len()).sum();
            assert_eq!(total, 4 * o.fine().n_cells());
        }
    }
}
