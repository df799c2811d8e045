//! Solution fields on the fine grid as CSV matrices.
//!
//! `U` is written on the vertex grid, one row per `x2` level from the bottom,
//! boundary included. `F` is written per square with the lower-right and
//! upper-left triangles side by side, giving `ny` rows of `2 nx` values.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use socrom_core::fem::DirichletRestriction;
use socrom_core::mesh::StructuredMesh;

use crate::report::write_matrix_csv;

/// Fine-grid control and interior state of one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FineFields {
    pub f: DVector<f64>,
    pub u: DVector<f64>,
}

pub fn dump_solution_fields(
    mesh: &StructuredMesh,
    restriction: &DirichletRestriction,
    fields: &FineFields,
    dir: &Path,
    prefix: &str,
) -> Result<()> {
    if fields.f.len() != mesh.n_cells() || fields.u.len() != restriction.n_interior() {
        bail!(
            "{prefix}: fields have lengths ({}, {}), mesh expects ({}, {})",
            fields.f.len(),
            fields.u.len(),
            mesh.n_cells(),
            restriction.n_interior()
        );
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let u = restriction.extend_vector(&fields.u);
    let path = dir.join(format!("{prefix}_u.csv"));
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_matrix_csv(BufWriter::new(file), ny + 1, nx + 1, |j, i| u[mesh.vertex_index(i, j)])
        .with_context(|| format!("writing {}", path.display()))?;

    let path = dir.join(format!("{prefix}_f.csv"));
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_matrix_csv(BufWriter::new(file), ny, 2 * nx, |j, k| {
        fields.f[mesh.square_cells(k / 2, j)[k % 2]]
    })
    .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
