//! Snapshot POD and Galerkin projection.

use socrom_core::fom::{solve_all, solve_fom};
use socrom_core::mesh::StructuredMesh;
use socrom_core::problem::{build_problem, ProblemConfig, ProblemKind};
use socrom_core::rom::*;
use socrom_core::sparse::CsrMatrix;
use socrom_core::system::{AffineSaddleSystem, OutputVariant, StiffnessTerm};
use socrom_ddrom::TrainingSet;

fn system(n: usize, kind: ProblemKind) -> AffineSaddleSystem {
    let cfg = ProblemConfig {
        kind,
        ..Default::default()
    };
    build_problem(&cfg, StructuredMesh::unit_square(n, n).unwrap())
        .unwrap()
        .system
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn output_error(sys: &AffineSaddleSystem, basis: &ProjectionBasis, t: &TrainingSet, y: &[f64]) -> f64 {
    let rom = project_rom(sys, basis).unwrap();
    let diff: Vec<f64> = t
        .samples()
        .iter()
        .zip(y)
        .map(|(&mu, &yj)| yj - solve_rom(&rom, mu).unwrap().1)
        .collect();
    t.norm(&diff)
}

#[test]
fn snapshots_are_fom_solutions() {
    let sys = system(8, ProblemKind::Diffusion);
    let t = TrainingSet::uniform(linspace(1.0, 10.0, 7)).unwrap();
    let s = collect_snapshots(&sys, &t).unwrap();
    assert_eq!(s.f.ncols(), 7);
    let sol = solve_fom(&sys, t.samples()[3]).unwrap();
    assert_eq!(s.u.column(3).into_owned(), sol.u);
    assert_eq!(s.f.column(3).into_owned(), sol.f);
    assert_eq!(s.lambda.column(3).into_owned(), sol.lambda);
}

#[test]
fn singular_values_match_a_dense_oracle() {
    let sys = system(8, ProblemKind::AdvectionDiffusion);
    let t = TrainingSet::uniform(linspace(1.0, 10.0, 6)).unwrap();
    let s = collect_snapshots(&sys, &t).unwrap();
    let b = pod_basis(&s, 2).unwrap();
    // eigenvalues of the Gram matrix are the squared singular values
    let gram = s.f.transpose() * &s.f;
    let mut ev: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    for (sv, e) in b.control_singular_values.iter().zip(&ev) {
        assert!((sv * sv - e).abs() <= 1e-9 * ev[0]);
    }
    assert!(b.control_singular_values.windows(2).all(|w| w[0] >= w[1]));
    assert!(b.state_singular_values.windows(2).all(|w| w[0] >= w[1]));
    assert!(b.orthonormality_error() <= 1e-12);
    let (ef, eu) = b.energy_fractions();
    assert!(ef > 0.0 && ef <= 1.0 && eu > 0.0 && eu <= 1.0);
}

#[test]
fn identity_basis_reproduces_the_full_blocks() {
    let sys = system(4, ProblemKind::AdvectionDiffusion);
    let rom = project_rom(&sys, &ProjectionBasis::identity(sys.n_control(), sys.n_state())).unwrap();
    assert_eq!(rom.blocks.m2, sys.m2.to_dense());
    assert!((&rom.blocks.m3 - sys.m3.to_dense()).amax() <= 1e-16);
    for ((_, k), t) in rom.blocks.stiffness.iter().zip(&sys.stiffness) {
        assert!((k - t.matrix.to_dense()).amax() <= 1e-12);
    }
    for mu in [1.0, 4.0, 10.0] {
        let y = solve_fom(&sys, mu).unwrap().y;
        let yh = solve_rom(&rom, mu).unwrap().1;
        assert!((y - yh).abs() <= 1e-9 * y.abs());
    }
}

#[test]
fn full_rank_basis_reproduces_training_outputs() {
    for variant in OutputVariant::ALL {
        let cfg = ProblemConfig {
            output: variant,
            ..Default::default()
        };
        let sys = build_problem(&cfg, StructuredMesh::unit_square(16, 16).unwrap()).unwrap().system;
        let t = TrainingSet::uniform(linspace(1.0, 10.0, 5)).unwrap();
        let sols = solve_all(&sys, t.samples()).unwrap();
        let snaps = SnapshotSet::from_solutions(&sols).unwrap();
        let b = pod_basis(&snaps, 2).unwrap();
        // the N = 2 bases hold every snapshot only if the snapshots span
        // so few directions, so use the largest admissible N instead
        let n = b
            .control_singular_values
            .iter()
            .filter(|&&s| s > RANK_TOL * b.control_singular_values[0])
            .count()
            .min(
                b.state_singular_values
                    .iter()
                    .filter(|&&s| s > RANK_TOL * b.state_singular_values[0])
                    .count()
                    / 2,
            );
        let b = pod_basis(&snaps, n).unwrap();
        let rom = project_rom(&sys, &b).unwrap();
        for s in &sols {
            let (x, yh) = solve_rom(&rom, s.mu).unwrap();
            let scale = s.y.abs().max(1e-14);
            assert!((s.y - yh).abs() <= 1e-9 * scale, "{variant:?} mu {}: {} vs {}", s.mu, s.y, yh);
            let a = rom.system_matrix(s.mu);
            let r = &a * &x - rom.rhs(s.mu);
            assert!(r.norm() <= 1e-10 * (a.norm() * x.norm() + rom.rhs(s.mu).norm()));
        }
    }
}

#[test]
fn output_error_does_not_grow_with_n() {
    let sys = system(16, ProblemKind::Diffusion);
    let t = TrainingSet::uniform(linspace(1.0, 10.0, 20)).unwrap();
    let snaps = collect_snapshots(&sys, &t).unwrap();
    let y: Vec<f64> = solve_all(&sys, t.samples()).unwrap().iter().map(|s| s.y).collect();
    let errs: Vec<f64> = (1..=5)
        .map(|n| output_error(&sys, &pod_basis(&snaps, n).unwrap(), &t, &y))
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-8) + 1e-14 * t.norm(&y), "errors {errs:?}");
    }
}

#[test]
fn projection_is_idempotent_under_identity() {
    let sys = system(8, ProblemKind::AdvectionDiffusion);
    let t = TrainingSet::uniform(linspace(1.0, 10.0, 6)).unwrap();
    let b = pod_basis(&collect_snapshots(&sys, &t).unwrap(), 2).unwrap();
    let rom = project_rom(&sys, &b).unwrap();
    // the reduced blocks as a (small) sparse system, projected again
    let blk = &rom.blocks;
    let reduced = AffineSaddleSystem {
        beta: blk.beta,
        m1: CsrMatrix::from_dense(&blk.m1),
        m2: CsrMatrix::from_dense(&blk.m2),
        m3: CsrMatrix::from_dense(&blk.m3),
        stiffness: blk
            .stiffness
            .iter()
            .zip(&sys.stiffness)
            .map(|((f, k), t)| StiffnessTerm {
                fun: *f,
                matrix: CsrMatrix::from_dense(k),
                symmetric: t.symmetric,
            })
            .collect(),
        loads: blk.loads.clone(),
        boundary: blk.boundary.clone(),
        outputs: blk.outputs.clone(),
    };
    let again = project_rom(&reduced, &ProjectionBasis::identity(rom.n_control(), rom.n_state())).unwrap();
    for mu in [1.0, 5.5, 10.0] {
        let a = rom.system_matrix(mu);
        assert!((again.system_matrix(mu) - &a).amax() <= 1e-15 * a.amax());
        assert_eq!(again.rhs(mu), rom.rhs(mu));
        assert_eq!(again.output_row(mu), rom.output_row(mu));
    }
    let m = rom.to_ddrom().unwrap();
    for mu in [1.0, 5.5, 10.0] {
        let (_, y) = solve_rom(&rom, mu).unwrap();
        assert!((m.solve(mu).unwrap().1 - y).abs() <= 1e-12 * y.abs().max(1e-14));
    }
}

#[test]
fn reduced_mass_is_positive_definite() {
    let sys = system(8, ProblemKind::Diffusion);
    let t = TrainingSet::uniform(linspace(1.0, 10.0, 8)).unwrap();
    let b = pod_basis(&collect_snapshots(&sys, &t).unwrap(), 3).unwrap();
    let rom = project_rom(&sys, &b).unwrap();
    assert_eq!(rom.dim(), 15);
    assert!(rom.blocks.m1.clone().cholesky().is_some());
    assert!(rom.blocks.m3.clone().cholesky().is_some());
    assert!(pod_basis(&collect_snapshots(&sys, &t).unwrap(), 9).is_err());
}
