//! The two control problems on the unit square with homogeneous Dirichlet
//! data:
//!
//! ```text
//! min ½‖u − û‖² + β‖f‖²   s.t.   −div(κ ∇u) [+ δ·∇u] = f,   u = 0 on ∂Ω
//! ```
//!
//! * diffusion: `κ = κ1 + μ (1 − x1)`
//! * advection-diffusion: `κ = κ1 + μ (1 + x1)`, `δ = (1 + x1 + x1², 1 + x2 + x2²)`
//!
//! and in both cases `û = x1 x2 (1 − x1)(1 − x2) + μ x1² x2² (1 − x1)(1 − x2)`.

use serde::{Deserialize, Serialize};
use socrom_ddrom::ScalarFn;

use crate::error::{CoreError, Result};
use crate::fem::{
    assemble_advection, assemble_desired_state_loads, assemble_mass_matrices, assemble_stiffness,
    assemble_stiffness_term, make_high_contrast_field, CoefficientField, DirichletRestriction,
    FieldKind, InclusionPattern,
};
use crate::mesh::StructuredMesh;
use crate::system::{AffineSaddleSystem, OutputVariant, StiffnessTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    Diffusion,
    AdvectionDiffusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub beta: f64,
    pub contrast: f64,
    pub pattern: InclusionPattern,
    pub output: OutputVariant,
    /// Parameter range over which ellipticity is checked.
    pub interval: [f64; 2],
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Diffusion,
            beta: 1e-3,
            contrast: 1e4,
            pattern: InclusionPattern::default(),
            output: OutputVariant::Full,
            interval: [1.0, 10.0],
        }
    }
}

pub fn kappa1(cfg: &ProblemConfig) -> Result<CoefficientField> {
    make_high_contrast_field(cfg.contrast, &cfg.pattern)
}

/// The spatial factor multiplying μ in the diffusion coefficient.
pub fn parametric_diffusion(kind: ProblemKind) -> CoefficientField {
    match kind {
        ProblemKind::Diffusion => CoefficientField::new(FieldKind::AffineTerm, "1-x1", |p| 1.0 - p[0]),
        ProblemKind::AdvectionDiffusion => {
            CoefficientField::new(FieldKind::AffineTerm, "1+x1", |p| 1.0 + p[0])
        }
    }
}

pub fn advection_field() -> (CoefficientField, CoefficientField) {
    (
        CoefficientField::new(FieldKind::Advection, "1+x1+x1^2", |p| 1.0 + p[0] + p[0] * p[0]),
        CoefficientField::new(FieldKind::Advection, "1+x2+x2^2", |p| 1.0 + p[1] + p[1] * p[1]),
    )
}

/// Separated terms of `û`, weighted by `1` and `μ`.
pub fn desired_state_terms() -> Vec<(ScalarFn, CoefficientField)> {
    vec![
        (
            ScalarFn::ONE,
            CoefficientField::new(FieldKind::DesiredState, "x1x2(1-x1)(1-x2)", |p| {
                p[0] * p[1] * (1.0 - p[0]) * (1.0 - p[1])
            }),
        ),
        (
            ScalarFn::MU,
            CoefficientField::new(FieldKind::DesiredState, "x1^2x2^2(1-x1)(1-x2)", |p| {
                p[0] * p[0] * p[1] * p[1] * (1.0 - p[0]) * (1.0 - p[1])
            }),
        ),
    ]
}

/// `κ1 + μ g` as one field.
pub fn kappa_at(cfg: &ProblemConfig, mu: f64) -> Result<CoefficientField> {
    let k1 = kappa1(cfg)?;
    let g = parametric_diffusion(cfg.kind);
    Ok(CoefficientField::new(
        FieldKind::Custom,
        format!("kappa(mu={mu})"),
        move |p| k1.eval(p) + mu * g.eval(p),
    ))
}

/// Smallest `κ1 + μ g` over centroids for μ at both interval ends (the
/// coefficient is affine in μ, so the ends bound it).
pub fn min_diffusion(mesh: &StructuredMesh, cfg: &ProblemConfig) -> Result<f64> {
    let mut lo = f64::INFINITY;
    for mu in cfg.interval {
        lo = lo.min(kappa_at(cfg, mu)?.min_at_centroids(mesh));
    }
    Ok(lo)
}

/// A system together with the mesh and boundary elimination it came from.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: StructuredMesh,
    pub restriction: DirichletRestriction,
    pub system: AffineSaddleSystem,
}

pub fn build_problem(cfg: &ProblemConfig, mesh: StructuredMesh) -> Result<Discretization> {
    let [a, b] = cfg.interval;
    if !(a < b) {
        return Err(CoreError::InvalidInput(format!("empty parameter interval [{a}, {b}]")));
    }
    let k1 = kappa1(cfg)?;
    let lo = min_diffusion(&mesh, cfg)?;
    if !(lo > 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "diffusion coefficient reaches {lo} on [{a}, {b}]"
        )));
    }
    let restriction = DirichletRestriction::new(&mesh);
    let (m1, m2, m3) = assemble_mass_matrices(&mesh);

    let mut stiffness = vec![
        StiffnessTerm {
            fun: ScalarFn::ONE,
            matrix: restriction.restrict_matrix(&assemble_stiffness(&mesh, &k1)?),
            symmetric: true,
        },
        StiffnessTerm {
            fun: ScalarFn::MU,
            matrix: restriction
                .restrict_matrix(&assemble_stiffness_term(&mesh, &parametric_diffusion(cfg.kind))),
            symmetric: true,
        },
    ];
    if cfg.kind == ProblemKind::AdvectionDiffusion {
        let (d1, d2) = advection_field();
        stiffness.push(StiffnessTerm {
            fun: ScalarFn::ONE,
            matrix: restriction.restrict_matrix(&assemble_advection(&mesh, (&d1, &d2))),
            symmetric: false,
        });
    }

    let terms = desired_state_terms();
    let fields: Vec<CoefficientField> = terms.iter().map(|(_, f)| f.clone()).collect();
    let loads: Vec<_> = assemble_desired_state_loads(&mesh, &fields)
        .iter()
        .zip(&terms)
        .map(|(v, (f, _))| (*f, restriction.restrict_vector(v)))
        .collect();

    let nh = restriction.n_interior();
    let boundary = nalgebra::DVector::zeros(nh);
    let layout = socrom_ddrom::BlockLayout::new(mesh.n_cells(), nh);
    let outputs = cfg.output.rows(layout, &loads[0].1, &boundary);

    let system = AffineSaddleSystem {
        beta: cfg.beta,
        m1,
        m2: restriction.restrict_rows(&m2),
        m3: restriction.restrict_matrix(&m3),
        stiffness,
        loads,
        boundary,
        outputs,
    };
    system.validate()?;
    Ok(Discretization {
        mesh,
        restriction,
        system,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diffusion_system_shapes() {
        let d = build_problem(&ProblemConfig::default(), StructuredMesh::unit_square(4, 4).unwrap()).unwrap();
        let s = &d.system;
        assert_eq!(s.n_control(), 32);
        assert_eq!(s.n_state(), 9);
        assert_eq!(s.stiffness.len(), 2);
        assert_eq!(s.loads.len(), 2);
        assert_eq!(s.outputs.len(), 2);
        assert!(s.stiffness.iter().all(|t| t.symmetric && t.matrix.asymmetry() < 1e-9));
    }

    #[test]
    fn advection_adds_a_nonsymmetric_constant_term() {
        let cfg = ProblemConfig {
            kind: ProblemKind::AdvectionDiffusion,
            ..Default::default()
        };
        let d = build_problem(&cfg, StructuredMesh::unit_square(4, 4).unwrap()).unwrap();
        let adv = &d.system.stiffness[2];
        assert!(!adv.symmetric);
        assert_eq!(adv.fun, ScalarFn::ONE);
        assert!(adv.matrix.asymmetry() > 1e-3);
    }

    #[test]
    fn ellipticity_holds_on_the_experiment_interval() {
        let m = StructuredMesh::unit_square(16, 16).unwrap();
        assert!(min_diffusion(&m, &ProblemConfig::default()).unwrap() > 0.0);
        let bad = ProblemConfig {
            interval: [-20.0, 10.0],
            contrast: 1.0,
            ..Default::default()
        };
        assert!(build_problem(&bad, m).is_err());
    }

    #[test]
    fn parametric_term_splits_kappa() {
        let cfg = ProblemConfig::default();
        let k = kappa_at(&cfg, 2.0).unwrap();
        let k1 = kappa1(&cfg).unwrap();
        let p = [0.3, 0.05];
        assert!((k.eval(p) - k1.eval(p) - 2.0 * 0.7).abs() < 1e-15);
    }
}
