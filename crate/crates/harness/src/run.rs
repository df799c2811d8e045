//! The experiment pipeline: model, snapshots, POD, fit, evaluation and
//! artifacts.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use log::info;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use socrom_core::fem::DirichletRestriction;
use socrom_core::fom::{solve_all, solve_fom, FomSolution};
use socrom_core::gmsfem::{build_gmsfem_basis, coarse_optimality_system, GmsfemBasis};
use socrom_core::mesh::{CoarseOverlay, StructuredMesh};
use socrom_core::problem::{build_problem, kappa_at, Discretization};
use socrom_core::rom::{pod_basis, project_rom, solve_rom, GalerkinRom, ProjectionBasis, SnapshotSet, RANK_TOL};
use socrom_core::system::AffineSaddleSystem;
use socrom_ddrom::{fit, io as ddrom_io, outputs, DdromMatrices, FitReport, OutputSample, TrainingSet};

use crate::config::ExperimentConfig;
use crate::fields::{dump_solution_fields, FineFields};
use crate::report::{write_fit_history, write_samples, ErrorReport};
use crate::sampling::{sample_parameters, test_parameters};

/// The system that generates data: the fine optimality system, or its
/// multiscale coarse version.
pub struct Model {
    pub fine: Discretization,
    pub multiscale: Option<GmsfemBasis>,
    /// Coarse system when `multiscale` is set.
    coarse: Option<AffineSaddleSystem>,
}

impl Model {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let mesh = StructuredMesh::unit_square(cfg.fine[0], cfg.fine[1])?;
        let fine = build_problem(&cfg.problem_config(), mesh).context("assembling the full-order system")?;
        let (multiscale, coarse) = match &cfg.coarse {
            None => (None, None),
            Some(c) => {
                let overlay = CoarseOverlay::new(
                    StructuredMesh::unit_square(c.grid[0], c.grid[1])?,
                    cfg.fine[0] / c.grid[0],
                )?;
                let mu = c.kappa_mu.unwrap_or(cfg.mu_bar());
                let kappa = kappa_at(&cfg.problem_config(), mu)?;
                let basis = build_gmsfem_basis(&overlay, &kappa, c.modes).context("building the multiscale basis")?;
                let coarse = coarse_optimality_system(&fine.system, &basis).context("assembling the coarse system")?;
                (Some(basis), Some(coarse))
            }
        };
        Ok(Self {
            fine,
            multiscale,
            coarse,
        })
    }

    pub fn system(&self) -> &AffineSaddleSystem {
        self.coarse.as_ref().unwrap_or(&self.fine.system)
    }

    /// Fine-grid fields of a model-space state `[F; U; Λ]`.
    pub fn fine_fields(&self, x: &DVector<f64>) -> FineFields {
        let sys = self.system();
        let (nf, nu) = (sys.n_control(), sys.n_state());
        let f = x.rows(0, nf).into_owned();
        let u = x.rows(nf, nu).into_owned();
        let u = match &self.multiscale {
            Some(b) => b.downscale(&u),
            None => u,
        };
        FineFields { f, u }
    }

    pub fn restriction(&self) -> &DirichletRestriction {
        &self.fine.restriction
    }

    pub fn mesh(&self) -> &StructuredMesh {
        &self.fine.mesh
    }
}

fn state_of(s: &FomSolution) -> DVector<f64> {
    s.state()
}

#[derive(Debug, Clone, Serialize)]
pub struct PodSummary {
    pub control_singular_values: Vec<f64>,
    pub state_singular_values: Vec<f64>,
    pub control_energy: f64,
    pub state_energy: f64,
}

/// Everything a run produces.
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub training: TrainingSet,
    pub test: TrainingSet,
    pub ddrom_train: ErrorReport,
    pub ddrom_test: ErrorReport,
    pub rom_train: ErrorReport,
    pub rom_test: ErrorReport,
    pub fit: FitReport,
    pub initial: DdromMatrices,
    pub fitted: DdromMatrices,
    pub basis: ProjectionBasis,
    pub pod: PodSummary,
    pub timings: Vec<(String, f64)>,
}

struct Stopwatch {
    laps: Vec<(String, f64)>,
}

impl Stopwatch {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        info!("stage {stage}");
        let out = f().with_context(|| format!("stage `{stage}` failed"))?;
        self.laps.push((stage.to_string(), t.elapsed().as_secs_f64()));
        Ok(out)
    }
}

pub fn rom_outputs(rom: &GalerkinRom, samples: &[f64]) -> Result<Vec<f64>> {
    Ok(samples
        .par_iter()
        .map(|&mu| solve_rom(rom, mu).map(|(_, y)| y))
        .collect::<socrom_core::Result<Vec<_>>>()?)
}

pub fn training_set(cfg: &ExperimentConfig) -> Result<TrainingSet> {
    sample_parameters(cfg.interval, cfg.train_count, cfg.sampling, cfg.seed)
}

/// Runs the whole pipeline; writes artifacts when `out` is given.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let mut sw = Stopwatch { laps: Vec::new() };
    let model = sw.time("assemble", || Model::build(cfg))?;
    let sys = model.system();
    let training = training_set(cfg)?;
    let test = test_parameters(cfg.interval, cfg.test_count(), &training)?;

    let sols = sw.time("snapshots", || Ok(solve_all(sys, training.samples())?))?;
    let y_train: Vec<f64> = sols.iter().map(|s| s.y).collect();
    let data: Vec<OutputSample> = sols.iter().map(|s| OutputSample { mu: s.mu, y: s.y }).collect();

    let basis = sw.time("pod", || {
        let snaps = SnapshotSet::from_solutions(&sols)?;
        Ok(pod_basis(&snaps, cfg.reduction)?)
    })?;
    let (ce, se) = basis.energy_fractions();
    let pod = PodSummary {
        control_singular_values: basis.control_singular_values.clone(),
        state_singular_values: basis.state_singular_values.clone(),
        control_energy: ce,
        state_energy: se,
    };
    drop(sols);

    let rom = sw.time("project", || Ok(project_rom(sys, &basis)?))?;
    let initial = rom.to_ddrom()?.with_parameterization(cfg.ddrom.parameterization())?;
    let (fitted, fit_report) = sw.time("fit", || Ok(fit(&initial, &data, &training, &cfg.ddrom.fit_options())?))?;

    let y_test: Vec<f64> = sw.time("test_outputs", || {
        Ok(solve_all(sys, test.samples())?.iter().map(|s| s.y).collect())
    })?;
    let (ddrom_train, ddrom_test, rom_train, rom_test) = sw.time("evaluate", || {
        Ok((
            ErrorReport::new(&training, &y_train, &outputs(&fitted, training.samples())?)?,
            ErrorReport::new(&test, &y_test, &outputs(&fitted, test.samples())?)?,
            ErrorReport::new(&training, &y_train, &rom_outputs(&rom, training.samples())?)?,
            ErrorReport::new(&test, &y_test, &rom_outputs(&rom, test.samples())?)?,
        ))
    })?;
    info!(
        "L2 output error (test): Galerkin {:.3e}, DDROM {:.3e}",
        rom_test.summary.l2_abs, ddrom_test.summary.l2_abs
    );

    let mut output = RunOutput {
        config: cfg.clone(),
        training,
        test,
        ddrom_train,
        ddrom_test,
        rom_train,
        rom_test,
        fit: fit_report,
        initial,
        fitted,
        basis,
        pod,
        timings: Vec::new(),
    };
    if let Some(dir) = out {
        sw.time("write", || write_artifacts(&output, &model, &rom, &data, dir))?;
    }
    output.timings = sw.laps;
    if let Some(dir) = out {
        write_manifest(&output, dir)?;
    }
    Ok(output)
}

fn write_artifacts(
    run: &RunOutput,
    model: &Model,
    rom: &GalerkinRom,
    data: &[OutputSample],
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    run.ddrom_test.write_csv(&dir.join("errors.csv"))?;
    run.ddrom_train.write_csv(&dir.join("errors_train.csv"))?;
    run.rom_test.write_csv(&dir.join("errors_rom.csv"))?;
    run.rom_train.write_csv(&dir.join("errors_rom_train.csv"))?;
    write_fit_history(&run.fit, &dir.join("fit_history.csv"))?;
    let fit_json = serde_json::to_string_pretty(&run.fit)?;
    std::fs::write(dir.join("fit_report.json"), fit_json)?;
    let mu: Vec<f64> = data.iter().map(|d| d.mu).collect();
    let y: Vec<f64> = data.iter().map(|d| d.y).collect();
    write_samples(&mu, &y, &dir.join("training_data.csv"))?;
    ddrom_io::write_file(&run.initial, &dir.join("initial_matrices.txt"))?;
    ddrom_io::write_file(&run.fitted, &dir.join("ddrom_matrices.txt"))?;

    if run.config.dump_fields {
        let mu = run.config.mu_bar();
        let fields = dir.join("fields");
        let mesh = model.mesh();
        let restr = model.restriction();
        let sol = solve_fom(model.system(), mu)?;
        let label = if model.multiscale.is_some() { "coarse" } else { "fom" };
        dump_solution_fields(mesh, restr, &model.fine_fields(&state_of(&sol)), &fields, label)?;
        if model.multiscale.is_some() {
            let reference = solve_fom(&model.fine.system, mu)?;
            dump_solution_fields(
                mesh,
                restr,
                &FineFields {
                    f: reference.f,
                    u: reference.u,
                },
                &fields,
                "reference",
            )?;
        }
        let (x_rom, _) = solve_rom(rom, mu)?;
        dump_solution_fields(mesh, restr, &model.fine_fields(&run.basis.lift(&x_rom)), &fields, "rom")?;
        let (x_dd, _) = run.fitted.solve(mu)?;
        dump_solution_fields(mesh, restr, &model.fine_fields(&run.basis.lift(&x_dd)), &fields, "ddrom")?;
    }
    Ok(())
}

/// Modelling choices recorded with every run.
pub fn ledger(cfg: &ExperimentConfig) -> serde_json::Value {
    let opts = cfg.ddrom.fit_options();
    json!({
        "elements": "continuous P1 state and adjoint, P0 control per triangle",
        "triangulation": "squares split from bottom-left to top-right",
        "quadrature": {
            "mass": "exact",
            "stiffness_and_advection": "coefficient at cell centroid",
            "loads": "edge midpoints"
        },
        "dirichlet": "homogeneous, boundary unknowns eliminated, d = 0",
        "kappa1": { "pattern": cfg.pattern, "contrast": cfg.contrast, "background": 1.0 },
        "output": cfg.output,
        "output_rows": "full: Q1 = 1 with C1 = [0; 0; d], Q2 = mu with C2 = [0; U1; 0]; means: average of the control or state block",
        "fom_solver": "sparse LU (control eliminated when the control mass is diagonal) with iterative refinement; componentwise backward error <= 1e-10",
        "pod": {
            "method": "thin SVD of raw snapshot matrices, no mass weighting",
            "control_modes": cfg.reduction,
            "state_adjoint_modes": 2 * cfg.reduction,
            "state_snapshots": "[U, Lambda]",
            "rank_tolerance_relative": RANK_TOL,
            "sign": "largest-magnitude entry positive"
        },
        "ddrom": {
            "parameterization": cfg.ddrom.parameterization(),
            "masking": if cfg.ddrom.structured { "saddle sub-blocks free, skeleton reimposed, tied entries share one parameter" } else { "every entry free" },
            "scalar_functions": "same as the full model",
            "measure": "uniform weights over training samples",
            "optimizer": "BFGS with strong Wolfe line search",
            "wolfe": opts.wolfe,
            "feasibility_cap": opts.feasibility_cap,
            "stop": "relative change of the training outputs <= tol, or maxit",
            "maxit": opts.maxit,
            "tol": opts.tol
        },
        "multiscale": cfg.coarse.as_ref().map(|c| json!({
            "snapshot_space": "all fine-grid functions on each neighborhood",
            "partition_of_unity": "bilinear coarse shape functions",
            "kappa_tilde": "kappa * H^2 * sum |grad chi|^2 at cell centroids",
            "kappa_mu": c.kappa_mu.unwrap_or(cfg.mu_bar()),
            "modes_per_node": c.modes,
            "control": "not coarsened"
        })),
        "sampling": cfg.sampling,
        "test_set": "midpoints of equal cells of the interval, disjoint from training samples",
        "relative_error_guard": crate::report::RELATIVE_GUARD
    })
}

fn write_manifest(run: &RunOutput, dir: &Path) -> Result<()> {
    let manifest = json!({
        "config": run.config,
        "ledger": ledger(&run.config),
        "training_samples": run.training.len(),
        "test_samples": run.test.len(),
        "pod": run.pod,
        "fit": {
            "stop_reason": run.fit.stop_reason,
            "failure": run.fit.failure,
            "iterations": run.fit.iterations(),
            "initial_objective": run.fit.initial_objective,
            "final_objective": run.fit.final_objective,
            "final_relative_change": run.fit.final_relative_change,
            "n_params": run.fit.n_params,
            "objective_evaluations": run.fit.objective_evaluations
        },
        "errors": {
            "ddrom_test": run.ddrom_test.summary,
            "ddrom_train": run.ddrom_train.summary,
            "galerkin_test": run.rom_test.summary,
            "galerkin_train": run.rom_train.summary
        },
        "timings_seconds": run.timings.iter().map(|(k, v)| json!({ "stage": k, "seconds": v })).collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION")
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_run_writes_every_artifact() {
        let t = Instant::now();
        let dir = tempfile::tempdir().unwrap();
        let run = run_experiment(&ExperimentConfig::smoke(), Some(dir.path())).unwrap();
        assert!(t.elapsed().as_secs_f64() < 5.0);
        for f in [
            "errors.csv",
            "errors_train.csv",
            "errors_rom.csv",
            "fit_history.csv",
            "fit_report.json",
            "manifest.json",
            "ddrom_matrices.txt",
            "fields/fom_u.csv",
            "fields/ddrom_f.csv",
        ] {
            assert!(dir.path().join(f).exists(), "missing {f}");
        }
        assert_eq!(run.test.len(), 4);
        assert!(run.fit.final_objective <= run.fit.initial_objective);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        for key in ["pattern", "contrast"] {
            assert!(manifest["ledger"]["kappa1"].get(key).is_some());
        }
        assert_eq!(manifest["ledger"]["ddrom"]["wolfe"]["c1"], 1e-4);
        assert_eq!(manifest["ledger"]["ddrom"]["parameterization"], "structured");
    }

    #[test]
    fn multiscale_run_lifts_to_the_fine_grid() {
        let mut cfg = ExperimentConfig::smoke();
        cfg.fine = [16, 16];
        cfg.coarse = Some(crate::config::CoarseConfig {
            grid: [4, 4],
            modes: 2,
            kappa_mu: None,
        });
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&cfg, Some(dir.path())).unwrap();
        let u = std::fs::read_to_string(dir.path().join("fields/ddrom_u.csv")).unwrap();
        assert_eq!(u.lines().count(), 17);
        assert!(dir.path().join("fields/reference_u.csv").exists());
    }
}
