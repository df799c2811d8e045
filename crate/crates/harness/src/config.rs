//! Experiment configuration, read from and written to JSON.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use socrom_core::fem::InclusionPattern;
use socrom_core::problem::{ProblemConfig, ProblemKind};
use socrom_core::system::OutputVariant;
use socrom_ddrom::bfgs::WolfeParams;
use socrom_ddrom::{FitOptions, Parameterization, DEFAULT_FEASIBILITY_CAP};

/// How training parameters are drawn from the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    UniformLinspace,
    RandomUniform,
}

/// Optional multiscale stage: the coarse optimality system replaces the fine
/// one as the model that generates data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseConfig {
    /// Coarse cells per direction; must divide the fine grid.
    pub grid: [usize; 2],
    /// Eigenmodes per coarse node.
    pub modes: usize,
    /// Parameter at which the local eigenproblems see the coefficient;
    /// the interval midpoint when absent.
    #[serde(default)]
    pub kappa_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdromConfig {
    pub maxit: usize,
    pub tol: f64,
    /// Optimize only the saddle sub-blocks (`false` frees every entry).
    pub structured: bool,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search_evals: usize,
    pub feasibility_cap: f64,
}

impl Default for DdromConfig {
    fn default() -> Self {
        let w = WolfeParams::default();
        Self {
            maxit: 1000,
            tol: 1e-16,
            structured: true,
            c1: w.c1,
            c2: w.c2,
            max_line_search_evals: w.max_evals,
            feasibility_cap: DEFAULT_FEASIBILITY_CAP,
        }
    }
}

impl DdromConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            maxit: self.maxit,
            tol: self.tol,
            wolfe: WolfeParams {
                c1: self.c1,
                c2: self.c2,
                max_evals: self.max_line_search_evals,
                ..WolfeParams::default()
            },
            feasibility_cap: self.feasibility_cap,
        }
    }

    pub fn parameterization(&self) -> Parameterization {
        if self.structured {
            Parameterization::Structured
        } else {
            Parameterization::Unstructured
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemKind,
    /// Fine cells per direction.
    pub fine: [usize; 2],
    pub coarse: Option<CoarseConfig>,
    pub beta: f64,
    pub interval: [f64; 2],
    pub train_count: usize,
    /// Out-of-sample points; `train_count - 1` (the training midpoints) when
    /// absent.
    pub test_count: Option<usize>,
    pub sampling: SamplingMode,
    /// Reduction level `N`: `N` control modes, `2N` state/adjoint modes.
    pub reduction: usize,
    pub output: OutputVariant,
    pub contrast: f64,
    pub pattern: InclusionPattern,
    pub ddrom: DdromConfig,
    pub seed: u64,
    /// Write solution fields at the interval midpoint.
    pub dump_fields: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::experiment1()
    }
}

impl ExperimentConfig {
    /// Diffusion with `κ = κ1 + μ(1 − x1)` on a 64x64 grid, `N = 3`.
    pub fn experiment1() -> Self {
        let p = ProblemConfig::default();
        Self {
            name: "experiment1".into(),
            problem: ProblemKind::Diffusion,
            fine: [64, 64],
            coarse: None,
            beta: p.beta,
            interval: p.interval,
            train_count: 100,
            test_count: None,
            sampling: SamplingMode::UniformLinspace,
            reduction: 3,
            output: OutputVariant::Full,
            contrast: p.contrast,
            pattern: p.pattern,
            ddrom: DdromConfig::default(),
            seed: 0,
            dump_fields: true,
        }
    }

    /// Experiment 1 with the multiscale model: 128x128 fine, 8x8 coarse.
    pub fn experiment1_multiscale() -> Self {
        Self {
            name: "experiment1_multiscale".into(),
            fine: [128, 128],
            coarse: Some(CoarseConfig {
                grid: [8, 8],
                modes: 3,
                kappa_mu: None,
            }),
            ..Self::experiment1()
        }
    }

    /// Advection-diffusion with `κ = κ1 + μ(1 + x1)` on a 64x64 grid.
    pub fn experiment2() -> Self {
        Self {
            name: "experiment2".into(),
            problem: ProblemKind::AdvectionDiffusion,
            ..Self::experiment1()
        }
    }

    /// Experiment 2 with the multiscale model: 128x128 fine, 8x8 coarse.
    pub fn experiment2_multiscale() -> Self {
        Self {
            name: "experiment2_multiscale".into(),
            ..Self::experiment1_multiscale()
        }
        .with_problem(ProblemKind::AdvectionDiffusion)
    }

    /// A run that finishes in seconds: 8x8 grid, 5 samples, `N = 1`.
    pub fn smoke() -> Self {
        Self {
            name: "smoke".into(),
            fine: [8, 8],
            train_count: 5,
            reduction: 1,
            ddrom: DdromConfig {
                maxit: 50,
                ..DdromConfig::default()
            },
            ..Self::experiment1()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        Ok(match name {
            "experiment1" => Self::experiment1(),
            "experiment1_multiscale" => Self::experiment1_multiscale(),
            "experiment2" => Self::experiment2(),
            "experiment2_multiscale" => Self::experiment2_multiscale(),
            "smoke" => Self::smoke(),
            other => bail!("unknown preset `{other}`"),
        })
    }

    pub const PRESETS: [&'static str; 5] = [
        "experiment1",
        "experiment1_multiscale",
        "experiment2",
        "experiment2_multiscale",
        "smoke",
    ];

    fn with_problem(mut self, kind: ProblemKind) -> Self {
        self.problem = kind;
        self
    }

    pub fn problem_config(&self) -> ProblemConfig {
        ProblemConfig {
            kind: self.problem,
            beta: self.beta,
            contrast: self.contrast,
            pattern: self.pattern.clone(),
            output: self.output,
            interval: self.interval,
        }
    }

    /// Midpoint of the parameter interval.
    pub fn mu_bar(&self) -> f64 {
        0.5 * (self.interval[0] + self.interval[1])
    }

    pub fn test_count(&self) -> usize {
        self.test_count.unwrap_or(self.train_count.saturating_sub(1).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            bail!("interval [{a}, {b}] must satisfy a < b");
        }
        if self.train_count == 0 || self.test_count() == 0 {
            bail!("sample counts must be at least 1");
        }
        if self.fine.contains(&0) {
            bail!("fine grid must have at least one cell per direction");
        }
        if self.reduction == 0 {
            bail!("reduction level must be at least 1");
        }
        if !(self.beta > 0.0) {
            bail!("beta must be positive");
        }
        if !(self.ddrom.tol >= 0.0) || !(0.0 < self.ddrom.c1 && self.ddrom.c1 < self.ddrom.c2 && self.ddrom.c2 < 1.0) {
            bail!("need tol >= 0 and 0 < c1 < c2 < 1");
        }
        if let Some(c) = &self.coarse {
            if c.modes == 0 {
                bail!("coarse stage needs at least one mode per node");
            }
            for d in 0..2 {
                if c.grid[d] == 0 || !self.fine[d].is_multiple_of(c.grid[d]) {
                    bail!("coarse grid {:?} does not divide fine grid {:?}", c.grid, self.fine);
                }
            }
            if self.fine[0] / c.grid[0] != self.fine[1] / c.grid[1] {
                bail!("coarse grid must refine equally in both directions");
            }
        }
        self.pattern.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("parsing experiment configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}
