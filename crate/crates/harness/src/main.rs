use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use socrom::config::ExperimentConfig;
use socrom::report::{read_samples, write_fit_history, write_samples, ErrorReport};
use socrom::run::{run_experiment, training_set, Model};
use socrom_core::fom::solve_all;
use socrom_core::rom::{pod_basis, SnapshotSet};
use socrom_ddrom::{fit, io as ddrom_io, outputs, FitOptions, OutputSample, TrainingSet};

#[derive(Parser)]
#[command(name = "socrom", version, about = "Data-driven reduced models of parametric optimal control problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration name.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => bail!("pass --config <file> or --preset <name>"),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: snapshots, POD, Galerkin ROM, fit and error reports.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solves the model at the training parameters and writes `mu,y`.
    FomSweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the POD singular values of the training snapshots.
    Pod {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the local spectral data of the multiscale basis.
    GmsfemBasis {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits reduced matrices to `mu,y` samples. Needs no full-order model.
    Fit {
        /// Initial matrices in the text format.
        #[arg(long)]
        matrices: PathBuf,
        /// CSV with header `mu,y`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        maxit: usize,
        #[arg(long, default_value_t = 1e-16)]
        tol: f64,
    },
    /// Summarizes the error tables of a run directory.
    Report {
        dir: PathBuf,
    },
    /// Prints a built-in configuration as JSON.
    Config {
        #[arg(default_value = "experiment1")]
        preset: String,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = init_threads().and_then(|_| dispatch(Cli::parse())) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SOCROM_THREADS") {
        let n: usize = v.parse().with_context(|| format!("SOCROM_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { cfg, out } => {
            let cfg = cfg.load()?;
            let run = run_experiment(&cfg, Some(&out))?;
            println!(
                "{}: test L2 error Galerkin {:e}, fitted {:e} ({} iterations, {})",
                cfg.name,
                run.rom_test.summary.l2_abs,
                run.ddrom_test.summary.l2_abs,
                run.fit.iterations(),
                run.fit.stop_reason.as_str()
            );
        }
        Command::FomSweep { cfg, out } => {
            let cfg = cfg.load()?;
            let model = Model::build(&cfg)?;
            let set = training_set(&cfg)?;
            let sols = solve_all(model.system(), set.samples())?;
            let y: Vec<f64> = sols.iter().map(|s| s.y).collect();
            write_samples(set.samples(), &y, &out)?;
            info!("wrote {} samples to {}", y.len(), out.display());
        }
        Command::Pod { cfg, out } => {
            let cfg = cfg.load()?;
            let model = Model::build(&cfg)?;
            let set = training_set(&cfg)?;
            let sols = solve_all(model.system(), set.samples())?;
            let basis = pod_basis(&SnapshotSet::from_solutions(&sols)?, cfg.reduction)?;
            std::fs::create_dir_all(&out)?;
            write_values(&out.join("control_singular_values.csv"), &basis.control_singular_values)?;
            write_values(&out.join("state_singular_values.csv"), &basis.state_singular_values)?;
            let (ce, se) = basis.energy_fractions();
            println!("retained energy: control {ce:e}, state/adjoint {se:e}");
        }
        Command::GmsfemBasis { cfg, out } => {
            let cfg = cfg.load()?;
            if cfg.coarse.is_none() {
                bail!("configuration `{}` has no coarse grid", cfg.name);
            }
            let model = Model::build(&cfg)?;
            let basis = model.multiscale.as_ref().expect("coarse model");
            std::fs::create_dir_all(&out)?;
            let path = out.join("eigenvalues.csv");
            let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
            w.write_record(["node", "mode", "eigenvalue"])?;
            for (node, vals) in basis.eigenvalues.iter().enumerate() {
                for (mode, v) in vals.iter().enumerate() {
                    w.write_record([node.to_string(), mode.to_string(), format!("{v:e}")])?;
                }
            }
            w.flush()?;
            println!("{} basis functions on {} coarse nodes", basis.n_basis(), basis.eigenvalues.len());
        }
        Command::Fit { matrices, data, out, maxit, tol } => {
            let initial = ddrom_io::read_file(&matrices)?;
            let pairs = read_samples(&data)?;
            let set = TrainingSet::uniform(pairs.iter().map(|p| p.0).collect())?;
            let samples: Vec<OutputSample> = pairs.iter().map(|&(mu, y)| OutputSample { mu, y }).collect();
            let opts = FitOptions { maxit, tol, ..FitOptions::default() };
            let (fitted, report) = fit(&initial, &samples, &set, &opts)?;
            std::fs::create_dir_all(&out)?;
            ddrom_io::write_file(&fitted, &out.join("ddrom_matrices.txt"))?;
            write_fit_history(&report, &out.join("fit_history.csv"))?;
            std::fs::write(out.join("fit_report.json"), serde_json::to_string_pretty(&report)?)?;
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            ErrorReport::new(&set, &y, &outputs(&fitted, set.samples())?)?.write_csv(&out.join("errors_train.csv"))?;
            println!(
                "objective {:e} -> {:e} in {} iterations ({})",
                report.initial_objective,
                report.final_objective,
                report.iterations(),
                report.stop_reason.as_str()
            );
        }
        Command::Report { dir } => {
            for (label, file) in [
                ("fitted, test", "errors.csv"),
                ("fitted, train", "errors_train.csv"),
                ("Galerkin, test", "errors_rom.csv"),
                ("Galerkin, train", "errors_rom_train.csv"),
            ] {
                let path = dir.join(file);
                if !path.exists() {
                    continue;
                }
                let s = ErrorReport::read_csv(&path)?.summary;
                println!(
                    "{label:16} L2 abs {:e}  L2 rel {:e}  max abs {:e}",
                    s.l2_abs, s.l2_rel, s.max_abs
                );
            }
        }
        Command::Config { preset } => {
            if !ExperimentConfig::PRESETS.contains(&preset.as_str()) {
                bail!("unknown preset `{preset}`; known: {}", ExperimentConfig::PRESETS.join(", "));
            }
            println!("{}", ExperimentConfig::preset(&preset)?.to_json());
        }
    }
    Ok(())
}

fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["index", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}
