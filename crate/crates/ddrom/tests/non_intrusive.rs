//! The fitting path is built from this crate alone: it links without the
//! full-order assembly code and consumes only `(μ, y)` pairs.

mod common;

use common::*;
use socrom_ddrom::{fit, DdromMatrices, FitOptions, OutputSample};

#[test]
fn manifest_has_no_full_order_dependency() {
    let manifest = include_str!("../Cargo.toml");
    let table: toml::Table = manifest.parse().unwrap();
    for section in ["dependencies", "dev-dependencies", "build-dependencies"] {
        if let Some(deps) = table.get(section).and_then(|d| d.as_table()) {
            for (name, spec) in deps {
                assert!(!name.contains("core"), "{section} pulls in {name}");
                let path = spec.get("path").and_then(|p| p.as_str()).unwrap_or("");
                assert!(path.is_empty(), "{section} has a path dependency {name} -> {path}");
            }
        }
    }
}

#[test]
fn fit_runs_from_pairs_and_initial_matrices_only() {
    // the data are plain numbers; nothing else crosses into the fit
    let mut r = rng(3);
    let m = DdromMatrices::structured(random_blocks(&mut r, 2, 2)).unwrap();
    let pairs: Vec<(f64, f64)> = linspace(1.0, 10.0, 9)
        .into_iter()
        .map(|mu| (mu, (mu / 3.0).cos()))
        .collect();
    let data: Vec<OutputSample> = pairs.iter().map(|&(mu, y)| OutputSample { mu, y }).collect();
    let t = training(9);
    let (_, rep) = fit(&m, &data, &t, &FitOptions { maxit: 20, ..Default::default() }).unwrap();
    assert!(rep.final_objective <= rep.initial_objective);
}
