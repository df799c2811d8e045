//! Behaviour of the fitting loop on synthetic data.

mod common;

use common::*;
use proptest::prelude::*;
use socrom_ddrom::{
    fit, io, objective, DdromError, DdromMatrices, FitOptions, OutputSample, StopReason,
    TrainingSet,
};

fn opts(maxit: usize) -> FitOptions {
    FitOptions {
        maxit,
        ..Default::default()
    }
}

fn assert_monotone(history: &[socrom_ddrom::IterationRecord]) {
    for w in history.windows(2) {
        assert!(
            w[1].objective <= w[0].objective,
            "objective rose from {} to {} at iteration {}",
            w[0].objective,
            w[1].objective,
            w[1].iteration
        );
    }
}

#[test]
fn exact_initial_model_stops_at_the_first_iteration() {
    let mut r = rng(77);
    let m = DdromMatrices::structured(random_blocks(&mut r, 3, 2)).unwrap();
    let t = training(15);
    let data = data_from(&m, &t);
    let (fitted, rep) = fit(&m, &data, &t, &opts(1000)).unwrap();
    assert_eq!(rep.stop_reason, StopReason::RelativeChange);
    assert!(rep.iterations() <= 1);
    assert!(rep.final_relative_change <= 1e-15);
    assert!(rep.final_objective <= 1e-18);
    assert_eq!(fitted, m);
}

#[test]
fn fit_reduces_the_error_to_a_perturbed_model() {
    // data from a nearby model with the same structure
    let mut r = rng(31);
    let truth_blocks = random_blocks(&mut r, 2, 2);
    let truth = DdromMatrices::structured(truth_blocks.clone()).unwrap();
    let mut start_blocks = truth_blocks;
    start_blocks.m3 *= 1.3;
    start_blocks.stiffness[1].1 *= 0.7;
    start_blocks.loads[0].1 *= 0.8;
    let start = DdromMatrices::structured(start_blocks).unwrap();
    let t = training(25);
    let data = data_from(&truth, &t);
    let (fitted, rep) = fit(&start, &data, &t, &opts(300)).unwrap();
    assert_monotone(&rep.history);
    assert!(rep.final_objective < 1e-3 * rep.initial_objective, "{rep:?}");
    let j = objective(&fitted, &data, &t).unwrap();
    assert!((j - rep.final_objective).abs() <= 1e-12 * (1.0 + j));
}

#[test]
fn unstructured_fit_also_decreases() {
    let mut r = rng(8);
    let m = DdromMatrices::structured(random_blocks(&mut r, 2, 2))
        .unwrap()
        .into_unstructured();
    let t = training(12);
    let data = perturbed_data(&m, &t, 0.2);
    let (_, rep) = fit(&m, &data, &t, &opts(50)).unwrap();
    assert_monotone(&rep.history);
    assert!(rep.final_objective < rep.initial_objective);
}

#[test]
fn maxit_bounds_the_iterations() {
    let mut r = rng(4);
    let m = DdromMatrices::structured(random_blocks(&mut r, 2, 2)).unwrap();
    let t = training(10);
    let data = perturbed_data(&m, &t, 0.5);
    let (_, rep) = fit(&m, &data, &t, &opts(3)).unwrap();
    assert!(rep.history.len() <= 4);
    if rep.stop_reason == StopReason::MaxIterations {
        assert_eq!(rep.history.last().unwrap().iteration, 3);
    }
}

#[test]
fn infeasible_initial_model_is_rejected() {
    let mut r = rng(4);
    let mut b = random_blocks(&mut r, 2, 2);
    // K(μ) = K1 + μ K2 singular at μ = 2 makes the saddle matrix singular
    b.stiffness[0].1 = -b.stiffness[1].1.clone() * 2.0;
    b.m2.fill(0.0);
    let m = DdromMatrices::structured(b).unwrap();
    let t = TrainingSet::uniform(vec![1.0, 2.0, 3.0]).unwrap();
    let data: Vec<OutputSample> = t.samples().iter().map(|&mu| OutputSample { mu, y: 1.0 }).collect();
    match fit(&m, &data, &t, &opts(10)) {
        Err(DdromError::Infeasible { mu, .. }) => {
            assert_eq!(mu, 2.0)
        }
        other => panic!("expected infeasibility at mu = 2, got {other:?}"),
    }
}

#[test]
fn misaligned_data_is_rejected() {
    let mut r = rng(4);
    let m = DdromMatrices::structured(random_blocks(&mut r, 2, 2)).unwrap();
    let t = training(4);
    let data = vec![OutputSample { mu: 1.0, y: 0.0 }];
    assert!(fit(&m, &data, &t, &opts(5)).is_err());
}

#[test]
fn fitted_model_survives_a_text_round_trip() {
    let mut r = rng(19);
    let m = DdromMatrices::structured(random_blocks(&mut r, 2, 3)).unwrap();
    let t = training(8);
    let data = perturbed_data(&m, &t, 0.1);
    let (fitted, _) = fit(&m, &data, &t, &opts(5)).unwrap();
    let back = io::read_str(&io::write_string(&fitted)).unwrap();
    assert_eq!(back, fitted);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn history_is_nonincreasing(seed in 0u64..100_000, amp in 0.01f64..1.0) {
        let mut r = rng(seed);
        let m = DdromMatrices::structured(random_blocks(&mut r, 2, 2)).unwrap();
        let t = training(10);
        let data = perturbed_data(&m, &t, amp);
        let (_, rep) = fit(&m, &data, &t, &opts(40)).unwrap();
        for w in rep.history.windows(2) {
            prop_assert!(w[1].objective <= w[0].objective);
        }
        prop_assert!(rep.final_objective <= rep.initial_objective);
        prop_assert_eq!(rep.final_objective, rep.history.last().unwrap().objective);
    }
}
