#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socrom_ddrom::{DdromMatrices, OutputSample, SaddleBlocks, ScalarFn, TrainingSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * rng.random_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// Symmetric positive definite with eigenvalues bounded away from zero.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = random_matrix(rng, n, n, 0.5);
    &g * g.transpose() + DMatrix::identity(n, n)
}

/// Saddle blocks with two stiffness terms, two loads and two outputs whose
/// system matrix stays well conditioned for μ in `[1, 10]`.
pub fn random_blocks(rng: &mut ChaCha8Rng, nf: usize, nu: usize) -> SaddleBlocks {
    let r = nf + 2 * nu;
    let m1 = random_spd(rng, nf);
    let m2 = random_matrix(rng, nu, nf, 0.5);
    let m3 = random_spd(rng, nu);
    let k1 = random_spd(rng, nu) * 2.0 + random_matrix(rng, nu, nu, 0.2);
    let k2 = random_spd(rng, nu) * 0.5;
    SaddleBlocks {
        beta: 0.5,
        m1,
        m2,
        m3,
        stiffness: vec![(ScalarFn::ONE, k1), (ScalarFn::MU, k2)],
        boundary: random_vector(rng, nu, 0.3),
        loads: vec![
            (ScalarFn::ONE, random_vector(rng, nu, 1.0)),
            (ScalarFn::MU, random_vector(rng, nu, 0.2)),
        ],
        outputs: vec![
            (ScalarFn::ONE, random_vector(rng, r, 1.0)),
            (ScalarFn::MU, random_vector(rng, r, 0.1)),
        ],
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn training(n: usize) -> TrainingSet {
    TrainingSet::uniform(linspace(1.0, 10.0, n)).unwrap()
}

/// Outputs of `truth` at the training samples.
pub fn data_from(truth: &DdromMatrices, t: &TrainingSet) -> Vec<OutputSample> {
    t.samples()
        .iter()
        .map(|&mu| OutputSample {
            mu,
            y: truth.solve(mu).unwrap().1,
        })
        .collect()
}

/// Synthetic data: the model's own outputs plus a smooth perturbation.
pub fn perturbed_data(m: &DdromMatrices, t: &TrainingSet, amp: f64) -> Vec<OutputSample> {
    t.samples()
        .iter()
        .map(|&mu| OutputSample {
            mu,
            y: m.solve(mu).unwrap().1 + amp * (0.7 * mu).sin(),
        })
        .collect()
}
