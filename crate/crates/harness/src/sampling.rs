//! Training and test parameter sets.

use anyhow::{bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socrom_ddrom::TrainingSet;

use crate::config::SamplingMode;

/// `count` evenly spaced values including both ends; `[a]` for one value.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        n => {
            let h = (b - a) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
            v[n - 1] = b;
            v
        }
    }
}

/// Uniformly weighted training parameters. Random draws are sorted so the
/// set does not depend on the order of generation.
pub fn sample_parameters(interval: [f64; 2], count: usize, mode: SamplingMode, seed: u64) -> Result<TrainingSet> {
    let [a, b] = interval;
    if count == 0 {
        bail!("need at least one sample");
    }
    if !(a < b) {
        bail!("empty interval [{a}, {b}]");
    }
    let samples = match mode {
        SamplingMode::UniformLinspace => linspace(a, b, count),
        SamplingMode::RandomUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<f64> = (0..count).map(|_| rng.random_range(a..=b)).collect();
            v.sort_by(f64::total_cmp);
            v
        }
    };
    Ok(TrainingSet::uniform(samples)?)
}

/// Midpoints of `count` equal cells of the interval, minus any point that
/// coincides with a training sample.
pub fn test_parameters(interval: [f64; 2], count: usize, training: &TrainingSet) -> Result<TrainingSet> {
    let [a, b] = interval;
    let h = (b - a) / count as f64;
    let tol = 1e-12 * (b - a);
    let samples: Vec<f64> = (0..count)
        .map(|k| a + h * (k as f64 + 0.5))
        .filter(|mu| training.samples().iter().all(|t| (t - mu).abs() > tol))
        .collect();
    if samples.is_empty() {
        bail!("no test parameter is disjoint from the training set");
    }
    Ok(TrainingSet::uniform(samples)?)
}
