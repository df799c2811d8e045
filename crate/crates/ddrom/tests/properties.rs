//! Algebraic properties of the reduced model and its objective.

mod common;

use common::*;
use nalgebra::DVector;
use proptest::prelude::*;
use socrom_ddrom::objective::{outputs, squared_error};
use socrom_ddrom::{gradients, objective, DdromMatrices, FullGradient, TrainingSet};

fn model(seed: u64) -> DdromMatrices {
    let mut r = rng(seed);
    DdromMatrices::structured(random_blocks(&mut r, 3, 2)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn duality_identity(seed in 0u64..10_000, mu in 1.0f64..10.0) {
        let m = model(seed);
        let (x, y) = m.solve(mu).unwrap();
        let xd = m.dual_solve(mu).unwrap();
        let via_dual = m.rhs(mu).dot(&xd);
        prop_assert!((y - via_dual).abs() <= 1e-12 * (1.0 + x.norm() * xd.norm()));
    }

    #[test]
    fn quadratic_form_expansion(seed in 0u64..10_000, n in 2usize..12) {
        let m = model(seed);
        let t = training(n);
        let data = perturbed_data(&m, &t, 0.5);
        let y: Vec<f64> = data.iter().map(|d| d.y).collect();
        let yh = outputs(&m, t.samples()).unwrap();
        let j = objective(&m, &data, &t).unwrap();
        let expanded = t.inner(&y, &y) - 2.0 * t.inner(&y, &yh) + t.inner(&yh, &yh);
        prop_assert!((j - expanded).abs() <= 1e-12 * (1.0 + t.inner(&y, &y)));
    }

    #[test]
    fn masked_gradient_matches_directional_difference(seed in 0u64..10_000, dir_seed in 0u64..10_000) {
        // an arbitrary perturbation of the full matrices (violating the
        // skeleton) is projected onto the free parameters
        let m = model(seed);
        let t = training(6);
        let data = perturbed_data(&m, &t, 0.5);
        let full = gradients(&m, &data, &t).unwrap();
        let mut r = rng(dir_seed);
        let raw = FullGradient {
            a: m.a_terms().iter().map(|a| random_matrix(&mut r, a.nrows(), a.ncols(), 1.0)).collect(),
            b: m.b_terms().iter().map(|b| random_vector(&mut r, b.len(), 1.0)).collect(),
            c: m.c_terms().iter().map(|c| random_vector(&mut r, c.len(), 1.0)).collect(),
        };
        let d = m.free_gradient(&raw);
        let g = m.free_gradient(&full);
        let h = 1e-6;
        let p = m.params();
        let jp = objective(&m.with_params(&(&p + &d * h)).unwrap(), &data, &t).unwrap();
        let jm = objective(&m.with_params(&(&p - &d * h)).unwrap(), &data, &t).unwrap();
        let fd = (jp - jm) / (2.0 * h);
        let an = g.dot(&d);
        prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(g.norm() * d.norm() * 1e-3),
            "fd {} analytic {}", fd, an);
    }

    #[test]
    fn parameter_round_trip_preserves_skeleton(seed in 0u64..10_000) {
        let m = model(seed);
        let p = m.params();
        prop_assert_eq!(p.len(), m.n_params());
        let back = m.with_params(&p).unwrap();
        prop_assert_eq!(&back, &m);
        // perturbing every free parameter keeps the zero blocks and ties
        let shifted = m.with_params(&p.map(|v| v + 0.25)).unwrap();
        let l = m.layout();
        let a0 = &shifted.a_terms()[0];
        for i in l.state() {
            for j in l.adjoint() {
                prop_assert_eq!(a0[(i, j)], 0.0);
                prop_assert_eq!(a0[(j, i)], 0.0);
            }
        }
        for q in 1..shifted.a_terms().len() {
            let aq = &shifted.a_terms()[q];
            for i in l.state() {
                for j in l.adjoint() {
                    prop_assert_eq!(aq[(i, j)], aq[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn output_linear_in_constant_load(seed in 0u64..10_000, mu in 1.0f64..10.0) {
        let mut r = rng(seed);
        let mut b = random_blocks(&mut r, 2, 3);
        for (_, u) in &mut b.loads {
            u.fill(0.0);
        }
        let one = DdromMatrices::structured(b.clone()).unwrap();
        b.boundary *= 2.0;
        let two = DdromMatrices::structured(b).unwrap();
        let y1 = one.solve(mu).unwrap().1;
        let y2 = two.solve(mu).unwrap().1;
        prop_assert!((y2 - 2.0 * y1).abs() <= 1e-12 * (1.0 + y1.abs()));
    }
}

#[test]
fn zero_outputs_give_zero_dual_state() {
    let mut r = rng(1);
    let mut b = random_blocks(&mut r, 2, 2);
    for (_, c) in &mut b.outputs {
        c.fill(0.0);
    }
    let m = DdromMatrices::structured(b).unwrap();
    assert_eq!(m.dual_solve(3.0).unwrap(), DVector::zeros(m.dim()));
}

#[test]
fn symmetric_system_dual_equals_forward_with_output_rhs() {
    let mut r = rng(9);
    let mut b = random_blocks(&mut r, 2, 2);
    for (_, k) in &mut b.stiffness {
        *k = (&*k + k.transpose()) * 0.5;
    }
    let m = DdromMatrices::structured(b).unwrap();
    let mu = 4.5;
    let a = m.system_matrix(mu);
    assert!((&a - a.transpose()).amax() <= 1e-14);
    let forward = a.lu().solve(&m.output_row(mu)).unwrap();
    assert!((m.dual_solve(mu).unwrap() - forward).amax() <= 1e-12);
}

#[test]
fn weighted_objective_uses_weights() {
    let m = model(3);
    let t = TrainingSet::weighted(vec![1.0, 5.0], vec![0.25, 0.75]).unwrap();
    let yh = outputs(&m, t.samples()).unwrap();
    let y = vec![yh[0] + 2.0, yh[1] - 1.0];
    assert!((squared_error(&y, &yh, &t) - (0.25 * 4.0 + 0.75)).abs() < 1e-14);
}
