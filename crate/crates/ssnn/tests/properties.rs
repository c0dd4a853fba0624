//! Randomized invariant checks for the numeric building blocks.

use nalgebra::DVector;
use proptest::prelude::*;
use ssnn::benchmark::SisoTruth;
use ssnn::objectives::kernel_weights;
use ssnn::prior::LinearPrior;
use ssnn::{rbf_activation, AugmentedModel64};

fn finite_vec(len: usize, range: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-range..range, len)
}

proptest! {
    #[test]
    fn rbf_outputs_stay_in_unit_interval(z in finite_vec(8, 50.0)) {
        let out = rbf_activation(&DVector::from_vec(z)).unwrap();
        // exp(-z^2) underflows to exactly zero for |z| above ~27
        prop_assert!(out.iter().all(|v| *v >= 0.0 && *v <= 1.0));
    }

    #[test]
    fn parameter_round_trip(
        seed in 0u64..1000,
        vals in finite_vec(64, 5.0),
        with_g in proptest::bool::ANY,
    ) {
        let m0 = AugmentedModel64::init(LinearPrior::siso(0.5, 0.5), 3, seed, with_g).unwrap();
        let theta = DVector::from_iterator(
            m0.param_count(),
            vals.into_iter().take(m0.param_count()),
        );
        let m = m0.with_params(&theta).unwrap();
        prop_assert_eq!(m.flatten_params(), theta);
    }

    #[test]
    fn weights_bounded_and_monotone(
        train in proptest::collection::vec(finite_vec(2, 3.0), 1..6),
        reg in proptest::collection::vec(finite_vec(2, 3.0), 1..6),
        extra in finite_vec(2, 3.0),
        sigma in 0.05f64..1.0,
        epsilon in 0.01f64..1.0,
    ) {
        let to_pairs = |v: &Vec<Vec<f64>>| -> Vec<DVector<f64>> {
            v.iter().map(|p| DVector::from_vec(p.clone())).collect()
        };
        let train = to_pairs(&train);
        let reg = to_pairs(&reg);
        let w = kernel_weights(&train, &reg, sigma, epsilon).unwrap();
        prop_assert!(w.values().iter().all(|v| *v > 0.0 && *v <= 1.0 / epsilon));

        let mut bigger = train.clone();
        bigger.push(DVector::from_vec(extra));
        let w2 = kernel_weights(&bigger, &reg, sigma, epsilon).unwrap();
        prop_assert!(w.values().iter().zip(w2.values()).all(|(a, b)| b <= a));
    }

    #[test]
    fn delta_antisymmetric_about_midpoint(t in -3.0f64..3.0) {
        let truth = SisoTruth::default();
        let sum = truth.delta(-0.15 + t) + truth.delta(-0.15 - t);
        prop_assert!(sum.abs() <= 1e-13);
    }

    #[test]
    fn init_is_deterministic(seed in 0u64..500, with_g in proptest::bool::ANY) {
        let a = AugmentedModel64::init(LinearPrior::siso(0.8, 0.2), 5, seed, with_g).unwrap();
        let b = AugmentedModel64::init(LinearPrior::siso(0.8, 0.2), 5, seed, with_g).unwrap();
        prop_assert_eq!(a.flatten_params(), b.flatten_params());
    }
}
