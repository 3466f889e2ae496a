//! Randomized checks on advice states built from random qubit strategies and
//! on Protocol C for random classical strategies.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use repval_core::advice::{build_psi0, condition_win_all, measure_properties, protocol_c_classical, round_measured, ProtocolCMode, ADVICE_BUDGET};
use repval_core::error::Error;
use repval_core::qmat::random::rng_from_seed;
use repval_core::values::evaluate_quantum_strategy;

use common::{random_game, random_qubit_strategy, random_strategy};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_copy_conditioning_obeys_its_budget_and_rounds_within_the_chain(seed: u64) {
        let mut rng = rng_from_seed(seed);
        let g = random_game(&mut rng, 2, 2);
        let s = random_qubit_strategy(&mut rng, &g);
        let direct = evaluate_quantum_strategy(&g, &s).unwrap();
        let psi0 = build_psi0(&g, 1, &s, ADVICE_BUDGET).unwrap();
        let phi = match condition_win_all(&psi0) {
            Ok(phi) => phi,
            Err(Error::ZeroProbability) => {
                prop_assert!(direct < 1e-12);
                return Ok(());
            }
            Err(e) => panic!("{e}"),
        };
        prop_assert!((phi.lambda - direct).abs() < 1e-8, "{} vs {direct}", phi.lambda);
        let r = measure_properties(&phi).unwrap();
        prop_assert!(r.xe_max_divergence.value() <= r.log_inv_lambda + 1e-7);
        prop_assert!(r.divergence_sum <= r.log_inv_lambda + 1e-7);
        prop_assert!(r.invariants_hold);
        let rounding = round_measured(&phi, &r, 0).unwrap();
        prop_assert!(rounding.chain_holds, "{rounding:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn two_copy_conditioning_obeys_its_budget(seed: u64) {
        let mut rng = rng_from_seed(seed);
        let g = Arc::new(random_game(&mut rng, 2, 2));
        let s = random_qubit_strategy(&mut rng, &g);
        let s2 = s.tensor_power(2).unwrap();
        let direct = evaluate_quantum_strategy(&g.repeat(2).unwrap(), &s2).unwrap();
        prop_assume!(direct > 1e-9);
        let phi = condition_win_all(&build_psi0(&g, 2, &s2, ADVICE_BUDGET).unwrap()).unwrap();
        prop_assert!((phi.lambda - direct).abs() < 1e-8);
        let r = measure_properties(&phi).unwrap();
        prop_assert!(r.xe_max_divergence.value() <= r.log_inv_lambda + 1e-7);
        prop_assert!(r.divergence_sum <= r.log_inv_lambda + 1e-7);
        prop_assert!(r.invariants_hold);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn protocol_c_conditionals_factorize(seed: u64, n in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let g = Arc::new(random_game(&mut rng, 2, 2));
        let s = random_strategy(&mut rng, &g.repeat(n).unwrap());
        let size = rng.random_range(1..n);
        let mut coords: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            coords.swap(i, rng.random_range(0..=i));
        }
        coords.truncate(size);
        match protocol_c_classical(&g, n, &s, &coords, ProtocolCMode::Exact) {
            Ok(r) => {
                prop_assert!(r.factorization_defect < 1e-12, "{}", r.factorization_defect);
                prop_assert!(r.delta >= -1e-12 && r.lambda > 0.0);
            }
            Err(Error::ZeroProbability) => {}
            Err(e) => panic!("{e}"),
        }
    }
}
