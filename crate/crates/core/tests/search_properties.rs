//! Randomized checks of the search protocol: verification never blames a
//! winning coordinate, losing more never helps, and groups are independent.

use proptest::prelude::*;
use rand::Rng;
use repval_core::qmat::random::rng_from_seed;
use repval_core::search::{exact_acceptance, exact_acceptance_enumerated, protocol_run, sample_run, SearchConfig};

fn tiny_config(m: usize, q: usize) -> SearchConfig {
    SearchConfig { eps_prime: 1.0 / m as f64, eta: 0.5, m, q, h: m * q, c_prime: 3.0, answer_bits: 1, index_bits: 2 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sampled_runs_only_report_losing_coordinates(seed: u64, n in 10usize..120, eps in 0.05f64..0.5, frac in 0.0f64..1.0) {
        let cfg = SearchConfig::new(eps, 0.2, n, 1, None).unwrap();
        prop_assume!(cfg.h <= n);
        let mut rng = rng_from_seed(seed);
        let loss: Vec<bool> = (0..n).map(|_| rng.random_bool(frac)).collect();
        for _ in 0..20 {
            let (found, steps) = sample_run(&loss, &cfg, &mut rng);
            if let Some(i) = found {
                prop_assert!(loss[i], "blamed winning coordinate {i}");
            }
            prop_assert!(steps <= cfg.q * repval_core::search::worst_case_steps(cfg.m));
        }
    }

    #[test]
    fn enumeration_factorizes_and_extra_losses_never_raise_acceptance(
        n in 2usize..=3, m in 1usize..=4, q in 1usize..=3, mask: u8, extra in 0usize..3,
    ) {
        let cfg = tiny_config(m, q);
        prop_assume!((n as u128).pow(cfg.h as u32) <= 1 << 16 && cfg.h <= n);
        let loss: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let enumerated = exact_acceptance_enumerated(&loss, &cfg).unwrap();
        prop_assert!((enumerated - exact_acceptance(&loss, &cfg).unwrap()).abs() < 1e-12);
        let mut more = loss.clone();
        more[extra % n] = true;
        let worse = exact_acceptance_enumerated(&more, &cfg).unwrap();
        prop_assert!(worse <= enumerated + 1e-12, "{worse} > {enumerated}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn monte_carlo_tracks_the_exact_acceptance(seed: u64, frac in 0.0f64..0.5) {
        let n = 200;
        let cfg = SearchConfig::new(0.1, 0.1, n, 1, None).unwrap();
        let losing = (frac * n as f64) as usize;
        let loss: Vec<bool> = (0..n).map(|i| i < losing).collect();
        let out = protocol_run(&loss, &cfg, 4000, seed).unwrap();
        let exact = exact_acceptance(&loss, &cfg).unwrap();
        prop_assert!((out.accept_prob - exact).abs() <= 5.0 * out.std_error + 1e-12, "{} vs {exact}", out.accept_prob);
    }
}
