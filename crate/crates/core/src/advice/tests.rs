use super::*;
use crate::games::{chsh, ClassicalStrategy, InputDist};
use crate::qmat::{outer, random, C64};
use crate::values::evaluate_quantum_strategy;
use std::f64::consts::PI;

fn projector(theta: f64) -> CMat {
    outer(&CVec::from_vec(vec![cr(theta.cos()), cr(theta.sin())]))
}

fn binary_povm(theta: f64) -> Vec<CMat> {
    let p = projector(theta);
    vec![p.clone(), identity(2) - p]
}

/// Maximally entangled pair with measurements at the usual CHSH angles.
fn chsh_optimal() -> QuantumStrategy {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    QuantumStrategy {
        dims: vec![2, 2],
        state: CVec::from_vec(vec![cr(h), cr(0.0), cr(0.0), cr(h)]),
        povms: vec![vec![binary_povm(0.0), binary_povm(PI / 4.0)], vec![binary_povm(PI / 8.0), binary_povm(-PI / 8.0)]],
    }
}

fn random_binary_strategy(seed: u64) -> QuantumStrategy {
    let mut rng = random::rng_from_seed(seed);
    let state = random::random_pure(&mut rng, 4);
    let povms = (0..2)
        .map(|_| {
            (0..2)
                .map(|_| {
                    let u = random::haar_unitary(&mut rng, 2);
                    let p = outer(&u.column(0).into_owned());
                    vec![p.clone(), identity(2) - p]
                })
                .collect()
        })
        .collect();
    QuantumStrategy { dims: vec![2, 2], state, povms }
}

fn copy_inputs() -> Game {
    Game::from_fn(vec![2, 2], vec![2, 2], InputDist::Product(vec![vec![0.3, 0.7], vec![0.5, 0.5]]), |x, a| a == x).unwrap()
}

fn identity_strategy(n: usize) -> QuantumStrategy {
    // Each player answers its own input in every coordinate.
    let m = 1usize << n;
    let s = ClassicalStrategy { tables: vec![(0..m).collect(), (0..m).collect()] };
    let rep = Arc::new(copy_inputs()).repeat(n).unwrap();
    QuantumStrategy::from_classical(&rep, &s).unwrap()
}

/// Joint `(x, a)` distribution of one copy, straight from the Born rule.
fn single_xa(g: &Game, s: &QuantumStrategy) -> Vec<Vec<f64>> {
    (0..4)
        .map(|x| {
            let (x0, x1) = (x / 2, x % 2);
            (0..4)
                .map(|a| {
                    let m = kron(&s.povms[0][x0][a / 2], &s.povms[1][x1][a % 2]);
                    g.input_prob(&[x0, x1]) * (s.state.adjoint() * m * &s.state)[(0, 0)].re
                })
                .collect()
        })
        .collect()
}

#[test]
fn psi0_is_normalized_and_reproduces_the_inputs() {
    let g = copy_inputs();
    let adv = build_psi0(&g, 2, &identity_strategy(2), ADVICE_BUDGET).unwrap();
    assert!((adv.state.trace() - 1.0).abs() < 1e-12);
    let labels = adv.all_inputs();
    let dist = adv.state.distribution(&labels).unwrap();
    let r = Radix::new(&[2, 2, 2, 2]);
    for (idx, p) in dist.iter().enumerate() {
        let d = r.decode(idx);
        let expect = g.input_prob(&d[0..2]) * g.input_prob(&d[2..4]);
        assert!((p - expect).abs() < 1e-14);
    }
}

#[test]
fn perfect_strategy_only_shows_winning_tuples() {
    let g = copy_inputs();
    let adv = build_psi0(&g, 2, &identity_strategy(2), ADVICE_BUDGET).unwrap();
    let mut on = adv.all_inputs();
    on.extend((0..2).flat_map(|i| adv.coordinate_answers(i)));
    let dist = adv.state.distribution(&on).unwrap();
    let r = Radix::new(&[2; 8]);
    for (idx, p) in dist.iter().enumerate() {
        if *p > 1e-15 {
            let d = r.decode(idx);
            assert_eq!(&d[0..4], &d[4..8]);
        }
    }
    let won = condition_win_all(&adv).unwrap();
    assert!((won.lambda - 1.0).abs() < 1e-12);
    assert!((adv.state.inner(&won.state).unwrap().norm() - 1.0).abs() < 1e-12);
}

#[test]
fn xa_marginal_matches_direct_simulation() {
    let g = chsh();
    let single = random_binary_strategy(11);
    let s = single.tensor_power(2).unwrap();
    let adv = build_psi0(&g, 2, &s, ADVICE_BUDGET).unwrap();
    let mut on = adv.all_inputs();
    on.extend((0..2).flat_map(|i| adv.coordinate_answers(i)));
    let dist = adv.state.distribution(&on).unwrap();
    let p1 = single_xa(&g, &single);
    let r = Radix::new(&[2; 8]);
    for (idx, p) in dist.iter().enumerate() {
        let d = r.decode(idx);
        // Two independent copies: coordinate i has inputs d[2i..2i+2], answers d[4+2i..6+2i].
        let expect: f64 = (0..2).map(|i| p1[d[2 * i] * 2 + d[2 * i + 1]][d[4 + 2 * i] * 2 + d[5 + 2 * i]]).product();
        assert!((p - expect).abs() < 1e-8, "{idx}: {p} vs {expect}");
    }
}

#[test]
fn budget_is_enforced_before_allocation() {
    let s = chsh_optimal().tensor_power(2).unwrap();
    let r = build_psi0(&chsh(), 2, &s, 1 << 15);
    assert!(matches!(r, Err(Error::Budget { needed: 65536, .. })));
}

#[test]
fn win_all_probability_matches_direct_evaluation() {
    let g = chsh();
    for s in [chsh_optimal(), random_binary_strategy(5)] {
        let s2 = s.tensor_power(2).unwrap();
        let adv = condition_win_all(&build_psi0(&g, 2, &s2, ADVICE_BUDGET).unwrap()).unwrap();
        let rep = Arc::new(g.clone()).repeat(2).unwrap();
        let direct = evaluate_quantum_strategy(&rep, &s2).unwrap();
        assert!((adv.lambda - direct).abs() < 1e-8);
        let single = evaluate_quantum_strategy(&g, &s).unwrap();
        assert!((adv.lambda - single * single).abs() < 1e-8);
    }
}

#[test]
fn always_losing_strategy_has_no_conditioned_state() {
    let g = copy_inputs();
    let m = 4;
    // Answer the complement of the input in every coordinate.
    let s = ClassicalStrategy { tables: vec![(0..m).map(|x| 3 - x).collect(), (0..m).map(|x| 3 - x).collect()] };
    let rep = Arc::new(g.clone()).repeat(2).unwrap();
    let q = QuantumStrategy::from_classical(&rep, &s).unwrap();
    let adv = build_psi0(&g, 2, &q, ADVICE_BUDGET).unwrap();
    assert!(matches!(condition_win_all(&adv), Err(Error::ZeroProbability)));
}

#[test]
fn unconditioned_state_has_no_skew() {
    let g = chsh();
    let adv = build_psi0(&g, 2, &random_binary_strategy(3).tensor_power(2).unwrap(), ADVICE_BUDGET).unwrap();
    let r = measure_properties(&adv).unwrap();
    assert!(r.input_divergence.iter().all(|&d| d.abs() < 1e-12));
    // No-signaling: the other player's registers carry nothing about x_(i,j).
    assert!(r.mutual_info.iter().flatten().all(|&i| i < 1e-9));
    assert!(r.invariants_hold);
}

#[test]
fn conditioned_skew_is_bounded_by_log_inverse_lambda() {
    let g = chsh();
    for s in [chsh_optimal(), random_binary_strategy(8)] {
        let adv = condition_win_all(&build_psi0(&g, 2, &s.tensor_power(2).unwrap(), ADVICE_BUDGET).unwrap()).unwrap();
        let r = measure_properties(&adv).unwrap();
        assert!(r.divergence_sum <= r.log_inv_lambda + 1e-7);
        assert!(r.xe_max_divergence.value() <= r.log_inv_lambda + 1e-7);
        assert!(r.coordinate_win.iter().all(|&w| (w - 1.0).abs() < 1e-9), "{:?}", r.coordinate_win);
        assert!(r.invariants_hold);
    }
}

#[test]
fn perfect_product_strategy_rounds_to_a_perfect_strategy() {
    let g = copy_inputs();
    let adv = condition_win_all(&build_psi0(&g, 2, &identity_strategy(2), ADVICE_BUDGET).unwrap()).unwrap();
    let r = round_and_play(&adv, 1).unwrap();
    let ro = r.rounding.unwrap();
    assert!((ro.kappa - 1.0).abs() < 1e-9);
    assert!(ro.rounding_gap.abs() < 1e-12);
    assert!(ro.chain_holds && ro.kappa_holds);
}

#[test]
fn unconditioned_rounding_plays_the_single_copy_value() {
    let g = chsh();
    let s = random_binary_strategy(21);
    let adv = build_psi0(&g, 2, &s.tensor_power(2).unwrap(), ADVICE_BUDGET).unwrap();
    let ro = round_and_play(&adv, 0).unwrap().rounding.unwrap();
    assert!(ro.avg_bures < 1e-9);
    let single = evaluate_quantum_strategy(&g, &s).unwrap();
    assert!((ro.kappa - single).abs() < 1e-8, "{} vs {single}", ro.kappa);
}

#[test]
fn conditioned_chsh_chain_holds() {
    let g = chsh();
    let adv = condition_win_all(&build_psi0(&g, 2, &chsh_optimal().tensor_power(2).unwrap(), ADVICE_BUDGET).unwrap()).unwrap();
    for i in 0..2 {
        let r = round_and_play(&adv, i).unwrap();
        let ro = r.rounding.as_ref().unwrap();
        assert!(ro.chain_holds, "{ro:?}");
        assert!(ro.kappa_holds, "{ro:?}");
        assert!((0.0..=1.0).contains(&ro.kappa));
    }
}

/// Random `0 <= V <= id` on two qubits.
fn random_verifier(rng: &mut impl rand::Rng) -> CMat {
    let u = random::haar_unitary(rng, 4);
    let d: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
    &u * crate::qmat::diag(&d) * u.adjoint()
}

fn random_cq(seed: u64) -> (CqGame, CqStrategy) {
    let mut rng = random::rng_from_seed(seed);
    let vs = (0..4).map(|_| random_verifier(&mut rng)).collect();
    let g = CqGame::new(vec![2, 2], vec![2, 2], InputDist::Product(vec![vec![0.4, 0.6], vec![0.5, 0.5]]), vs).unwrap();
    // Two repetitions: each player holds a 2-dim E and a 4-dim answer.
    let unitaries = (0..2).map(|_| (0..4).map(|_| random::haar_unitary(&mut rng, 8)).collect()).collect();
    let s = CqStrategy { e_dims: vec![2, 2], a_dims: vec![4, 4], state: random::random_pure(&mut rng, 64), unitaries };
    (g, s)
}

/// `Pr(win C)` with every operator written out on `E0 A0 E1 A1`.
fn direct_win_prob(g: &CqGame, s: &CqStrategy, coords: &[usize]) -> f64 {
    let digits = |v: usize| [v / 2, v % 2];
    let mut total = 0.0;
    for x in 0..16 {
        let (x0, x1) = (x / 4, x % 4);
        let (c0, c1) = (digits(x0), digits(x1));
        let psi = kron(&s.unitaries[0][x0], &s.unitaries[1][x1]) * &s.state;
        // Basis index (e0, a00, a10, e1, a01, a11), each binary.
        let mut w = CMat::zeros(64, 64);
        for r in 0..64 {
            for c in 0..64 {
                let (rb, cb) = (|b: usize| (r >> (5 - b)) & 1, |b: usize| (c >> (5 - b)) & 1);
                if rb(0) != cb(0) || rb(3) != cb(3) {
                    continue;
                }
                let mut z = C64::new(1.0, 0.0);
                for i in 0..2 {
                    let (ar0, ar1, ac0, ac1) = (rb(1 + i), rb(4 + i), cb(1 + i), cb(4 + i));
                    if coords.contains(&i) {
                        z *= g.verification(&[c0[i], c1[i]])[(ar0 * 2 + ar1, ac0 * 2 + ac1)];
                    } else if ar0 != ac0 || ar1 != ac1 {
                        z = C64::new(0.0, 0.0);
                    }
                }
                w[(r, c)] = z;
            }
        }
        let p = g.input_prob(&[c0[0], c1[0]]) * g.input_prob(&[c0[1], c1[1]]);
        total += p * (psi.adjoint() * w * &psi)[(0, 0)].re;
    }
    total
}

#[test]
fn subset_conditioning_matches_direct_measurement() {
    for seed in 0..3 {
        let (g, s) = random_cq(seed);
        for coords in [vec![0], vec![1], vec![0, 1]] {
            let adv = condition_win_subset_cq(&g, 2, &s, &coords, ADVICE_BUDGET).unwrap();
            let direct = direct_win_prob(&g, &s, &coords);
            assert!((adv.lambda - direct).abs() < 1e-8, "{coords:?}: {} vs {direct}", adv.lambda);
            let r = measure_properties(&adv).unwrap();
            assert!(r.divergence_sum <= r.log_inv_lambda + 1e-7);
            assert!(r.xe_max_divergence.value() <= r.log_inv_lambda + 1e-7);
        }
        let all = condition_win_subset_cq(&g, 2, &s, &[0, 1], ADVICE_BUDGET).unwrap();
        let rep = Arc::new(g.clone()).repeat(2).unwrap();
        assert!((all.lambda - crate::values::evaluate_cq_strategy(&rep, &s).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn trivial_subset_conditions_have_probability_one() {
    let (g, s) = random_cq(4);
    assert!((condition_win_subset_cq(&g, 2, &s, &[], ADVICE_BUDGET).unwrap().lambda - 1.0).abs() < 1e-12);
    let free = CqGame::new(vec![2, 2], vec![2, 2], g.mu().clone(), vec![identity(4); 4]).unwrap();
    assert!((condition_win_subset_cq(&free, 2, &s, &[0, 1], ADVICE_BUDGET).unwrap().lambda - 1.0).abs() < 1e-12);
}

#[test]
fn cq_rounding_chain_holds() {
    let (g, s) = random_cq(9);
    let adv = condition_win_subset_cq(&g, 2, &s, &[0], ADVICE_BUDGET).unwrap();
    let ro = round_and_play(&adv, 1).unwrap().rounding.unwrap();
    assert!(ro.avg_bures <= ro.info_bound + 1e-6);
    assert!(ro.rounding_gap <= ro.avg_bures + 1e-6);
}
