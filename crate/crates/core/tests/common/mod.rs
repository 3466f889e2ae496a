//! Random tiny games and strategies shared by the property tests.

#![allow(dead_code)]

use rand::Rng;
use repval_core::games::{ClassicalStrategy, Game, InputDist, QuantumStrategy};
use repval_core::qmat::random::{haar_unitary, random_distribution, random_pure, TestRng};
use repval_core::qmat::{basis, identity, outer, CMat, Radix};

/// A free game with binary answers and a random predicate.
pub fn random_game(rng: &mut TestRng, k: usize, max_inputs: usize) -> Game {
    let inputs: Vec<usize> = (0..k).map(|_| rng.random_range(2..=max_inputs)).collect();
    let outputs = vec![2; k];
    let mu = InputDist::Product(inputs.iter().map(|&d| random_distribution(rng, d)).collect());
    let mut dims = inputs.clone();
    dims.extend(&outputs);
    let r = Radix::new(&dims);
    let table: Vec<bool> = (0..r.size()).map(|_| rng.random_bool(0.5)).collect();
    Game::from_fn(inputs, outputs, mu, |x, a| {
        let digits: Vec<usize> = x.iter().chain(a).copied().collect();
        table[r.encode(&digits)]
    })
    .unwrap()
}

pub fn random_strategy(rng: &mut TestRng, g: &Game) -> ClassicalStrategy {
    ClassicalStrategy {
        tables: g.inputs().iter().zip(g.outputs()).map(|(&dx, &da)| (0..dx).map(|_| rng.random_range(0..da)).collect()).collect(),
    }
}

/// Two-outcome projective measurements on qubits for every player and input,
/// sharing a random two-qubit-per-player pure state.
pub fn random_qubit_strategy(rng: &mut TestRng, g: &Game) -> QuantumStrategy {
    let k = g.k();
    let povms = g
        .inputs()
        .iter()
        .map(|&dx| {
            (0..dx)
                .map(|_| {
                    let u = haar_unitary(rng, 2);
                    let p0: CMat = &u * outer(&basis(2, 0)) * u.adjoint();
                    vec![p0.clone(), identity(2) - p0]
                })
                .collect()
        })
        .collect();
    QuantumStrategy { dims: vec![2; k], state: random_pure(rng, 1 << k), povms }
}
