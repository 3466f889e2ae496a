//! A handful of tiny binary-answer games used to check that the value
//! engines agree with each other. The same games ship as JSON under
//! `corpus/` at the repository root.

use crate::games::{chsh, Game, InputDist};

fn uniform(k: usize, d: usize) -> InputDist {
    InputDist::Product(vec![vec![1.0 / d as f64; d]; k])
}

fn game(inputs: Vec<usize>, mu: InputDist, accept: impl Fn(&[usize], &[usize]) -> bool) -> Game {
    let outputs = vec![2; inputs.len()];
    Game::from_fn(inputs, outputs, mu, accept).expect("corpus games are well formed")
}

/// `(name, game)` pairs, all with two answers per player.
pub fn tiny_games() -> Vec<(&'static str, Game)> {
    // a xor b = f(x, y) on three inputs each.
    const XOR3: [[usize; 3]; 3] = [[0, 1, 1], [1, 0, 1], [0, 0, 1]];
    let mut ghz_mu = vec![0.0; 8];
    for x in [0b000, 0b011, 0b101, 0b110] {
        ghz_mu[x] = 0.25;
    }
    vec![
        ("chsh", chsh()),
        (
            "chsh_biased",
            game(vec![2, 2], InputDist::Product(vec![vec![0.3, 0.7], vec![0.6, 0.4]]), |x, a| (a[0] ^ a[1]) == (x[0] & x[1])),
        ),
        ("chsh_or", game(vec![2, 2], uniform(2, 2), |x, a| (a[0] ^ a[1]) == (x[0] | x[1]))),
        ("all_accept", game(vec![2, 2], uniform(2, 2), |_, _| true)),
        ("all_reject", game(vec![2, 2], uniform(2, 2), |_, _| false)),
        ("copy_inputs", game(vec![2, 2], uniform(2, 2), |x, a| a == x)),
        ("guess_partner", game(vec![2, 2], uniform(2, 2), |x, a| a[0] == x[1] && a[1] == x[0])),
        ("match_answers", game(vec![2, 2], uniform(2, 2), |_, a| a[0] == a[1])),
        ("dictator", game(vec![2, 2], uniform(2, 2), |x, a| a[0] == x[0] && a[1] == x[0])),
        ("xor_3x3", game(vec![3, 3], uniform(2, 3), |x, a| (a[0] ^ a[1]) == XOR3[x[0]][x[1]])),
        ("ghz", game(vec![2, 2, 2], InputDist::Explicit(ghz_mu), |x, a| (a[0] ^ a[1] ^ a[2]) == (x[0] | x[1] | x[2]))),
        ("parity_and_3", game(vec![2, 2, 2], uniform(3, 2), |x, a| (a[0] ^ a[1] ^ a[2]) == (x[0] & x[1] & x[2]))),
    ]
}

/// Local dimensions the see-saw uses for a corpus game.
pub fn seesaw_dims(g: &Game) -> Vec<usize> {
    vec![2; g.k()]
}
