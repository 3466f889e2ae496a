//! Games with classical questions and quantum answers, verified by a binary
//! measurement `{V_x, id - V_x}` on the answer registers.

use std::sync::Arc;

use super::{coordinate_digit, repeat_inputs, Game, InputDist, MATERIALIZE_LIMIT};
use crate::error::{Error, Result};
use crate::qmat::{cr, hermitian_eigenvalues, hermiticity_defect, kron, CMat, Radix, PSD_SLACK};

#[derive(Debug, Clone, PartialEq)]
enum Verification {
    Table(Vec<CMat>),
    Repeated { base: Arc<CqGame>, n: usize },
}

/// A CQ game. `V_x` acts on `A_0 ⊗ ... ⊗ A_{k-1}` with `A_0` most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct CqGame {
    inputs: Vec<usize>,
    answer_dims: Vec<usize>,
    mu: InputDist,
    verification: Verification,
}

impl CqGame {
    /// Validates `0 <= V_x <= id` up to the PSD slack.
    pub fn new(inputs: Vec<usize>, answer_dims: Vec<usize>, mu: InputDist, verification: Vec<CMat>) -> Result<CqGame> {
        let outputs = answer_dims.clone();
        Game::validate_shape(&inputs, &outputs, &mu)?;
        let nx: usize = inputs.iter().product();
        let d: usize = answer_dims.iter().product();
        if verification.len() != nx {
            return Err(Error::DimensionMismatch(format!("{} verification operators for {nx} inputs", verification.len())));
        }
        for (x, v) in verification.iter().enumerate() {
            if v.nrows() != d || v.ncols() != d {
                return Err(Error::DimensionMismatch(format!("V_{x} is {}x{}, answers have dimension {d}", v.nrows(), v.ncols())));
            }
            let h = hermiticity_defect(v);
            if h > 1e-10 {
                return Err(Error::NotHermitian(h));
            }
            let ev = hermitian_eigenvalues(v)?;
            let (hi, lo) = (ev[0], ev[ev.len() - 1]);
            if lo < -PSD_SLACK {
                return Err(Error::NotPsd(lo));
            }
            if hi > 1.0 + PSD_SLACK {
                return Err(Error::Invalid(format!("V_{x} has eigenvalue {hi} above 1")));
            }
        }
        Ok(CqGame { inputs, answer_dims, mu, verification: Verification::Table(verification) })
    }

    /// The classical game with `V_x = diag_a V(x, a)`.
    pub fn from_classical(g: &Game) -> Result<CqGame> {
        let nx = g.num_inputs();
        let na = g.num_outputs();
        if nx.saturating_mul(na) > MATERIALIZE_LIMIT {
            return Err(Error::Budget { what: "diagonal verification".into(), needed: nx * na, limit: MATERIALIZE_LIMIT });
        }
        let (rx, ra) = (g.input_radix(), g.output_radix());
        let vs = (0..nx as usize)
            .map(|xi| {
                let x = rx.decode(xi);
                let d: Vec<f64> = (0..na as usize).map(|ai| f64::from(u8::from(g.accepts(&x, &ra.decode(ai))))).collect();
                crate::qmat::diag(&d)
            })
            .collect();
        Ok(CqGame { inputs: g.inputs().to_vec(), answer_dims: g.outputs().to_vec(), mu: g.mu().clone(), verification: Verification::Table(vs) })
    }

    pub fn k(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn answer_dims(&self) -> &[usize] {
        &self.answer_dims
    }

    pub fn mu(&self) -> &InputDist {
        &self.mu
    }

    pub fn is_free(&self) -> bool {
        matches!(self.mu, InputDist::Product(_))
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.iter().product()
    }

    pub fn answer_dim(&self) -> usize {
        self.answer_dims.iter().product()
    }

    pub fn input_prob(&self, x: &[usize]) -> f64 {
        match &self.mu {
            InputDist::Product(m) => x.iter().zip(m).map(|(&xj, mj)| mj[xj]).product(),
            InputDist::Explicit(p) => p[Radix::new(&self.inputs).encode(x)],
        }
    }

    /// `V_x`. For a repeated game this is `⊗_i V_{x_i}` with the answer
    /// registers regrouped player by player.
    pub fn verification(&self, x: &[usize]) -> CMat {
        match &self.verification {
            Verification::Table(vs) => vs[Radix::new(&self.inputs).encode(x)].clone(),
            Verification::Repeated { base, n } => {
                let k = self.k();
                let mut w = CMat::from_element(1, 1, cr(1.0));
                let mut xi = vec![0; k];
                for i in 0..*n {
                    for j in 0..k {
                        xi[j] = coordinate_digit(x[j], base.inputs[j], *n, i);
                    }
                    w = kron(&w, &base.verification(&xi));
                }
                let perm = player_major_permutation(&base.answer_dims, *n);
                let d = perm.len();
                CMat::from_fn(d, d, |r, c| w[(perm[r], perm[c])])
            }
        }
    }

    /// `W_x = ⊗_i V_{x_i}` over `n` coordinates, built lazily per input.
    pub fn repeat(self: &Arc<Self>, n: usize) -> Result<CqGame> {
        if n == 0 {
            return Err(Error::Invalid("repetition count must be at least 1".into()));
        }
        if n == 1 {
            return Ok((**self).clone());
        }
        let d = (self.answer_dim() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if d.saturating_mul(d) > MATERIALIZE_LIMIT {
            return Err(Error::Budget { what: "repeated verification operator".into(), needed: d.saturating_mul(d), limit: MATERIALIZE_LIMIT });
        }
        let (inputs, mu) = repeat_inputs(&self.inputs, &self.mu, n)?;
        Ok(CqGame {
            inputs,
            answer_dims: self.answer_dims.iter().map(|d| d.pow(n as u32)).collect(),
            mu,
            verification: Verification::Repeated { base: Arc::clone(self), n },
        })
    }
}

/// `perm[p]` is the coordinate-major index (coordinate 0 player 0 first) of
/// the player-major index `p` (player 0 coordinates 0..n first).
fn player_major_permutation(dims: &[usize], n: usize) -> Vec<usize> {
    let k = dims.len();
    let pm: Vec<usize> = (0..k).flat_map(|j| std::iter::repeat_n(dims[j], n)).collect();
    let cm: Vec<usize> = (0..n).flat_map(|_| dims.iter().copied()).collect();
    let (rp, rc) = (Radix::new(&pm), Radix::new(&cm));
    (0..rp.size())
        .map(|p| {
            let digits = rp.decode(p);
            // digits[j * n + i] is coordinate i of player j.
            let cdig: Vec<usize> = (0..n).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| digits[j * n + i]).collect();
            rc.encode(&cdig)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{chsh, from_coordinate_digits};
    use crate::qmat::{identity, random};

    fn uniform(k: usize, d: usize) -> InputDist {
        InputDist::Product(vec![vec![1.0 / d as f64; d]; k])
    }

    #[test]
    fn rejects_operators_outside_unit_interval() {
        let too_big = crate::qmat::diag(&[1.2, 0.0]);
        assert!(CqGame::new(vec![1], vec![2], uniform(1, 1), vec![too_big]).is_err());
        let neg = crate::qmat::diag(&[-0.1, 0.0]);
        assert!(CqGame::new(vec![1], vec![2], uniform(1, 1), vec![neg]).is_err());
    }

    #[test]
    fn repeat_of_identity_is_identity() {
        let g = Arc::new(CqGame::new(vec![2, 2], vec![2, 2], uniform(2, 2), vec![identity(4); 4]).unwrap());
        let r = g.repeat(2).unwrap();
        assert_eq!(r.answer_dims(), &[4, 4]);
        assert!(crate::qmat::max_abs_diff(&r.verification(&[3, 1]), &identity(16)) < 1e-15);
        assert_eq!(g.repeat(1).unwrap(), *g);
    }

    #[test]
    fn repeated_lift_matches_repeated_classical() {
        let g = chsh();
        let cq = Arc::new(CqGame::from_classical(&g).unwrap());
        let rep = Arc::new(g).repeat(2).unwrap();
        let rcq = cq.repeat(2).unwrap();
        let ra = rep.output_radix();
        for x0 in 0..4 {
            for x1 in 0..4 {
                let w = rcq.verification(&[x0, x1]);
                for ai in 0..16 {
                    let a = ra.decode(ai);
                    let want = f64::from(u8::from(rep.accepts(&[x0, x1], &a)));
                    assert_eq!(w[(ai, ai)].re, want);
                }
            }
        }
        let _ = from_coordinate_digits(&[0, 1], 2);
    }

    #[test]
    fn repeated_operator_stays_below_identity() {
        let mut rng = random::rng_from_seed(11);
        let vs: Vec<CMat> = (0..4)
            .map(|_| {
                let r = random::random_density(&mut rng, 4, 4);
                let top = crate::qmat::hermitian_eigenvalues(&r).unwrap()[0];
                r / cr(top)
            })
            .collect();
        let g = Arc::new(CqGame::new(vec![2, 2], vec![2, 2], uniform(2, 2), vs).unwrap());
        let r = g.repeat(2).unwrap();
        for x in 0..4 {
            let ev = hermitian_eigenvalues(&r.verification(&[x / 2, x % 2])).unwrap();
            assert!(ev[0] <= 1.0 + 1e-10 && *ev.last().unwrap() >= -1e-10);
        }
    }
}
