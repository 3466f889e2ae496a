//! k-player games with classical questions: input distributions, predicate
//! tables, parallel repetition, uniformization and the agreement game.
//!
//! Joint inputs and answers are indexed in mixed radix with player 0 as the
//! most significant digit. A predicate index is `x_index * |A| + a_index`,
//! i.e. the x digits followed by the a digits.

mod cq;
pub mod json;
mod strategy;

pub use cq::CqGame;
pub use strategy::{ClassicalStrategy, CqStrategy, NsBehavior, QuantumStrategy};

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::Radix;

/// Tolerance on probability vectors summing to one.
pub const DIST_TOL: f64 = 1e-12;
/// Tables with fewer entries than this are stored as dense bitmaps.
pub const DENSE_LIMIT: u128 = 1 << 20;
/// Largest table a game will ever materialize.
pub const MATERIALIZE_LIMIT: u128 = 1 << 28;

/// Input distribution: a product of marginals (a free game) or a full joint vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputDist {
    Product(Vec<Vec<f64>>),
    Explicit(Vec<f64>),
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Invalid(format!("{what} has entry {v}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DIST_TOL * p.len().max(1) as f64 {
        return Err(Error::Invalid(format!("{what} sums to {s}")));
    }
    Ok(())
}

/// Accepted (x, a) pairs, by predicate index.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Table {
    /// Bit `t` lives in word `t / 64`, bit `t % 64`.
    Dense(Vec<u64>),
    Accept(HashSet<u64>),
}

impl Table {
    fn get(&self, t: u64) -> bool {
        match self {
            Table::Dense(w) => (w[(t / 64) as usize] >> (t % 64)) & 1 == 1,
            Table::Accept(s) => s.contains(&t),
        }
    }

    fn build(total: u128, accepted: impl Iterator<Item = u64>) -> Table {
        if total < DENSE_LIMIT {
            let mut w = vec![0u64; (total as usize).div_ceil(64)];
            for t in accepted {
                w[(t / 64) as usize] |= 1 << (t % 64);
            }
            Table::Dense(w)
        } else {
            Table::Accept(accepted.collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Predicate {
    Table(Table),
    Repeated { base: Arc<Game>, n: usize },
}

/// A k-player game `(X, A, mu, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    mu: InputDist,
    predicate: Predicate,
}

fn checked_product(sizes: impl IntoIterator<Item = usize>) -> u128 {
    sizes.into_iter().fold(1u128, |acc, s| acc.saturating_mul(s as u128))
}

impl Game {
    fn validate_shape(inputs: &[usize], outputs: &[usize], mu: &InputDist) -> Result<()> {
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(Error::Invalid(format!(
                "{} input alphabets but {} output alphabets",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.iter().chain(outputs).any(|&s| s == 0) {
            return Err(Error::Invalid("empty alphabet".into()));
        }
        match mu {
            InputDist::Product(m) => {
                if m.len() != inputs.len() {
                    return Err(Error::DimensionMismatch(format!("{} marginals for {} players", m.len(), inputs.len())));
                }
                for (j, (mj, &d)) in m.iter().zip(inputs).enumerate() {
                    if mj.len() != d {
                        return Err(Error::DimensionMismatch(format!("marginal {j} has length {} not {d}", mj.len())));
                    }
                    check_distribution(mj, &format!("marginal {j}"))?;
                }
            }
            InputDist::Explicit(p) => {
                let n = checked_product(inputs.iter().copied());
                if p.len() as u128 != n {
                    return Err(Error::DimensionMismatch(format!("joint distribution of length {} for {n} inputs", p.len())));
                }
                check_distribution(p, "input distribution")?;
            }
        }
        Ok(())
    }

    /// Build a game by evaluating `accept(x, a)` on every pair.
    pub fn from_fn(
        inputs: Vec<usize>,
        outputs: Vec<usize>,
        mu: InputDist,
        accept: impl Fn(&[usize], &[usize]) -> bool,
    ) -> Result<Game> {
        Self::validate_shape(&inputs, &outputs, &mu)?;
        let nx = checked_product(inputs.iter().copied());
        let na = checked_product(outputs.iter().copied());
        let total = nx.saturating_mul(na);
        if total > MATERIALIZE_LIMIT {
            return Err(Error::Budget { what: "predicate table".into(), needed: total, limit: MATERIALIZE_LIMIT });
        }
        let (rx, ra) = (Radix::new(&inputs), Radix::new(&outputs));
        let na = na as u64;
        let accepted = (0..nx as u64).flat_map(|xi| {
            let x = rx.decode(xi as usize);
            let ra = &ra;
            let accept = &accept;
            (0..na).filter(move |&ai| accept(&x, &ra.decode(ai as usize))).map(move |ai| xi * na + ai)
        });
        let table = Table::build(total, accepted);
        Ok(Game { inputs, outputs, mu, predicate: Predicate::Table(table) })
    }

    /// Build a game from the list of accepted `(x..., a...)` tuples.
    pub fn from_accepted(inputs: Vec<usize>, outputs: Vec<usize>, mu: InputDist, accepted: &[Vec<usize>]) -> Result<Game> {
        Self::validate_shape(&inputs, &outputs, &mu)?;
        let k = inputs.len();
        let mut dims = inputs.clone();
        dims.extend(&outputs);
        let total = checked_product(dims.iter().copied());
        if total > MATERIALIZE_LIMIT {
            return Err(Error::Budget { what: "predicate table".into(), needed: total, limit: MATERIALIZE_LIMIT });
        }
        let radix = Radix::new(&dims);
        let mut idx = Vec::with_capacity(accepted.len());
        for t in accepted {
            if t.len() != 2 * k || t.iter().zip(&dims).any(|(v, d)| v >= d) {
                return Err(Error::Invalid(format!("accepted tuple {t:?} does not fit alphabets {dims:?}")));
            }
            idx.push(radix.encode(t) as u64);
        }
        Ok(Game { inputs, outputs, mu, predicate: Predicate::Table(Table::build(total, idx.into_iter())) })
    }

    /// Build a game from a bitmap over predicate indices, least significant bit first.
    pub fn from_bitmap(inputs: Vec<usize>, outputs: Vec<usize>, mu: InputDist, bytes: &[u8]) -> Result<Game> {
        Self::validate_shape(&inputs, &outputs, &mu)?;
        let total = checked_product(inputs.iter().chain(&outputs).copied());
        if total > MATERIALIZE_LIMIT {
            return Err(Error::Budget { what: "predicate table".into(), needed: total, limit: MATERIALIZE_LIMIT });
        }
        let need = (total as usize).div_ceil(8);
        if bytes.len() != need {
            return Err(Error::DimensionMismatch(format!("bitmap has {} bytes, expected {need}", bytes.len())));
        }
        let accepted = (0..total as u64).filter(|&t| (bytes[(t / 8) as usize] >> (t % 8)) & 1 == 1);
        Ok(Game { inputs, outputs, mu, predicate: Predicate::Table(Table::build(total, accepted)) })
    }

    pub fn k(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn mu(&self) -> &InputDist {
        &self.mu
    }

    pub fn is_free(&self) -> bool {
        matches!(self.mu, InputDist::Product(_))
    }

    /// `s = max_j log2 |A_j|`.
    pub fn answer_bits(&self) -> f64 {
        self.outputs.iter().map(|&a| (a as f64).log2()).fold(0.0, f64::max)
    }

    /// Number of joint inputs `|X|`.
    pub fn num_inputs(&self) -> u128 {
        checked_product(self.inputs.iter().copied())
    }

    /// Number of joint answers `|A|`.
    pub fn num_outputs(&self) -> u128 {
        checked_product(self.outputs.iter().copied())
    }

    pub fn input_radix(&self) -> Radix {
        Radix::new(&self.inputs)
    }

    pub fn output_radix(&self) -> Radix {
        Radix::new(&self.outputs)
    }

    /// Number of repetitions this game was built with (1 for a base game).
    pub fn repetitions(&self) -> usize {
        match &self.predicate {
            Predicate::Table(_) => 1,
            Predicate::Repeated { base, n } => n * base.repetitions(),
        }
    }

    /// `mu(x)` for a joint input given by digits.
    pub fn input_prob(&self, x: &[usize]) -> f64 {
        match &self.mu {
            InputDist::Product(m) => x.iter().zip(m).map(|(&xj, mj)| mj[xj]).product(),
            InputDist::Explicit(p) => p[self.input_radix().encode(x)],
        }
    }

    /// The full joint input distribution, indexed by joint input.
    pub fn joint_input_dist(&self) -> Result<Vec<f64>> {
        let n = self.num_inputs();
        if n > MATERIALIZE_LIMIT {
            return Err(Error::Budget { what: "joint input distribution".into(), needed: n, limit: MATERIALIZE_LIMIT });
        }
        Ok(match &self.mu {
            InputDist::Explicit(p) => p.clone(),
            InputDist::Product(_) => {
                let r = self.input_radix();
                (0..n as usize).map(|i| self.input_prob(&r.decode(i))).collect()
            }
        })
    }

    /// `V(x, a)`.
    pub fn accepts(&self, x: &[usize], a: &[usize]) -> bool {
        match &self.predicate {
            Predicate::Table(t) => {
                let xi = self.input_radix().encode(x) as u64;
                let ai = self.output_radix().encode(a) as u64;
                t.get(xi * self.num_outputs() as u64 + ai)
            }
            Predicate::Repeated { base, n } => {
                let (bx, ba) = (base.inputs(), base.outputs());
                let k = x.len();
                let mut xi = vec![0; k];
                let mut ai = vec![0; k];
                (0..*n).all(|i| {
                    for j in 0..k {
                        xi[j] = coordinate_digit(x[j], bx[j], *n, i);
                        ai[j] = coordinate_digit(a[j], ba[j], *n, i);
                    }
                    base.accepts(&xi, &ai)
                })
            }
        }
    }

    /// `G^{⊗n}`: player j's input is the n-digit base-`|X_j|` number whose
    /// first digit is coordinate 0; answers likewise. The predicate stays lazy.
    pub fn repeat(self: &Arc<Self>, n: usize) -> Result<Game> {
        if n == 0 {
            return Err(Error::Invalid("repetition count must be at least 1".into()));
        }
        if n == 1 {
            return Ok((**self).clone());
        }
        let (inputs, mu) = repeat_inputs(&self.inputs, &self.mu, n)?;
        let outputs = self.outputs.iter().map(|&d| power(d, n)).collect::<Result<Vec<_>>>()?;
        Ok(Game { inputs, outputs, mu, predicate: Predicate::Repeated { base: Arc::clone(self), n } })
    }

    /// A copy with the predicate stored as a table, when it fits in `limit` entries.
    pub fn materialize(&self, limit: u128) -> Result<Game> {
        let total = self.num_inputs().saturating_mul(self.num_outputs());
        if total > limit.min(MATERIALIZE_LIMIT) {
            return Err(Error::Budget { what: "predicate table".into(), needed: total, limit: limit.min(MATERIALIZE_LIMIT) });
        }
        match &self.predicate {
            Predicate::Table(_) => Ok(self.clone()),
            Predicate::Repeated { .. } => {
                Game::from_fn(self.inputs.clone(), self.outputs.clone(), self.mu.clone(), |x, a| self.accepts(x, a))
            }
        }
    }

    /// Sorted predicate indices of all accepted pairs.
    pub fn accepted_indices(&self) -> Result<Vec<u64>> {
        let g = self.materialize(MATERIALIZE_LIMIT)?;
        let Predicate::Table(t) = &g.predicate else { unreachable!("materialized") };
        Ok(match t {
            Table::Dense(w) => {
                let total = (self.num_inputs() * self.num_outputs()) as u64;
                (0..total).filter(|&i| (w[(i / 64) as usize] >> (i % 64)) & 1 == 1).collect()
            }
            Table::Accept(s) => {
                let mut v: Vec<u64> = s.iter().copied().collect();
                v.sort_unstable();
                v
            }
        })
    }

    /// Same game with player alphabets relabeled: `input_perm[j][x]` and
    /// `output_perm[j][a]` are the new labels.
    pub fn relabel(&self, input_perm: &[Vec<usize>], output_perm: &[Vec<usize>]) -> Result<Game> {
        let k = self.k();
        if input_perm.len() != k || output_perm.len() != k {
            return Err(Error::DimensionMismatch("one permutation per player".into()));
        }
        let inverse = |p: &Vec<usize>, d: usize| -> Result<Vec<usize>> {
            let mut inv = vec![usize::MAX; d];
            if p.len() != d {
                return Err(Error::Invalid("permutation has the wrong length".into()));
            }
            for (i, &v) in p.iter().enumerate() {
                if v >= d || inv[v] != usize::MAX {
                    return Err(Error::Invalid("not a permutation".into()));
                }
                inv[v] = i;
            }
            Ok(inv)
        };
        let xin: Vec<Vec<usize>> = (0..k).map(|j| inverse(&input_perm[j], self.inputs[j])).collect::<Result<_>>()?;
        let ain: Vec<Vec<usize>> = (0..k).map(|j| inverse(&output_perm[j], self.outputs[j])).collect::<Result<_>>()?;
        let mu = match &self.mu {
            InputDist::Product(m) => InputDist::Product((0..k).map(|j| xin[j].iter().map(|&x| m[j][x]).collect()).collect()),
            InputDist::Explicit(_) => {
                let r = self.input_radix();
                let p = (0..self.num_inputs() as usize)
                    .map(|i| {
                        let x: Vec<usize> = r.decode(i).iter().enumerate().map(|(j, &v)| xin[j][v]).collect();
                        self.input_prob(&x)
                    })
                    .collect();
                InputDist::Explicit(p)
            }
        };
        Game::from_fn(self.inputs.clone(), self.outputs.clone(), mu, |x, a| {
            let x0: Vec<usize> = x.iter().enumerate().map(|(j, &v)| xin[j][v]).collect();
            let a0: Vec<usize> = a.iter().enumerate().map(|(j, &v)| ain[j][v]).collect();
            self.accepts(&x0, &a0)
        })
    }
}

fn power(d: usize, n: usize) -> Result<usize> {
    d.checked_pow(n as u32).ok_or_else(|| Error::Budget {
        what: "repeated alphabet".into(),
        needed: (d as u128).saturating_pow(n as u32),
        limit: usize::MAX as u128,
    })
}

/// Alphabets and input distribution of `n` independent coordinates.
pub(crate) fn repeat_inputs(inputs: &[usize], mu: &InputDist, n: usize) -> Result<(Vec<usize>, InputDist)> {
    let rep = inputs.iter().map(|&d| power(d, n)).collect::<Result<Vec<_>>>()?;
    let mu = match mu {
        InputDist::Product(m) => InputDist::Product(m.iter().map(|mj| tensor_power(mj, n)).collect()),
        InputDist::Explicit(p) => {
            let total = checked_product(rep.iter().copied());
            if total > MATERIALIZE_LIMIT {
                return Err(Error::Budget { what: "repeated joint distribution".into(), needed: total, limit: MATERIALIZE_LIMIT });
            }
            let (r, base) = (Radix::new(&rep), Radix::new(inputs));
            let k = inputs.len();
            let mut xi = vec![0; k];
            let q = (0..total as usize)
                .map(|idx| {
                    let x = r.decode(idx);
                    (0..n)
                        .map(|i| {
                            for j in 0..k {
                                xi[j] = coordinate_digit(x[j], inputs[j], n, i);
                            }
                            p[base.encode(&xi)]
                        })
                        .product()
                })
                .collect();
            InputDist::Explicit(q)
        }
    };
    Ok((rep, mu))
}

/// Digit for coordinate `i` of an n-digit base-`d` number, coordinate 0 first.
pub fn coordinate_digit(v: usize, d: usize, n: usize, i: usize) -> usize {
    (v / d.pow((n - 1 - i) as u32)) % d
}

/// Digits of an n-digit base-`d` number, coordinate 0 first.
pub fn coordinate_digits(v: usize, d: usize, n: usize) -> Vec<usize> {
    (0..n).map(|i| coordinate_digit(v, d, n, i)).collect()
}

/// Inverse of [`coordinate_digits`].
pub fn from_coordinate_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

fn tensor_power(p: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
    }
    out
}

/// A game with uniform marginals plus the maps back to the original inputs.
#[derive(Debug, Clone)]
pub struct Uniformized {
    pub game: Game,
    /// `maps[j][u]` is the original input of player j encoded by `u in [M_j]`.
    pub maps: Vec<Vec<usize>>,
    /// Total variation between each pushed-forward uniform marginal and the original.
    pub tv: Vec<f64>,
}

impl Uniformized {
    /// Strategy for the uniformized game that answers as `s` does on `f_j(u)`.
    pub fn pullback(&self, s: &ClassicalStrategy) -> ClassicalStrategy {
        ClassicalStrategy {
            tables: self.maps.iter().zip(&s.tables).map(|(f, h)| f.iter().map(|&x| h[x]).collect()).collect(),
        }
    }
}

/// Largest-remainder rounding of `p` to counts summing to `m`.
pub fn largest_remainder(p: &[f64], m: usize) -> Vec<usize> {
    let scaled: Vec<f64> = p.iter().map(|v| v * m as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let short = m.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..p.len()).collect();
    // Stable sort: ties go to the smaller index.
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Smallest `M <= max_m` whose largest-remainder rounding of `p` is within `tol` in TV.
pub fn uniform_denominator(p: &[f64], tol: f64, max_m: usize) -> Result<(usize, Vec<usize>, f64)> {
    for m in 1..=max_m {
        let counts = largest_remainder(p, m);
        let tv = 0.5 * counts.iter().zip(p).map(|(&c, &q)| (c as f64 / m as f64 - q).abs()).sum::<f64>();
        if tv <= tol + 1e-15 {
            return Ok((m, counts, tv));
        }
    }
    Err(Error::Budget { what: "uniformization denominator".into(), needed: max_m as u128 + 1, limit: max_m as u128 })
}

/// Replace each marginal by a uniform variable over `[M_j]` pushed through a
/// map `f_j`, choosing the least `M_j` with TV at most `gamma / k`.
pub fn uniformize(g: &Game, gamma: f64) -> Result<Uniformized> {
    let InputDist::Product(marginals) = g.mu() else {
        return Err(Error::Invalid("uniformization needs a free game".into()));
    };
    if !(gamma > 0.0) {
        return Err(Error::Invalid(format!("gamma must be positive, got {gamma}")));
    }
    let k = g.k();
    let tol = gamma / k as f64;
    let mut maps = Vec::with_capacity(k);
    let mut tv = Vec::with_capacity(k);
    for mj in marginals {
        let max_m = ((mj.len() as f64 / tol).ceil() as usize).max(mj.len()) + 1;
        let (_, counts, t) = uniform_denominator(mj, tol, max_m)?;
        maps.push(counts.iter().enumerate().flat_map(|(x, &c)| std::iter::repeat_n(x, c)).collect::<Vec<_>>());
        tv.push(t);
    }
    let inputs: Vec<usize> = maps.iter().map(Vec::len).collect();
    let mu = InputDist::Product(inputs.iter().map(|&m| vec![1.0 / m as f64; m]).collect());
    let game = Game::from_fn(inputs, g.outputs().to_vec(), mu, |u, a| {
        let x: Vec<usize> = u.iter().enumerate().map(|(j, &v)| maps[j][v]).collect();
        g.accepts(&x, a)
    })?;
    Ok(Uniformized { game, maps, tv })
}

/// Answer `(i, bit)` of the agreement game is encoded as `2 i + bit`.
pub fn agreement_answer(i: usize, bit: usize) -> usize {
    2 * i + bit
}

/// The k-player agreement game: uniform input bits, answers `(i_j, a_j)`,
/// win iff all players name the same `i` and `x_i` equals the parity of the
/// other players' bits.
pub fn build_agreement_game(k: usize) -> Result<Game> {
    if k < 2 {
        return Err(Error::Invalid(format!("agreement game needs k >= 2, got {k}")));
    }
    let mu = InputDist::Product(vec![vec![0.5, 0.5]; k]);
    Game::from_fn(vec![2; k], vec![2 * k; k], mu, |x, a| {
        let i = a[0] / 2;
        if a.iter().any(|&aj| aj / 2 != i) {
            return false;
        }
        let parity = a.iter().enumerate().filter(|&(j, _)| j != i).fold(0, |p, (_, &aj)| p ^ (aj % 2));
        x[i] == parity
    })
}

/// Strategy for `k` repetitions of the agreement game: in repetition `l`
/// every player j answers `(l, x_{(j,j)})`, its own input bit from repetition j.
pub fn agreement_repeated_strategy(k: usize) -> Result<ClassicalStrategy> {
    if k < 2 {
        return Err(Error::Invalid(format!("agreement game needs k >= 2, got {k}")));
    }
    let n_in = 1usize << k;
    let tables = (0..k)
        .map(|j| {
            (0..n_in)
                .map(|xj| {
                    let bit = coordinate_digit(xj, 2, k, j);
                    let digits: Vec<usize> = (0..k).map(|l| agreement_answer(l, bit)).collect();
                    from_coordinate_digits(&digits, 2 * k)
                })
                .collect()
        })
        .collect();
    Ok(ClassicalStrategy { tables })
}

/// Binary CHSH-style free game: uniform bits, win iff `a xor b = x and y`.
pub fn chsh() -> Game {
    Game::from_fn(vec![2, 2], vec![2, 2], InputDist::Product(vec![vec![0.5, 0.5]; 2]), |x, a| (a[0] ^ a[1]) == (x[0] & x[1]))
        .expect("fixed shape")
}
