//! Distributed search for a losing coordinate.
//!
//! The verifier samples `h = q m` coordinates with replacement, splits them
//! into `q` groups of `m` and runs Grover search with an unknown number of
//! marked items inside each group. A found index is checked classically
//! before it counts, so a run never blames a winning coordinate. The run
//! accepts when no group finds a losing coordinate.
//!
//! The per-group schedule: two stages of one random probe each, then
//! stages with iteration caps `c <- max(c + 1, round(3 c))` up to
//! `round(sqrt(m) + 1/4)`. A stage with cap `c` runs `j ~ U[0, c)` Grover
//! iterations and then one verification query, `j + 1` round trips in all.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed;

/// Default constant in `q = ceil(c' log2(1/eta))`.
pub const DEFAULT_C_PRIME: f64 = 3.0;
/// Largest number of index tuples the enumerating exact mode visits.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub eps_prime: f64,
    pub eta: f64,
    /// Group size `ceil(1 / eps_prime)`.
    pub m: usize,
    /// Number of groups.
    pub q: usize,
    /// Sample count `q m`.
    pub h: usize,
    pub c_prime: f64,
    pub answer_bits: u32,
    pub index_bits: u32,
}

impl SearchConfig {
    /// Config for `n` coordinates; `q` defaults to `ceil(c' log2(1/eta))`.
    pub fn new(eps_prime: f64, eta: f64, n: usize, answer_bits: u32, q: Option<usize>) -> Result<SearchConfig> {
        if !(eps_prime > 0.0 && eps_prime < 1.0) {
            return Err(Error::Invalid(format!("eps' must lie in (0, 1), got {eps_prime}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Invalid(format!("eta must lie in (0, 1), got {eta}")));
        }
        if n == 0 {
            return Err(Error::Invalid("need at least one coordinate".into()));
        }
        let m = (1.0 / eps_prime).ceil() as usize;
        let q = q.unwrap_or_else(|| (DEFAULT_C_PRIME * (1.0 / eta).log2()).ceil().max(1.0) as usize);
        if q == 0 {
            return Err(Error::Invalid("need at least one group".into()));
        }
        let index_bits = if n <= 1 { 0 } else { usize::BITS - (n - 1).leading_zeros() };
        Ok(SearchConfig { eps_prime, eta, m, q, h: q * m, c_prime: DEFAULT_C_PRIME, answer_bits, index_bits })
    }

    /// `(1/3 + 1/e)^q`, the rejection guarantee when enough coordinates lose.
    pub fn acceptance_bound(&self) -> f64 {
        (1.0 / 3.0 + (-1.0f64).exp()).powi(self.q as i32)
    }
}

/// Iteration caps of the schedule for a group of size `m`.
pub fn schedule(m: usize) -> Vec<usize> {
    let top = ((m as f64).sqrt() + 0.25).round().max(1.0) as usize;
    let mut caps = vec![1, 1];
    let mut c = 1usize;
    while c < top {
        c = (c + 1).max((3.0 * c as f64).round() as usize).min(top);
        caps.push(c);
    }
    caps
}

/// Round trips the schedule uses when no stage succeeds early.
pub fn worst_case_steps(m: usize) -> usize {
    schedule(m).iter().sum()
}

/// Probability that measuring after `j` Grover iterations gives a marked
/// index, for `t` marked out of `m`: `sin^2((2j + 1) theta)`, `sin^2 theta = t/m`.
pub fn success_after(t: usize, m: usize, j: usize) -> f64 {
    if t == 0 {
        return 0.0;
    }
    let theta = (t as f64 / m as f64).sqrt().asin();
    ((2 * j + 1) as f64 * theta).sin().powi(2)
}

/// Full `m`-dimensional amplitude simulation of `j` Grover iterations from
/// the uniform state; returns the weight on marked indices.
pub fn success_after_full(marked: &[bool], j: usize) -> f64 {
    let m = marked.len();
    let mut amp = vec![1.0 / (m as f64).sqrt(); m];
    for _ in 0..j {
        for (a, &b) in amp.iter_mut().zip(marked) {
            if b {
                *a = -*a;
            }
        }
        let mean = amp.iter().sum::<f64>() / m as f64;
        amp.iter_mut().for_each(|a| *a = 2.0 * mean - *a);
    }
    amp.iter().zip(marked).filter(|(_, &b)| b).map(|(a, _)| a * a).sum()
}

fn stage_success(t: usize, m: usize, cap: usize) -> f64 {
    (0..cap).map(|j| success_after(t, m, j)).sum::<f64>() / cap as f64
}

/// Exact probability that the schedule finds a marked index among `t` of `m`.
pub fn group_success(t: usize, m: usize) -> f64 {
    if t == 0 {
        return 0.0;
    }
    1.0 - schedule(m).iter().map(|&c| 1.0 - stage_success(t, m, c)).product::<f64>()
}

/// Success probability of the group search on `marked`, averaged exactly
/// over the schedule's random iteration counts. The seed does not enter
/// the value; see [`sample_group_search`] for a sampled run.
pub fn grover_group_search_prob(marked: &[bool], _seed: u64) -> f64 {
    group_success(marked.iter().filter(|&&b| b).count(), marked.len())
}

/// One run of the group search: `(verified marked index, round trips)`.
pub fn sample_group_search(marked: &[bool], rng: &mut impl Rng) -> (Option<usize>, usize) {
    let m = marked.len();
    let t = marked.iter().filter(|&&b| b).count();
    let mut steps = 0;
    for c in schedule(m) {
        let j = rng.random_range(0..c);
        steps += j + 1;
        let found = rng.random::<f64>() < success_after(t, m, j);
        // The measured index is uniform within the marked or unmarked set.
        let pool: Vec<usize> = (0..m).filter(|&i| marked[i] == found).collect();
        if pool.is_empty() {
            continue;
        }
        let idx = pool[rng.random_range(0..pool.len())];
        if marked[idx] {
            return (Some(idx), steps);
        }
    }
    (None, steps)
}

/// Qubits exchanged: `q * steps * (answer_bits + index_bits) * 2`.
pub fn comm_cost(cfg: &SearchConfig, grover_steps_per_group: usize) -> u64 {
    cfg.q as u64 * grover_steps_per_group as u64 * (cfg.answer_bits + cfg.index_bits) as u64 * 2
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub accept_prob: f64,
    /// Three standard errors either side; zero width in exact mode.
    pub ci: [f64; 2],
    pub std_error: f64,
    pub q: usize,
    pub m: usize,
    /// Worst-case qubits exchanged under the schedule.
    #[serde(rename = "T")]
    pub qubits_exchanged: u64,
    /// `(1/3 + 1/e)^q`.
    pub bound: f64,
    /// A losing coordinate found by one sampled run, if any.
    pub found_index: Option<usize>,
    pub samples: usize,
}

/// Kahan-compensated sum in index order.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

fn check_run(loss: &[bool], cfg: &SearchConfig) -> Result<()> {
    if cfg.h > loss.len() {
        return Err(Error::Invalid(format!("h = {} samples exceed n = {} coordinates", cfg.h, loss.len())));
    }
    Ok(())
}

/// Acceptance of one sampled multiset `C`: `prod_groups (1 - success)`.
fn sampled_acceptance(loss: &[bool], cfg: &SearchConfig, rng: &mut impl Rng) -> f64 {
    let n = loss.len();
    (0..cfg.q)
        .map(|_| {
            let t = (0..cfg.m).filter(|_| loss[rng.random_range(0..n)]).count();
            1.0 - group_success(t, cfg.m)
        })
        .product()
}

/// One full sampled run; returns the first verified losing index.
pub fn sample_run(loss: &[bool], cfg: &SearchConfig, rng: &mut impl Rng) -> (Option<usize>, usize) {
    let n = loss.len();
    let mut steps = 0;
    for _ in 0..cfg.q {
        let group: Vec<usize> = (0..cfg.m).map(|_| rng.random_range(0..n)).collect();
        let marked: Vec<bool> = group.iter().map(|&i| loss[i]).collect();
        let (found, s) = sample_group_search(&marked, rng);
        steps += s;
        if let Some(pos) = found {
            debug_assert!(loss[group[pos]]);
            return (Some(group[pos]), steps);
        }
    }
    (None, steps)
}

/// Monte Carlo estimate of the acceptance probability `sum_C p(C) |alpha_C|^2`.
pub fn protocol_run(loss: &[bool], cfg: &SearchConfig, samples: usize, seed_value: u64) -> Result<SearchOutcome> {
    check_run(loss, cfg)?;
    if samples == 0 {
        return Err(Error::Invalid("need at least one sample".into()));
    }
    let values: Vec<f64> = (0..samples as u64).into_par_iter().map(|t| sampled_acceptance(loss, cfg, &mut seed::rng(seed_value, &[t]))).collect();
    let mean = compensated_sum(values.iter().copied()) / samples as f64;
    let var = if samples > 1 { compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (samples - 1) as f64 } else { 0.0 };
    let se = (var / samples as f64).sqrt();
    let (found_index, _) = sample_run(loss, cfg, &mut seed::rng(seed_value, &[u64::MAX]));
    Ok(SearchOutcome {
        accept_prob: mean,
        ci: [(mean - 3.0 * se).max(0.0), (mean + 3.0 * se).min(1.0)],
        std_error: se,
        q: cfg.q,
        m: cfg.m,
        qubits_exchanged: comm_cost(cfg, worst_case_steps(cfg.m)),
        bound: cfg.acceptance_bound(),
        found_index,
        samples,
    })
}

fn binomial_pmf(m: usize, t: usize, f: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..t {
        c = c * (m - i) as f64 / (i + 1) as f64;
    }
    c * f.powi(t as i32) * (1.0 - f).powi((m - t) as i32)
}

/// Exact acceptance of a single group: the marked count is binomial in the
/// losing fraction because indices are drawn with replacement.
pub fn single_group_acceptance(loss: &[bool], m: usize) -> f64 {
    let f = loss.iter().filter(|&&b| b).count() as f64 / loss.len() as f64;
    (0..=m).map(|t| binomial_pmf(m, t, f) * (1.0 - group_success(t, m))).sum()
}

/// Exact acceptance: groups are independent, so it is the single-group
/// acceptance to the power `q`.
pub fn exact_acceptance(loss: &[bool], cfg: &SearchConfig) -> Result<f64> {
    check_run(loss, cfg)?;
    Ok(single_group_acceptance(loss, cfg.m).powi(cfg.q as i32))
}

/// Exact acceptance by enumerating every ordered tuple of `h` sampled
/// indices; only for tiny instances.
pub fn exact_acceptance_enumerated(loss: &[bool], cfg: &SearchConfig) -> Result<f64> {
    check_run(loss, cfg)?;
    let n = loss.len();
    let total = (n as u128).checked_pow(cfg.h as u32).unwrap_or(u128::MAX);
    if total > ENUMERATION_LIMIT {
        return Err(Error::Budget { what: "sample tuples".into(), needed: total, limit: ENUMERATION_LIMIT });
    }
    let p = 1.0 / total as f64;
    let mut acc = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; cfg.h];
    for _ in 0..total {
        let a: f64 = idx
            .chunks(cfg.m)
            .map(|g| 1.0 - group_success(g.iter().filter(|&&i| loss[i]).count(), cfg.m))
            .product();
        acc.push(a * p);
        for d in idx.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    Ok(compensated_sum(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        assert_eq!(schedule(1), vec![1, 1]);
        assert_eq!(schedule(10), vec![1, 1, 3]);
        assert_eq!(schedule(64), vec![1, 1, 3, 8]);
        assert_eq!(worst_case_steps(10), 5);
    }

    #[test]
    fn one_marked_in_four_is_found_after_one_iteration() {
        assert!((success_after(1, 4, 1) - 1.0).abs() < 1e-12);
        assert!((success_after_full(&[false, true, false, false], 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_marked_is_never_found() {
        assert_eq!(grover_group_search_prob(&[false; 9], 1), 0.0);
        let mut rng = seed::rng(1, &[]);
        assert_eq!(sample_group_search(&[false; 9], &mut rng).0, None);
    }

    #[test]
    fn invariant_subspace_matches_full_simulation() {
        for m in 1..=12 {
            for t in 0..=m {
                let marked: Vec<bool> = (0..m).map(|i| (i * 5 + 2) % m < t).collect();
                let t = marked.iter().filter(|&&b| b).count();
                for j in 0..6 {
                    assert!((success_after(t, m, j) - success_after_full(&marked, j)).abs() < 1e-12, "m={m} t={t} j={j}");
                }
            }
        }
    }

    #[test]
    fn per_group_success_is_at_least_two_thirds() {
        for m in 1..=64 {
            for t in 1..=m {
                assert!(group_success(t, m) >= 2.0 / 3.0, "m={m} t={t}: {}", group_success(t, m));
            }
        }
    }

    #[test]
    fn comm_cost_arithmetic() {
        let mut cfg = SearchConfig::new(0.5, 0.5, 16, 2, Some(1)).unwrap();
        assert_eq!(comm_cost(&cfg, 0), 0);
        cfg.index_bits = 4;
        assert_eq!(comm_cost(&cfg, 3), 36);
    }

    #[test]
    fn default_group_count() {
        let cfg = SearchConfig::new(0.1, 0.1, 200, 1, None).unwrap();
        assert_eq!((cfg.m, cfg.q, cfg.h, cfg.index_bits), (10, 10, 100, 8));
        assert!(cfg.acceptance_bound() <= cfg.eta);
    }

    #[test]
    fn enumeration_factorizes_into_groups() {
        let loss = [true, false, false, true, false];
        let cfg = SearchConfig::new(0.5, 0.5, 5, 1, Some(2)).unwrap();
        let a = exact_acceptance_enumerated(&loss, &cfg).unwrap();
        let b = exact_acceptance(&loss, &cfg).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn too_many_samples_is_an_error() {
        let cfg = SearchConfig::new(0.1, 0.1, 50, 1, None).unwrap();
        assert!(protocol_run(&[false; 50], &cfg, 10, 0).is_err());
    }

    #[test]
    fn sampled_runs_never_blame_a_winning_coordinate() {
        let loss: Vec<bool> = (0..200).map(|i| i % 7 == 0).collect();
        let cfg = SearchConfig::new(0.1, 0.1, 200, 1, None).unwrap();
        for t in 0..500 {
            if let (Some(i), _) = sample_run(&loss, &cfg, &mut seed::rng(9, &[t])) {
                assert!(loss[i]);
            }
        }
    }

    #[test]
    fn more_losing_coordinates_never_raise_acceptance() {
        for m in 1..=8 {
            for t in 1..=m {
                assert!(group_success(t, m) >= group_success(t - 1, m) - 1e-15, "m={m} t={t}");
            }
        }
        let cfg = SearchConfig::new(0.25, 0.5, 12, 1, Some(3)).unwrap();
        let mut loss = vec![false; 12];
        let mut last = exact_acceptance(&loss, &cfg).unwrap();
        assert_eq!(last, 1.0);
        for i in [3, 7, 0, 11, 5] {
            loss[i] = true;
            let a = exact_acceptance(&loss, &cfg).unwrap();
            assert!(a <= last + 1e-15);
            last = a;
        }
    }

    #[test]
    fn a_group_misses_every_losing_coordinate_rarely() {
        // Pr(miss) = (1 - f)^m by enumeration over single draws.
        for (n, losing, m) in [(10, 1, 10), (20, 5, 4), (7, 3, 3)] {
            let f = losing as f64 / n as f64;
            let miss = (1.0 - f).powi(m as i32);
            let one = (0..n).filter(|&i| i >= losing).count() as f64 / n as f64;
            assert!((one.powi(m as i32) - miss).abs() < 1e-15);
            if f >= 1.0 / m as f64 {
                assert!(miss <= (-1.0f64).exp());
            }
        }
    }

    #[test]
    fn all_winning_strings_are_always_accepted() {
        let cfg = SearchConfig::new(0.1, 0.1, 200, 1, None).unwrap();
        let out = protocol_run(&[false; 200], &cfg, 1000, 4).unwrap();
        assert_eq!(out.accept_prob, 1.0);
        assert_eq!(out.found_index, None);
    }
}
