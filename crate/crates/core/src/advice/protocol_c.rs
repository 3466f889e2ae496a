//! The classical reduction: condition a deterministic strategy for `n`
//! repetitions on winning the coordinates in `C`, then play one copy of
//! the game by sampling everything else from the conditioned distribution.
//!
//! Given `(x_C, a_C)` from shared randomness and its own input `u_j`, player j
//! samples its whole column `x_(.,j)` conditioned on `x_(i,j) = u_j` and
//! answers what the strategy answers at coordinate `i`. If the condition has
//! probability zero the player aborts and answers uniformly at random.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{coordinate_digit, ClassicalStrategy, Game};
use crate::qit::classical;
use crate::qmat::Radix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ProtocolCMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolCReport {
    pub mode: ProtocolCMode,
    pub n: usize,
    pub conditioned_on: Vec<usize>,
    pub lambda: f64,
    /// `E_{i not in C} Pr(win i | win C)`.
    pub omega: f64,
    pub kappa: f64,
    /// Standard error of `kappa` in Monte Carlo mode.
    pub kappa_std_error: Option<f64>,
    /// `E_{i not in C} E_{(x_C, a_C)} S(phi_{x_C, a_C}^{X_(i,.)} || mu)`.
    pub delta: f64,
    /// `2 (log(1/lambda) + 2 |C| s k) / |C-bar|` with `s` the answer bits.
    pub delta_bound: f64,
    /// Largest `|phi(x | x_C, a_C) - prod_j phi(x_(.,j) | x_C, a_C)|`.
    pub factorization_defect: f64,
    pub kappa_holds: bool,
}

/// `phi(. | x_C, a_C)` for one value of the shared sample.
struct Branch {
    weight: f64,
    /// Per player, the conditional distribution of its column.
    columns: Vec<Vec<f64>>,
}

struct Setup {
    k: usize,
    n: usize,
    lambda: f64,
    omega: f64,
    delta: f64,
    delta_bound: f64,
    free: Vec<usize>,
    branches: Vec<Branch>,
    factorization_defect: f64,
}

fn setup(g: &Game, n: usize, s: &ClassicalStrategy, coords: &[usize]) -> Result<Setup> {
    let rep = std::sync::Arc::new(g.clone()).repeat(n)?;
    s.check_shape(&rep)?;
    let k = g.k();
    if let Some(&i) = coords.iter().find(|&&i| i >= n) {
        return Err(Error::Invalid(format!("coordinate {i} out of range for {n} repetitions")));
    }
    let free: Vec<usize> = (0..n).filter(|i| !coords.contains(i)).collect();
    if free.is_empty() {
        return Err(Error::Invalid("every coordinate is conditioned on; nothing left to play".into()));
    }
    let (dx, da) = (g.inputs(), g.outputs());
    let rx = rep.input_radix();
    let nx = rep.num_inputs() as usize;

    // phi over all joint inputs (answers are a function of x).
    let mut phi = vec![0.0; nx];
    let mut wins = vec![Vec::new(); nx];
    let mut keys = vec![Vec::new(); nx];
    for xi in 0..nx {
        let xs = rx.decode(xi);
        let p = rep.input_prob(&xs);
        let a = s.answers(&xs);
        let cell = |v: &[usize], d: &[usize], i: usize| -> Vec<usize> { (0..k).map(|j| coordinate_digit(v[j], d[j], n, i)).collect() };
        wins[xi] = (0..n).map(|i| g.accepts(&cell(&xs, dx, i), &cell(&a, da, i))).collect::<Vec<bool>>();
        keys[xi] = coords.iter().flat_map(|&i| cell(&xs, dx, i).into_iter().chain(cell(&a, da, i))).collect::<Vec<usize>>();
        if coords.iter().all(|&i| wins[xi][i]) {
            phi[xi] = p;
        }
    }
    let lambda: f64 = phi.iter().sum();
    if lambda <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    phi.iter_mut().for_each(|p| *p /= lambda);

    let omega = free.iter().map(|&i| (0..nx).filter(|&xi| wins[xi][i]).map(|xi| phi[xi]).sum::<f64>()).sum::<f64>() / free.len() as f64;
    let ur = Radix::new(dx);
    let mu: Vec<f64> = (0..ur.size()).map(|u| g.input_prob(&ur.decode(u))).collect();
    let delta_bound = 2.0 * (-lambda.log2() + 2.0 * coords.len() as f64 * g.answer_bits() * k as f64) / free.len() as f64;

    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for xi in 0..nx {
        if phi[xi] > 0.0 {
            groups.entry(keys[xi].clone()).or_default().push(xi);
        }
    }
    let col_sizes: Vec<usize> = rep.inputs().to_vec();
    let mut branches = Vec::with_capacity(groups.len());
    let mut factorization_defect = 0.0f64;
    let mut delta = 0.0;
    for members in groups.values() {
        let weight: f64 = members.iter().map(|&xi| phi[xi]).sum();
        let mut columns: Vec<Vec<f64>> = col_sizes.iter().map(|&c| vec![0.0; c]).collect();
        let mut cond = vec![0.0; nx];
        for &xi in members {
            let q = phi[xi] / weight;
            cond[xi] = q;
            let xs = rx.decode(xi);
            for j in 0..k {
                columns[j][xs[j]] += q;
            }
        }
        for (xi, &c) in cond.iter().enumerate() {
            let xs = rx.decode(xi);
            let prod: f64 = (0..k).map(|j| columns[j][xs[j]]).product();
            factorization_defect = factorization_defect.max((c - prod).abs());
        }
        for &i in &free {
            let mut m = vec![0.0; ur.size()];
            for &xi in members {
                let xs = rx.decode(xi);
                m[ur.encode(&(0..k).map(|j| coordinate_digit(xs[j], dx[j], n, i)).collect::<Vec<_>>())] += cond[xi];
            }
            delta += weight * classical::kl(&m, &mu).value() / free.len() as f64;
        }
        branches.push(Branch { weight, columns });
    }
    Ok(Setup { k, n, lambda, omega, delta, delta_bound, free, branches, factorization_defect })
}

/// Player j's answer distribution at coordinate `i` given the branch and
/// its input `u_j`; uniform on abort.
fn answer_dist(g: &Game, s: &ClassicalStrategy, st: &Setup, b: &Branch, i: usize, j: usize, uj: usize) -> Vec<f64> {
    let (dx, da) = (g.inputs()[j], g.outputs()[j]);
    let mut out = vec![0.0; da];
    let mut mass = 0.0;
    for (xj, &p) in b.columns[j].iter().enumerate() {
        if p > 0.0 && coordinate_digit(xj, dx, st.n, i) == uj {
            mass += p;
            out[coordinate_digit(s.tables[j][xj], da, st.n, i)] += p;
        }
    }
    if mass <= 0.0 {
        return vec![1.0 / da as f64; da];
    }
    out.iter_mut().for_each(|v| *v /= mass);
    out
}

fn exact_kappa(g: &Game, s: &ClassicalStrategy, st: &Setup) -> f64 {
    let ur = Radix::new(g.inputs());
    let ar = Radix::new(g.outputs());
    let mut kappa = 0.0;
    for &i in &st.free {
        for b in &st.branches {
            for ui in 0..ur.size() {
                let u = ur.decode(ui);
                let mu = g.input_prob(&u);
                if mu == 0.0 {
                    continue;
                }
                let dists: Vec<Vec<f64>> = (0..st.k).map(|j| answer_dist(g, s, st, b, i, j, u[j])).collect();
                let mut win = 0.0;
                for ai in 0..ar.size() {
                    let a = ar.decode(ai);
                    if g.accepts(&u, &a) {
                        win += (0..st.k).map(|j| dists[j][a[j]]).product::<f64>();
                    }
                }
                kappa += b.weight * mu * win;
            }
        }
    }
    kappa / st.free.len() as f64
}

fn sample_index(rng: &mut impl Rng, p: impl IntoIterator<Item = f64>) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, q) in p.into_iter().enumerate() {
        if q > 0.0 {
            last = i;
            acc += q;
            if r < acc {
                return i;
            }
        }
    }
    last
}

/// One play of Protocol C with its own counter-derived stream.
fn play_once(g: &Game, s: &ClassicalStrategy, st: &Setup, root: u64, t: u64) -> bool {
    let mut rng = seed::rng(root, &[t]);
    let i = st.free[rng.random_range(0..st.free.len())];
    let b = &st.branches[sample_index(&mut rng, st.branches.iter().map(|b| b.weight))];
    let u: Vec<usize> = match g.mu() {
        crate::games::InputDist::Product(m) => m.iter().map(|mj| sample_index(&mut rng, mj.iter().copied())).collect(),
        crate::games::InputDist::Explicit(p) => Radix::new(g.inputs()).decode(sample_index(&mut rng, p.iter().copied())),
    };
    let a: Vec<usize> = (0..st.k)
        .map(|j| {
            let (dx, da) = (g.inputs()[j], g.outputs()[j]);
            let cond = b.columns[j].iter().enumerate().map(|(xj, &p)| if coordinate_digit(xj, dx, st.n, i) == u[j] { p } else { 0.0 });
            let cond: Vec<f64> = cond.collect();
            if cond.iter().sum::<f64>() <= 0.0 {
                rng.random_range(0..da)
            } else {
                let xj = sample_index(&mut rng, cond.iter().copied());
                coordinate_digit(s.tables[j][xj], da, st.n, i)
            }
        })
        .collect();
    g.accepts(&u, &a)
}

/// Kahan-compensated sum, in index order.
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

/// Run Protocol C for the coordinates `coords` (0-based) being conditioned on.
pub fn protocol_c_classical(g: &Game, n: usize, s: &ClassicalStrategy, coords: &[usize], mode: ProtocolCMode) -> Result<ProtocolCReport> {
    let mut coords = coords.to_vec();
    coords.sort_unstable();
    coords.dedup();
    let st = setup(g, n, s, &coords)?;
    let (kappa, kappa_std_error) = match mode {
        ProtocolCMode::Exact => (exact_kappa(g, s, &st), None),
        ProtocolCMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Invalid("Monte Carlo mode needs at least one sample".into()));
            }
            let wins: Vec<f64> = (0..samples as u64).into_par_iter().map(|t| f64::from(u8::from(play_once(g, s, &st, seed, t)))).collect();
            let mean = compensated_sum(wins.iter().copied()) / samples as f64;
            (mean, Some((mean * (1.0 - mean) / samples as f64).sqrt()))
        }
    };
    let slack = kappa_std_error.map_or(1e-9, |se| 3.0 * se + 1e-9);
    let kappa_holds = kappa >= st.omega - 4.0 * st.delta - slack;
    Ok(ProtocolCReport {
        mode,
        n,
        conditioned_on: coords,
        lambda: st.lambda,
        omega: st.omega,
        kappa,
        kappa_std_error,
        delta: st.delta,
        delta_bound: st.delta_bound,
        factorization_defect: st.factorization_defect,
        kappa_holds,
    })
}
