//! Game values: exact classical value by enumeration, non-signaling value by
//! linear programming, evaluation of given quantum and CQ strategies, and
//! see-saw lower bounds on the entangled value.

pub mod corpus;
mod seesaw;
pub mod simplex;

pub use seesaw::{seesaw_lower_bound, SeesawConfig};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::json::QuantumStrategyFile;
use crate::games::{ClassicalStrategy, CqGame, CqStrategy, Game, NsBehavior, QuantumStrategy};
use crate::qmat::{cr, CMat, CVec, Layout, Radix, State};

/// Default cap on the number of deterministic strategies.
pub const BRUTE_FORCE_BUDGET: u128 = 1 << 36;
/// Default cap on LP variables `|X| |A|`.
pub const LP_BUDGET: u128 = 1 << 16;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum Witness {
    Classical(ClassicalStrategy),
    Ns(NsBehavior),
    Quantum(QuantumStrategyFile),
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pivots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_status: Option<simplex::LpStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redundant_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Largest drop of the see-saw objective between consecutive updates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_decrease: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueResult {
    pub method: &'static str,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub diagnostics: Diagnostics,
}

/// Dense acceptance table indexed `x_index * |A| + a_index`.
fn acceptance_table(g: &Game, limit: u128) -> Result<Vec<bool>> {
    let total = g.num_inputs().saturating_mul(g.num_outputs());
    if total > limit {
        return Err(Error::Budget { what: "acceptance table".into(), needed: total, limit });
    }
    let mut t = vec![false; total as usize];
    for i in g.accepted_indices()? {
        t[i as usize] = true;
    }
    Ok(t)
}

/// `E_x V(x, h(x))`, evaluated lazily so repeated games never materialize.
pub fn evaluate_classical(g: &Game, s: &ClassicalStrategy) -> Result<f64> {
    s.check_shape(g)?;
    let r = g.input_radix();
    let n = g.num_inputs();
    if n > crate::games::MATERIALIZE_LIMIT {
        return Err(Error::Budget { what: "input enumeration".into(), needed: n, limit: crate::games::MATERIALIZE_LIMIT });
    }
    Ok((0..n as usize)
        .map(|xi| {
            let x = r.decode(xi);
            let p = g.input_prob(&x);
            if p > 0.0 && g.accepts(&x, &s.answers(&x)) {
                p
            } else {
                0.0
            }
        })
        .sum())
}

/// Number of deterministic strategies `prod_j |A_j|^{|X_j|}`.
pub fn strategy_count(g: &Game) -> u128 {
    g.inputs().iter().zip(g.outputs()).fold(1u128, |acc, (&x, &a)| acc.saturating_mul((a as u128).saturating_pow(x as u32)))
}

/// Exact classical value: enumerate players `0..k-1` and best-respond with
/// the last one. Ties go to the lexicographically smallest tables.
pub fn classical_value_bruteforce(g: &Game, budget: u128) -> Result<ValueResult> {
    let total = strategy_count(g);
    if total > budget {
        return Err(Error::Budget { what: "deterministic strategies".into(), needed: total, limit: budget });
    }
    let k = g.k();
    let table = acceptance_table(g, crate::games::MATERIALIZE_LIMIT)?;
    let mu = g.joint_input_dist()?;
    let (nx, na) = (g.num_inputs() as usize, g.num_outputs() as usize);
    let rx = g.input_radix();
    let last = k - 1;
    let (x_last, a_last) = (g.inputs()[last], g.outputs()[last]);

    // Digits (player j, input x) for j < last, each base |A_j|.
    let mut digit_bases = Vec::new();
    for j in 0..last {
        digit_bases.extend(std::iter::repeat_n(g.outputs()[j], g.inputs()[j]));
    }
    let outer = Radix::new(&digit_bases);
    let n_outer = outer.size();
    // Joint inputs grouped by the last player's input.
    let by_last: Vec<Vec<(usize, Vec<usize>)>> = (0..x_last)
        .map(|xl| {
            (0..nx)
                .filter_map(|xi| {
                    let x = rx.decode(xi);
                    (x[last] == xl && mu[xi] > 0.0).then_some((xi, x))
                })
                .collect()
        })
        .collect();
    let offsets: Vec<usize> = (0..last).map(|j| g.inputs()[..j].iter().sum()).collect();
    let ra = g.output_radix();

    let evaluate = |c: usize| -> (f64, ClassicalStrategy) {
        let digits = outer.decode(c);
        let mut tables: Vec<Vec<usize>> = (0..last).map(|j| digits[offsets[j]..offsets[j] + g.inputs()[j]].to_vec()).collect();
        let mut best_last = vec![0; x_last];
        let mut value = 0.0;
        let mut a = vec![0; k];
        for (xl, group) in by_last.iter().enumerate() {
            let mut scores = vec![0.0; a_last];
            for (xi, x) in group {
                for j in 0..last {
                    a[j] = tables[j][x[j]];
                }
                for (al, s) in scores.iter_mut().enumerate() {
                    a[last] = al;
                    if table[xi * na + ra.encode(&a)] {
                        *s += mu[*xi];
                    }
                }
            }
            let (al, s) = scores.iter().enumerate().fold((0, f64::NEG_INFINITY), |(bi, bs), (i, &s)| if s > bs { (i, s) } else { (bi, bs) });
            best_last[xl] = al;
            value += s;
        }
        tables.push(best_last);
        (value, ClassicalStrategy { tables })
    };
    let better = |a: (f64, ClassicalStrategy), b: (f64, ClassicalStrategy)| -> (f64, ClassicalStrategy) {
        if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
            a
        } else {
            b
        }
    };
    let (value, witness) = (0..n_outer)
        .into_par_iter()
        .map(evaluate)
        .reduce(|| (f64::NEG_INFINITY, ClassicalStrategy { tables: vec![] }), |a, b| {
            if a.1.tables.is_empty() {
                b
            } else if b.1.tables.is_empty() {
                a
            } else {
                better(a, b)
            }
        });
    Ok(ValueResult {
        method: "classical_bruteforce",
        value,
        witness: Some(Witness::Classical(witness)),
        diagnostics: Diagnostics { candidates: Some(total), ..Default::default() },
    })
}

/// Non-signaling value: maximize the win probability over behaviors whose
/// per-player marginals ignore that player's input.
pub fn ns_value_lp(g: &Game, budget: u128) -> Result<ValueResult> {
    let (nx, na) = (g.num_inputs(), g.num_outputs());
    let nvar = nx.saturating_mul(na);
    if nvar > budget {
        return Err(Error::Budget { what: "LP variables".into(), needed: nvar, limit: budget });
    }
    let (nx, na) = (nx as usize, na as usize);
    let table = acceptance_table(g, budget)?;
    let mu = g.joint_input_dist()?;
    let c: Vec<f64> = (0..nx * na).map(|v| if table[v] { mu[v / na] } else { 0.0 }).collect();
    let (rows, b) = ns_constraints(g.inputs(), g.outputs());
    let sol = simplex::solve(&rows, &b, &c, 1_000_000)?;
    match sol.status {
        simplex::LpStatus::Optimal => {}
        s => return Err(Error::Invariant(format!("non-signaling LP ended {s:?}; the uniform behavior is always feasible"))),
    }
    let p: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
    let witness = NsBehavior { inputs: g.inputs().to_vec(), outputs: g.outputs().to_vec(), p };
    Ok(ValueResult {
        method: "ns_lp",
        value: sol.objective,
        witness: Some(Witness::Ns(witness)),
        diagnostics: Diagnostics {
            pivots: Some(sol.pivots),
            lp_status: Some(sol.status),
            redundant_rows: Some(sol.redundant_rows),
            ..Default::default()
        },
    })
}

/// Normalization rows plus, per player j, `sum_{a_j} p(a|x) = sum_{a_j} p(a|x')`
/// for `x'` equal to `x` with `x_j = 0`.
pub fn ns_constraints(inputs: &[usize], outputs: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (rx, ra) = (Radix::new(inputs), Radix::new(outputs));
    let (nx, na) = (rx.size(), ra.size());
    let mut rows = Vec::new();
    let mut b = Vec::new();
    for x in 0..nx {
        let mut r = vec![0.0; nx * na];
        r[x * na..(x + 1) * na].fill(1.0);
        rows.push(r);
        b.push(1.0);
    }
    for j in 0..inputs.len() {
        let others: Vec<usize> = (0..outputs.len()).map(|i| if i == j { 1 } else { outputs[i] }).collect();
        let ro = Radix::new(&others);
        for x in 0..nx {
            let xd = rx.decode(x);
            if xd[j] == 0 {
                continue;
            }
            let mut x0d = xd.clone();
            x0d[j] = 0;
            let x0 = rx.encode(&x0d);
            for rest in 0..ro.size() {
                let mut ad = ro.decode(rest);
                let mut r = vec![0.0; nx * na];
                for aj in 0..outputs[j] {
                    ad[j] = aj;
                    let a = ra.encode(&ad);
                    r[x * na + a] += 1.0;
                    r[x0 * na + a] -= 1.0;
                }
                rows.push(r);
                b.push(0.0);
            }
        }
    }
    (rows, b)
}

/// `E_x ||(⊗_j M_j) xi||`-style products: apply `ops[j]` (when present) on factor j of `v`.
pub(crate) fn apply_factors(v: &CVec, dims: &[usize], ops: &[Option<&CMat>]) -> CVec {
    let radix = Radix::new(dims);
    let mut cur = v.clone();
    for (j, op) in ops.iter().enumerate() {
        let Some(m) = op else { continue };
        let d = dims[j];
        let stride = radix.stride(j);
        let block = d * stride;
        let mut next = CVec::zeros(cur.len());
        for base in (0..cur.len()).step_by(block) {
            for off in 0..stride {
                for r in 0..d {
                    let mut acc = cr(0.0);
                    for cc in 0..d {
                        let z = m[(r, cc)];
                        if z.re != 0.0 || z.im != 0.0 {
                            acc += z * cur[base + cc * stride + off];
                        }
                    }
                    next[base + r * stride + off] = acc;
                }
            }
        }
        cur = next;
    }
    cur
}

/// `E_x sum_{a : V(x,a)=1} <xi| ⊗_j M^{j,x_j}_{a_j} |xi>`.
pub fn evaluate_quantum_strategy(g: &Game, s: &QuantumStrategy) -> Result<f64> {
    s.check(g)?;
    let (rx, ra) = (g.input_radix(), g.output_radix());
    let mut total = 0.0;
    for xi in 0..g.num_inputs() as usize {
        let x = rx.decode(xi);
        let p = g.input_prob(&x);
        if p == 0.0 {
            continue;
        }
        for ai in 0..g.num_outputs() as usize {
            let a = ra.decode(ai);
            if !g.accepts(&x, &a) {
                continue;
            }
            let ops: Vec<Option<&CMat>> = (0..g.k()).map(|j| Some(&s.povms[j][x[j]][a[j]])).collect();
            let w = apply_factors(&s.state, &s.dims, &ops);
            total += p * s.state.dotc(&w).re;
        }
    }
    Ok(total)
}

/// `E_x ||sqrt(V_x) U_{x_1} ⊗ ... ⊗ U_{x_k} |xi>||^2`.
pub fn evaluate_cq_strategy(g: &CqGame, s: &CqStrategy) -> Result<f64> {
    s.check(g.inputs(), g.answer_dims())?;
    let layout = Layout::new(s.labels())?;
    let xi = State::pure(layout, s.state.clone())?;
    let k = g.k();
    let answers: Vec<String> = (0..k).map(|j| format!("A{j}")).collect();
    let rx = Radix::new(g.inputs());
    let mut total = 0.0;
    for xidx in 0..g.num_inputs() {
        let x = rx.decode(xidx);
        let p = g.input_prob(&x);
        if p == 0.0 {
            continue;
        }
        let mut psi = xi.clone();
        for j in 0..k {
            psi = psi.apply_local(&s.unitaries[j][x[j]], &[format!("E{j}"), format!("A{j}")])?;
        }
        let vpsi = psi.apply_local(&g.verification(&x), &answers)?;
        total += p * psi.inner(&vpsi)?.re;
    }
    Ok(total)
}
