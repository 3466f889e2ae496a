//! See-saw lower bounds on the entangled value of binary-output games.
//!
//! Each player measures a projector `P^{j,x}` (answer 0) or its complement
//! (answer 1). With everything else fixed the objective is linear in player
//! j's projectors, so the best response projects onto the positive
//! eigenspace of the response operator. With the measurements fixed it is a
//! quadratic form in the shared state, maximized by the top eigenvector.
//! Neither step can lower the objective.

use rayon::prelude::*;
use serde::Serialize;

use super::{apply_factors, classical_value_bruteforce, strategy_count, Diagnostics, ValueResult, Witness};
use crate::error::{Error, Result};
use crate::games::json::QuantumStrategyFile;
use crate::games::{ClassicalStrategy, Game, QuantumStrategy};
use crate::qmat::{cr, hermitian_eig, identity, kron, random, CMat, CVec, Radix};
use crate::seed;

#[derive(Debug, Clone, Serialize)]
pub struct SeesawConfig {
    /// Local dimension of each player's share of the state.
    pub dims: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Stop once a full sweep gains less than this.
    pub tol: f64,
    /// Start restart 0 from an optimal deterministic strategy when the
    /// brute force fits within this many strategies (0 disables).
    pub warm_start_budget: u128,
}

impl SeesawConfig {
    pub fn new(dims: Vec<usize>, restarts: usize, seed: u64) -> Self {
        SeesawConfig { dims, restarts, seed, max_sweeps: 500, tol: 1e-12, warm_start_budget: 1 << 24 }
    }
}

struct Problem<'a> {
    k: usize,
    dims: &'a [usize],
    /// Accepted `(x digits, a digits, mu(x))`.
    accepted: Vec<(Vec<usize>, Vec<usize>, f64)>,
    /// For each player j, `(x, a_{-j} with a_j = 0, mu(x), V(x,a_j=0) - V(x,a_j=1))`.
    response_terms: Vec<Vec<(Vec<usize>, Vec<usize>, f64)>>,
}

struct Run {
    value: f64,
    state: CVec,
    proj: Vec<Vec<CMat>>,
    sweeps: usize,
    max_decrease: f64,
}

impl<'a> Problem<'a> {
    fn new(g: &Game, dims: &'a [usize]) -> Result<Self> {
        let k = g.k();
        let (rx, ra) = (g.input_radix(), g.output_radix());
        let mu = g.joint_input_dist()?;
        let mut accepted = Vec::new();
        let mut response_terms = vec![Vec::new(); k];
        for xi in 0..g.num_inputs() as usize {
            if mu[xi] == 0.0 {
                continue;
            }
            let x = rx.decode(xi);
            for ai in 0..g.num_outputs() as usize {
                let a = ra.decode(ai);
                if g.accepts(&x, &a) {
                    accepted.push((x.clone(), a.clone(), mu[xi]));
                }
                for j in 0..k {
                    if a[j] != 0 {
                        continue;
                    }
                    let mut a1 = a.clone();
                    a1[j] = 1;
                    let diff = f64::from(u8::from(g.accepts(&x, &a))) - f64::from(u8::from(g.accepts(&x, &a1)));
                    if diff != 0.0 {
                        response_terms[j].push((x.clone(), a.clone(), mu[xi] * diff));
                    }
                }
            }
        }
        Ok(Problem { k, dims, accepted, response_terms })
    }

    fn element<'p>(proj: &'p [Vec<CMat>], comp: &'p [Vec<CMat>], j: usize, x: usize, a: usize) -> &'p CMat {
        if a == 0 {
            &proj[j][x]
        } else {
            &comp[j][x]
        }
    }

    fn complements(&self, proj: &[Vec<CMat>]) -> Vec<Vec<CMat>> {
        proj.iter().enumerate().map(|(j, p)| p.iter().map(|m| identity(self.dims[j]) - m).collect()).collect()
    }

    fn value(&self, state: &CVec, proj: &[Vec<CMat>]) -> f64 {
        let comp = self.complements(proj);
        let mut total = 0.0;
        for (x, a, w) in &self.accepted {
            let ops: Vec<Option<&CMat>> = (0..self.k).map(|j| Some(Self::element(proj, &comp, j, x[j], a[j]))).collect();
            total += w * state.dotc(&apply_factors(state, self.dims, &ops)).re;
        }
        total
    }

    /// `tr_{-j} [|w><state|]` as a `d_j x d_j` matrix.
    fn partial_outer(&self, w: &CVec, state: &CVec, j: usize) -> CMat {
        let radix = Radix::new(self.dims);
        let d = self.dims[j];
        let stride = radix.stride(j);
        let block = d * stride;
        let mut m = CMat::zeros(d, d);
        for base in (0..w.len()).step_by(block) {
            for off in 0..stride {
                for r in 0..d {
                    let wr = w[base + r * stride + off];
                    if wr.re == 0.0 && wr.im == 0.0 {
                        continue;
                    }
                    for cc in 0..d {
                        m[(r, cc)] += wr * state[base + cc * stride + off].conj();
                    }
                }
            }
        }
        m
    }

    fn best_response(&self, state: &CVec, proj: &mut [Vec<CMat>], j: usize, n_inputs: usize) -> Result<()> {
        let comp = self.complements(proj);
        let d = self.dims[j];
        let mut resp = vec![CMat::zeros(d, d); n_inputs];
        for (x, a, w) in &self.response_terms[j] {
            let ops: Vec<Option<&CMat>> =
                (0..self.k).map(|i| if i == j { None } else { Some(Self::element(proj, &comp, i, x[i], a[i])) }).collect();
            let v = apply_factors(state, self.dims, &ops);
            resp[x[j]] += self.partial_outer(&v, state, j) * cr(*w);
        }
        for (x, r) in resp.into_iter().enumerate() {
            let h = (&r + r.adjoint()) * cr(0.5);
            let (vals, vecs) = hermitian_eig(&h)?;
            let mut p = CMat::zeros(d, d);
            for (i, &l) in vals.iter().enumerate() {
                if l > 1e-13 {
                    let col = vecs.column(i);
                    p += &col * col.adjoint();
                }
            }
            proj[j][x] = p;
        }
        Ok(())
    }

    fn best_state(&self, proj: &[Vec<CMat>]) -> Result<CVec> {
        let comp = self.complements(proj);
        let dim: usize = self.dims.iter().product();
        let mut op = CMat::zeros(dim, dim);
        for (x, a, w) in &self.accepted {
            let mut m = CMat::from_element(1, 1, cr(*w));
            for j in 0..self.k {
                m = kron(&m, Self::element(proj, &comp, j, x[j], a[j]));
            }
            op += m;
        }
        let h = (&op + op.adjoint()) * cr(0.5);
        let (_, vecs) = hermitian_eig(&h)?;
        Ok(vecs.column(0).into_owned())
    }

    fn run(&self, g: &Game, mut state: CVec, mut proj: Vec<Vec<CMat>>, cfg: &SeesawConfig) -> Result<Run> {
        let mut value = self.value(&state, &proj);
        let mut max_decrease = 0.0f64;
        let mut sweeps = 0;
        while sweeps < cfg.max_sweeps {
            sweeps += 1;
            let start = value;
            for j in 0..self.k {
                self.best_response(&state, &mut proj, j, g.inputs()[j])?;
                let v = self.value(&state, &proj);
                max_decrease = max_decrease.max(value - v);
                value = v;
            }
            state = self.best_state(&proj)?;
            let v = self.value(&state, &proj);
            max_decrease = max_decrease.max(value - v);
            value = v;
            if value - start < cfg.tol {
                break;
            }
        }
        Ok(Run { value, state, proj, sweeps, max_decrease })
    }
}

fn random_projector(rng: &mut random::TestRng, d: usize) -> CMat {
    let h = random::random_hermitian(rng, d);
    let (vals, vecs) = hermitian_eig(&h).expect("Hermitian by construction");
    let mut p = CMat::zeros(d, d);
    for (i, &l) in vals.iter().enumerate() {
        if l > 0.0 {
            let col = vecs.column(i);
            p += &col * col.adjoint();
        }
    }
    p
}

fn deterministic_projectors(s: &ClassicalStrategy, dims: &[usize]) -> Vec<Vec<CMat>> {
    s.tables
        .iter()
        .zip(dims)
        .map(|(t, &d)| t.iter().map(|&a| if a == 0 { identity(d) } else { CMat::zeros(d, d) }).collect())
        .collect()
}

/// Best see-saw value over `cfg.restarts` random starts (plus a warm start
/// from an optimal deterministic strategy when affordable).
pub fn seesaw_lower_bound(g: &Game, cfg: &SeesawConfig) -> Result<ValueResult> {
    if g.outputs().iter().any(|&a| a != 2) {
        return Err(Error::Unsupported("see-saw needs two answers per player".into()));
    }
    if cfg.dims.len() != g.k() || cfg.dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("{} local dimensions for {} players", cfg.dims.len(), g.k())));
    }
    let dim: usize = cfg.dims.iter().product();
    if dim > 256 {
        return Err(Error::Budget { what: "see-saw state dimension".into(), needed: dim as u128, limit: 256 });
    }
    let problem = Problem::new(g, &cfg.dims)?;

    let warm = if cfg.warm_start_budget > 0 && strategy_count(g) <= cfg.warm_start_budget {
        match classical_value_bruteforce(g, cfg.warm_start_budget)?.witness {
            Some(Witness::Classical(s)) => Some(s),
            _ => None,
        }
    } else {
        None
    };
    let n_starts = cfg.restarts.max(1) + usize::from(warm.is_some());
    let runs: Vec<Result<Run>> = (0..n_starts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(cfg.seed, &[r as u64]);
            let state = random::random_pure(&mut rng, dim);
            let proj = match (&warm, r) {
                (Some(s), 0) => deterministic_projectors(s, &cfg.dims),
                _ => (0..g.k()).map(|j| (0..g.inputs()[j]).map(|_| random_projector(&mut rng, cfg.dims[j])).collect()).collect(),
            };
            problem.run(g, state, proj, cfg)
        })
        .collect();
    let mut best: Option<Run> = None;
    let mut max_decrease = 0.0f64;
    let mut iterations = 0;
    for run in runs {
        let run = run?;
        max_decrease = max_decrease.max(run.max_decrease);
        iterations += run.sweeps;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    let povms = best
        .proj
        .iter()
        .enumerate()
        .map(|(j, p)| p.iter().map(|m| vec![m.clone(), identity(cfg.dims[j]) - m]).collect())
        .collect();
    let witness = QuantumStrategy { dims: cfg.dims.clone(), state: best.state, povms };
    let warm_start_value = warm.as_ref().map(|s| super::evaluate_classical(g, s)).transpose()?;
    Ok(ValueResult {
        method: "seesaw",
        value: best.value,
        witness: Some(Witness::Quantum(QuantumStrategyFile::from(&witness))),
        diagnostics: Diagnostics {
            iterations: Some(iterations),
            restarts: Some(n_starts),
            seed: Some(cfg.seed),
            max_decrease: Some(max_decrease),
            warm_start_value,
            ..Default::default()
        },
    })
}
