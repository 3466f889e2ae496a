//! Randomized checks of the inequalities the repetition arguments lean on.
//!
//! Every check draws a fresh seeded instance, evaluates both sides and
//! records a violation when the left side exceeds the right by more than a
//! relative tolerance. Instances are small (dimensions 2 to 4, a few
//! registers) so a thousand cases per check run in seconds.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    classical, bures_sq, mutual_information, raz_check, relative_entropy, relative_min_entropy,
    ExtReal,
};
use crate::error::Result;
use crate::qmat::{self, cr, diag, kron, outer, random, CMat, Layout, State};
use crate::seed;

/// Relative tolerance for every comparison in the battery.
pub const TOLERANCE: f64 = 1e-7;

/// Outcome of one instance: an inequality `lhs <= rhs` or an equality.
#[derive(Debug, Clone, Copy)]
pub enum Check {
    Le(f64, f64),
    Eq(f64, f64),
    /// Hypotheses not met for this draw; counted but not judged.
    Vacuous,
}

impl Check {
    /// Positive when violated, scaled by the size of the quantities.
    pub fn excess(self) -> Option<f64> {
        match self {
            Check::Le(l, r) => {
                if r == f64::INFINITY {
                    return Some(f64::NEG_INFINITY);
                }
                Some((l - r) / r.abs().max(1.0))
            }
            Check::Eq(a, b) => Some((a - b).abs() / a.abs().max(b.abs()).max(1.0)),
            Check::Vacuous => None,
        }
    }
}

type Draw = fn(&mut random::TestRng) -> Result<Check>;

pub struct Fact {
    pub name: &'static str,
    pub statement: &'static str,
    draw: Draw,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactResult {
    pub name: String,
    pub statement: String,
    pub cases: usize,
    pub judged: usize,
    pub violations: usize,
    pub errors: usize,
    /// Largest relative excess seen (negative means every case had slack).
    pub worst_excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub cases: usize,
    pub tolerance: f64,
    pub facts: Vec<FactResult>,
    pub total_violations: usize,
}

pub fn facts() -> Vec<Fact> {
    vec![
        Fact { name: "bures_triangle", statement: "K(r1, r_{n+1}) <= n sum_i K(r_i, r_{i+1}), n in {2,3,4}", draw: bures_triangle },
        Fact { name: "bures_channel_contractivity", statement: "K(E(r), E(s)) <= K(r, s) for Stinespring channels", draw: bures_contractivity },
        Fact { name: "bures_unitary_invariance", statement: "K(U r U^dag, U s U^dag) = K(r, s)", draw: bures_unitary },
        Fact { name: "bures_convexity", statement: "K(sum p_i A_i, sum p_i B_i) <= sum p_i K(A_i, B_i)", draw: bures_convexity },
        Fact { name: "bures_block_additivity", statement: "K(sum p_i |i><i| (x) A_i, sum p_i |i><i| (x) B_i) = sum p_i K(A_i, B_i)", draw: bures_blocks },
        Fact { name: "relative_entropy_dominates_bures", statement: "K(r, s) <= S(r || s)", draw: divergence_vs_bures },
        Fact { name: "cq_mutual_information_average", statement: "I(X:A) = E_x S(r_x || r)", draw: cq_information },
        Fact { name: "relative_entropy_monotone", statement: "S(r^X || s^X) <= S(r^XY || s^XY)", draw: divergence_monotone },
        Fact { name: "relative_entropy_superadditive", statement: "S(r^X || s^X) + S(r^Y || s^Y) <= S(r^XY || s^X (x) s^Y)", draw: divergence_split },
        Fact { name: "relative_entropy_chain_rule", statement: "S(r1 || r) = S(mu1 || mu) + E_{mu1} S(r1_x || r_x) on CQ states", draw: divergence_chain },
        Fact { name: "max_divergence_mixture", statement: "S_inf(r0 || p r0 + (1-p) r1) <= log 1/p", draw: max_divergence_mixture },
        Fact { name: "max_divergence_monotone", statement: "S_inf(r^A || s^A) <= S_inf(r^AB || s^AB)", draw: max_divergence_monotone },
        Fact { name: "max_divergence_chain", statement: "S_inf(r || t) <= S_inf(r || s) + S_inf(s || t)", draw: max_divergence_chain },
        Fact { name: "relative_entropy_max_divergence_chain", statement: "S(r || t) <= S(r || s) + S_inf(s || t)", draw: mixed_chain },
        Fact { name: "binary_divergence_tail", statement: "S(P||Q) <= d and p <= d imply q <= 4d", draw: binary_divergence_tail },
        Fact { name: "binary_bures_tail", statement: "K(P,Q) <= d and p <= d imply q <= 4d", draw: binary_bures_tail },
        Fact { name: "binary_bures_tail_sharp", statement: "K(P,Q) <= d and p <= d imply q <= (1 + sqrt 2)^2 d", draw: binary_bures_tail_sharp },
        Fact { name: "mixture_fidelity_bound", statement: "K(E_mu |phi_a><phi_a|, E_tau |phi_a><phi_a|) <= S(mu || tau)", draw: mixture_fidelity },
        Fact { name: "quantum_raz", statement: "sum_i I(X_i : A)_phi <= 2 S(phi || psi) for product-input psi", draw: quantum_raz },
        Fact { name: "conditioning_cost", statement: "S(phi || psi) <= log 1/p when phi is psi conditioned on a commuting event of probability p", draw: conditioning_cost },
    ]
}

/// Run `cases` instances of every fact.
pub fn run_battery(cases: usize, seed_root: u64) -> BatteryReport {
    let facts = facts();
    let results: Vec<FactResult> = facts
        .iter()
        .enumerate()
        .map(|(fi, fact)| run_fact(fact, fi as u64, cases, seed_root))
        .collect();
    let total_violations = results.iter().map(|r| r.violations).sum();
    BatteryReport { seed: seed_root, cases, tolerance: TOLERANCE, facts: results, total_violations }
}

pub fn run_fact(fact: &Fact, index: u64, cases: usize, seed_root: u64) -> FactResult {
    let outcomes: Vec<Result<Check>> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = seed::rng(seed_root, &[index, case as u64]);
            (fact.draw)(&mut rng)
        })
        .collect();
    let mut judged = 0;
    let mut violations = 0;
    let mut errors = 0;
    let mut worst = f64::NEG_INFINITY;
    for o in outcomes {
        match o {
            Err(_) => {
                errors += 1;
                violations += 1;
            }
            Ok(check) => {
                if let Some(e) = check.excess() {
                    judged += 1;
                    worst = worst.max(e);
                    if e > TOLERANCE {
                        violations += 1;
                    }
                }
            }
        }
    }
    FactResult {
        name: fact.name.to_string(),
        statement: fact.statement.to_string(),
        cases,
        judged,
        violations,
        errors,
        worst_excess: worst,
    }
}

fn dim(rng: &mut random::TestRng) -> usize {
    rng.random_range(2..=4)
}

fn density(rng: &mut random::TestRng, d: usize) -> CMat {
    let rank = rng.random_range(1..=d);
    random::random_density(rng, d, rank)
}

fn full_rank_density(rng: &mut random::TestRng, d: usize) -> CMat {
    random::random_density(rng, d, d)
}

/// A state a small random step away from `r`.
fn nearby(rng: &mut random::TestRng, r: &CMat) -> CMat {
    let d = r.nrows();
    let t: f64 = rng.random::<f64>() * 0.3;
    let other = density(rng, d);
    let mixed = r * cr(1.0 - t) + other * cr(t);
    // Small unitary kick: exp(-i eps H) to first order, re-unitarized.
    let eps: f64 = rng.random::<f64>() * 0.2;
    let h = random::random_hermitian(rng, d);
    let gen = qmat::identity(d) - h * qmat::c(0.0, eps);
    let u = qmat::polar_unitary(&gen.adjoint()).unwrap_or_else(|_| qmat::identity(d));
    &u * mixed * u.adjoint()
}

fn bures_triangle(rng: &mut random::TestRng) -> Result<Check> {
    let n = rng.random_range(2..=4);
    let d = dim(rng);
    let mut chain = vec![density(rng, d)];
    for _ in 0..n {
        let next = nearby(rng, chain.last().unwrap());
        chain.push(next);
    }
    let mut sum = 0.0;
    for w in chain.windows(2) {
        sum += bures_sq(&w[0], &w[1])?;
    }
    Ok(Check::Le(bures_sq(&chain[0], &chain[n])?, n as f64 * sum))
}

/// `E(r) = tr_env(V r V^dag)` with a Haar isometry into `d_out * env`.
fn random_channel(rng: &mut random::TestRng, d_in: usize) -> (CMat, usize, usize) {
    let env = rng.random_range(1..=4);
    let mut d_out = rng.random_range(1..=4);
    while d_out * env < d_in {
        d_out += 1;
    }
    (random::haar_isometry(rng, d_in, d_out * env), d_out, env)
}

fn apply_channel(v: &CMat, d_out: usize, env: usize, r: &CMat) -> Result<CMat> {
    let big = v * r * v.adjoint();
    let layout = Layout::new([("out", d_out), ("env", env)])?;
    let s = State::mixed(layout, big)?;
    Ok(s.partial_trace(&["out"])?.density())
}

fn bures_contractivity(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let r = density(rng, d);
    let s = if rng.random::<bool>() { nearby(rng, &r) } else { density(rng, d) };
    let (v, d_out, env) = random_channel(rng, d);
    let lhs = bures_sq(&apply_channel(&v, d_out, env, &r)?, &apply_channel(&v, d_out, env, &s)?)?;
    Ok(Check::Le(lhs, bures_sq(&r, &s)?))
}

fn bures_unitary(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let r = density(rng, d);
    let s = density(rng, d);
    let u = random::haar_unitary(rng, d);
    let a = bures_sq(&(&u * &r * u.adjoint()), &(&u * &s * u.adjoint()))?;
    Ok(Check::Eq(a, bures_sq(&r, &s)?))
}

fn bures_convexity(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let m = rng.random_range(2..=4);
    let p = random::random_distribution(rng, m);
    let mut a = CMat::zeros(d, d);
    let mut b = CMat::zeros(d, d);
    let mut rhs = 0.0;
    for &pi in &p {
        let ai = density(rng, d);
        let bi = if rng.random::<bool>() { nearby(rng, &ai) } else { density(rng, d) };
        rhs += pi * bures_sq(&ai, &bi)?;
        a += &ai * cr(pi);
        b += &bi * cr(pi);
    }
    Ok(Check::Le(bures_sq(&a, &b)?, rhs))
}

fn bures_blocks(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let m = rng.random_range(2..=3);
    let p = random::random_distribution(rng, m);
    let mut a = CMat::zeros(d * m, d * m);
    let mut b = CMat::zeros(d * m, d * m);
    let mut rhs = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        let ai = density(rng, d);
        let bi = density(rng, d);
        rhs += pi * bures_sq(&ai, &bi)?;
        let mut e = vec![0.0; m];
        e[i] = pi;
        a += kron(&diag(&e), &ai);
        b += kron(&diag(&e), &bi);
    }
    Ok(Check::Eq(bures_sq(&a, &b)?, rhs))
}

fn divergence_vs_bures(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let r = density(rng, d);
    let base = full_rank_density(rng, d);
    let s = if rng.random::<bool>() { base } else { nearby(rng, &base) };
    Ok(Check::Le(bures_sq(&r, &s)?, relative_entropy(&r, &s)?.value()))
}

fn cq_information(rng: &mut random::TestRng) -> Result<Check> {
    let nx = rng.random_range(2..=3);
    let d = dim(rng);
    let mu = random::random_distribution(rng, nx);
    let rhos: Vec<CMat> = (0..nx).map(|_| density(rng, d)).collect();
    let mut avg = CMat::zeros(d, d);
    let mut joint = CMat::zeros(nx * d, nx * d);
    for (x, r) in rhos.iter().enumerate() {
        avg += r * cr(mu[x]);
        let mut e = vec![0.0; nx];
        e[x] = mu[x];
        joint += kron(&diag(&e), r);
    }
    let s = State::mixed(Layout::new([("X", nx), ("A", d)])?, joint)?;
    let mut rhs = 0.0;
    for (x, r) in rhos.iter().enumerate() {
        rhs += mu[x] * relative_entropy(r, &avg)?.value();
    }
    Ok(Check::Eq(mutual_information(&s, &["X"], &["A"])?, rhs))
}

fn bipartite(rng: &mut random::TestRng) -> (usize, usize, Layout) {
    let dx = rng.random_range(2..=3);
    let dy = rng.random_range(2..=3);
    (dx, dy, Layout::new([("X", dx), ("Y", dy)]).unwrap())
}

fn divergence_monotone(rng: &mut random::TestRng) -> Result<Check> {
    let (dx, dy, layout) = bipartite(rng);
    let r = density(rng, dx * dy);
    let s = full_rank_density(rng, dx * dy);
    let rs = State::mixed(layout.clone(), r.clone())?;
    let ss = State::mixed(layout, s.clone())?;
    let lhs = relative_entropy(&rs.partial_trace(&["X"])?.density(), &ss.partial_trace(&["X"])?.density())?;
    Ok(Check::Le(lhs.value(), relative_entropy(&r, &s)?.value()))
}

fn divergence_split(rng: &mut random::TestRng) -> Result<Check> {
    let (dx, dy, layout) = bipartite(rng);
    let r = density(rng, dx * dy);
    let sx = full_rank_density(rng, dx);
    let sy = full_rank_density(rng, dy);
    let rs = State::mixed(layout, r.clone())?;
    let lhs = relative_entropy(&rs.partial_trace(&["X"])?.density(), &sx)?.value()
        + relative_entropy(&rs.partial_trace(&["Y"])?.density(), &sy)?.value();
    Ok(Check::Le(lhs, relative_entropy(&r, &kron(&sx, &sy))?.value()))
}

fn divergence_chain(rng: &mut random::TestRng) -> Result<Check> {
    let nx = rng.random_range(2..=3);
    let d = dim(rng);
    let mu = random::random_distribution(rng, nx);
    let mu1 = random::random_distribution(rng, nx);
    let mut r = CMat::zeros(nx * d, nx * d);
    let mut r1 = CMat::zeros(nx * d, nx * d);
    let mut avg = 0.0;
    for x in 0..nx {
        let rx = full_rank_density(rng, d);
        let r1x = density(rng, d);
        let mut e = vec![0.0; nx];
        e[x] = mu[x];
        r += kron(&diag(&e), &rx);
        e[x] = mu1[x];
        r1 += kron(&diag(&e), &r1x);
        avg += mu1[x] * relative_entropy(&r1x, &rx)?.value();
    }
    let rhs = classical::kl(&mu1, &mu).value() + avg;
    Ok(Check::Eq(relative_entropy(&r1, &r)?.value(), rhs))
}

fn max_divergence_mixture(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let p: f64 = rng.random::<f64>().max(1e-3);
    let r0 = density(rng, d);
    let r1 = density(rng, d);
    let r = &r0 * cr(p) + &r1 * cr(1.0 - p);
    Ok(Check::Le(relative_min_entropy(&r0, &r)?.value(), (1.0 / p).log2()))
}

fn max_divergence_monotone(rng: &mut random::TestRng) -> Result<Check> {
    let (dx, dy, layout) = bipartite(rng);
    let r = density(rng, dx * dy);
    let s = full_rank_density(rng, dx * dy);
    let rs = State::mixed(layout.clone(), r.clone())?;
    let ss = State::mixed(layout, s.clone())?;
    let lhs = relative_min_entropy(&rs.partial_trace(&["X"])?.density(), &ss.partial_trace(&["X"])?.density())?;
    Ok(Check::Le(lhs.value(), relative_min_entropy(&r, &s)?.value()))
}

fn max_divergence_chain(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let r = density(rng, d);
    let s = full_rank_density(rng, d);
    let t = full_rank_density(rng, d);
    let l1 = relative_min_entropy(&r, &s)?.value();
    let l2 = relative_min_entropy(&s, &t)?.value();
    Ok(Check::Le(relative_min_entropy(&r, &t)?.value(), l1 + l2))
}

fn mixed_chain(rng: &mut random::TestRng) -> Result<Check> {
    let d = dim(rng);
    let r = density(rng, d);
    let s = full_rank_density(rng, d);
    let t = full_rank_density(rng, d);
    let l1 = relative_entropy(&r, &s)?.value();
    let l2 = relative_min_entropy(&s, &t)?.value();
    Ok(Check::Le(relative_entropy(&r, &t)?.value(), l1 + l2))
}

/// Binary pair with a bias towards small probabilities, where the tail
/// bounds have content.
fn binary_pair(rng: &mut random::TestRng) -> (f64, f64) {
    let p = rng.random::<f64>().powi(rng.random_range(1..=4));
    let q = rng.random::<f64>().powi(rng.random_range(1..=3));
    (p, q)
}

fn binary_divergence_tail(rng: &mut random::TestRng) -> Result<Check> {
    let (p, q) = binary_pair(rng);
    let s = classical::kl(&[p, 1.0 - p], &[q, 1.0 - q]);
    let ExtReal::Finite(s) = s else { return Ok(Check::Vacuous) };
    // Smallest delta meeting both hypotheses.
    let delta = s.max(p);
    Ok(Check::Le(q, 4.0 * delta))
}

fn binary_bures_tail(rng: &mut random::TestRng) -> Result<Check> {
    let (p, q) = binary_pair(rng);
    let k = classical::bures_sq(&[p, 1.0 - p], &[q, 1.0 - q]);
    let delta = k.max(p);
    Ok(Check::Le(q, 4.0 * delta))
}

/// Supremum of `q / max(K, p)` over binary pairs. From `(sqrt q - sqrt p)^2 <= 2K`
/// and `p <= d` one gets `sqrt q <= (1 + sqrt 2) sqrt d`, and small `p` attains it.
pub const BURES_TAIL_SHARP: f64 = 5.828_427_124_746_19;

fn binary_bures_tail_sharp(rng: &mut random::TestRng) -> Result<Check> {
    let (p, q) = binary_pair(rng);
    let k = classical::bures_sq(&[p, 1.0 - p], &[q, 1.0 - q]);
    let delta = k.max(p);
    Ok(Check::Le(q, BURES_TAIL_SHARP * delta))
}

fn mixture_fidelity(rng: &mut random::TestRng) -> Result<Check> {
    let m = rng.random_range(2..=4);
    let d = dim(rng);
    let states: Vec<CMat> = (0..m).map(|_| outer(&random::random_pure(rng, d))).collect();
    let mu = random::random_distribution(rng, m);
    let tau = random::random_distribution(rng, m);
    let mut a = CMat::zeros(d, d);
    let mut b = CMat::zeros(d, d);
    for (i, s) in states.iter().enumerate() {
        a += s * cr(mu[i]);
        b += s * cr(tau[i]);
    }
    Ok(Check::Le(bures_sq(&a, &b)?, classical::kl(&mu, &tau).value()))
}

/// Product reference `psi = mu_1 (x) ... (x) mu_n (x) psi^A`, a block event
/// `E = sum_x |x><x| (x) E_x` and `phi = sqrt(E) psi sqrt(E) / p`.
/// With `commuting`, each `E_x` is diagonal in the eigenbasis of `psi^A`.
fn raz_instance(rng: &mut random::TestRng, commuting: bool) -> Result<(State, State, Vec<String>, f64)> {
    let n = rng.random_range(2..=3);
    let da = rng.random_range(2..=3);
    let mut regs: Vec<(String, usize)> = (0..n).map(|i| (format!("X{i}"), 2)).collect();
    regs.push(("A".into(), da));
    let layout = Layout::new(regs)?;
    let nx = 1usize << n;
    let marginals: Vec<Vec<f64>> = (0..n).map(|_| random::random_distribution(rng, 2)).collect();
    let psi_a = full_rank_density(rng, da);
    let (_, basis_a) = qmat::hermitian_eig(&psi_a)?;
    let mut psi = CMat::zeros(nx * da, nx * da);
    let mut cond = CMat::zeros(nx * da, nx * da);
    for x in 0..nx {
        let mut mux = 1.0;
        for (i, m) in marginals.iter().enumerate() {
            mux *= m[(x >> (n - 1 - i)) & 1];
        }
        let e_x = if commuting {
            let w: Vec<f64> = (0..da).map(|_| rng.random::<f64>()).collect();
            qmat::from_spectrum(&w, &basis_a)
        } else {
            let u = random::haar_unitary(rng, da);
            let w: Vec<f64> = (0..da).map(|_| rng.random::<f64>()).collect();
            qmat::from_spectrum(&w, &u)
        };
        let root = qmat::sqrt_psd(&e_x)?;
        let block = &psi_a * cr(mux);
        let post = &root * &block * &root;
        for i in 0..da {
            for j in 0..da {
                psi[(x * da + i, x * da + j)] = block[(i, j)];
                cond[(x * da + i, x * da + j)] = post[(i, j)];
            }
        }
    }
    let p = cond.trace().re;
    let psi = State::mixed(layout.clone(), psi)?;
    let phi = State::mixed(layout, cond / cr(p))?;
    let coords = (0..n).map(|i| format!("X{i}")).collect();
    Ok((phi, psi, coords, p))
}

fn quantum_raz(rng: &mut random::TestRng) -> Result<Check> {
    let commuting = rng.random::<bool>();
    let (phi, psi, coords, _) = raz_instance(rng, commuting)?;
    let (lhs, rhs) = raz_check(&phi, &psi, &coords, &["A"])?;
    Ok(Check::Le(lhs, rhs.value()))
}

fn conditioning_cost(rng: &mut random::TestRng) -> Result<Check> {
    let (phi, psi, _, p) = raz_instance(rng, true)?;
    let s = relative_entropy(&phi.density(), &psi.density())?;
    Ok(Check::Le(s.value(), (1.0 / p).log2()))
}
