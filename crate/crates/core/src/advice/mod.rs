//! Advice states for the parallel repetition reduction.
//!
//! An advice state holds the inputs of `n` repetitions twice (`X` and a
//! copy `X'`), each player's entanglement `E_j` and the answer registers
//! `A`, purified as one vector. Conditioning it on winning some coordinates
//! skews the inputs a little and correlates the players a little; the
//! report below measures both and then rounds the state into a strategy
//! for a single copy of the game.
//!
//! Register names: `X{i}.{j}`, `X'{i}.{j}`, `E{j}`, `A{i}.{j}` and the flag
//! `R`, with `i` the coordinate and `j` the player.

mod protocol_c;

pub use protocol_c::{protocol_c_classical, ProtocolCMode, ProtocolCReport};

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{from_coordinate_digits, CqGame, CqStrategy, Game, QuantumStrategy};
use crate::qit::{classical, mutual_information, relative_entropy_to_product, relative_min_entropy, strategy_rounding, ExtReal};
use crate::qmat::{cr, identity, kron, sqrt_psd, CMat, CVec, Layout, Radix, State};
use crate::values::apply_factors;

/// Default cap on the advice state's total dimension.
pub const ADVICE_BUDGET: usize = 1 << 16;
/// Slack on the inequalities the report checks.
pub const CHAIN_TOL: f64 = 1e-6;

pub fn x_label(i: usize, j: usize) -> String {
    format!("X{i}.{j}")
}

pub fn x_copy_label(i: usize, j: usize) -> String {
    format!("X'{i}.{j}")
}

pub fn e_label(j: usize) -> String {
    format!("E{j}")
}

pub fn a_label(i: usize, j: usize) -> String {
    format!("A{i}.{j}")
}

pub const FLAG: &str = "R";

#[derive(Debug, Clone)]
pub struct AdviceState {
    pub state: State,
    /// The single game, as a binary measurement on the answer registers.
    pub verifier: Arc<CqGame>,
    /// Present when the answers are classical, which conditioning on
    /// winning all coordinates needs.
    pub classical: Option<Arc<Game>>,
    pub n: usize,
    pub event: String,
    /// Probability of the conditioning event, relative to `prior`.
    pub lambda: f64,
    /// The state before any conditioning, kept to measure the skew.
    pub prior: Arc<State>,
}

impl AdviceState {
    pub fn k(&self) -> usize {
        self.verifier.k()
    }

    pub fn has_flag(&self) -> bool {
        self.state.layout().contains(FLAG)
    }

    pub fn is_conditioned(&self) -> bool {
        self.event != "none"
    }

    pub fn coordinate_inputs(&self, i: usize) -> Vec<String> {
        (0..self.k()).map(|j| x_label(i, j)).collect()
    }

    pub fn coordinate_answers(&self, i: usize) -> Vec<String> {
        (0..self.k()).map(|j| a_label(i, j)).collect()
    }

    /// `X_(.,j) X'_(.,j) E_j A_(.,j)`; the flag, if any, sits with player 0.
    pub fn player_registers(&self, j: usize) -> Vec<String> {
        let n = self.n;
        let mut regs: Vec<String> = (0..n).map(|i| x_label(i, j)).collect();
        regs.extend((0..n).map(|i| x_copy_label(i, j)));
        regs.push(e_label(j));
        regs.extend((0..n).map(|i| a_label(i, j)));
        if j == 0 && self.has_flag() {
            regs.push(FLAG.to_string());
        }
        regs
    }

    /// `Z_-j`: every register of the other players (the flag excluded).
    pub fn others(&self, j: usize) -> Vec<String> {
        self.state.layout().complement(&self.player_registers(j)).into_iter().filter(|l| l != FLAG).collect()
    }

    fn all_inputs(&self) -> Vec<String> {
        (0..self.n).flat_map(|i| self.coordinate_inputs(i)).collect()
    }

    fn check_coordinate(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::Invalid(format!("coordinate {i} out of range for {} repetitions", self.n)));
        }
        Ok(())
    }
}

fn check_budget(dim: u128, budget: usize) -> Result<()> {
    if dim > budget as u128 {
        return Err(Error::Budget { what: "advice state dimension".into(), needed: dim, limit: budget as u128 });
    }
    Ok(())
}

fn pow(d: usize, n: usize) -> u128 {
    (d as u128).pow(n as u32)
}

/// `|psi0> = sum_x sqrt(mu(x)) |x x> sum_a (⊗_j sqrt(M^{j,x_j}_{a_j})) |xi> |a>`
/// for a strategy `s` of the n-fold repetition of `g`.
pub fn build_psi0(g: &Game, n: usize, s: &QuantumStrategy, budget: usize) -> Result<AdviceState> {
    let base = Arc::new(g.clone());
    let rep = base.repeat(n)?;
    let k = g.k();
    let (dx, da) = (g.inputs(), g.outputs());
    let nx: u128 = dx.iter().map(|&d| pow(d, n)).product();
    let na: u128 = da.iter().map(|&d| pow(d, n)).product();
    let de: u128 = s.dims.iter().map(|&d| d as u128).product();
    check_budget(nx * nx * de * na, budget)?;
    s.check(&rep)?;

    let sqrt_povms: Vec<Vec<Vec<CMat>>> =
        s.povms.iter().map(|px| px.iter().map(|p| p.iter().map(sqrt_psd).collect::<Result<_>>()).collect::<Result<_>>()).collect::<Result<_>>()?;

    let mut regs = Vec::new();
    for i in 0..n {
        for j in 0..k {
            regs.push((x_label(i, j), dx[j]));
        }
    }
    for i in 0..n {
        for j in 0..k {
            regs.push((x_copy_label(i, j), dx[j]));
        }
    }
    for j in 0..k {
        regs.push((e_label(j), s.dims[j]));
    }
    for i in 0..n {
        for j in 0..k {
            regs.push((a_label(i, j), da[j]));
        }
    }
    let layout = Layout::new(regs)?;
    let cell: Vec<usize> = (0..n).flat_map(|_| 0..k).collect();
    let xr = Radix::new(&cell.iter().map(|&j| dx[j]).collect::<Vec<_>>());
    let ar = Radix::new(&cell.iter().map(|&j| da[j]).collect::<Vec<_>>());
    let (nx, na, de) = (nx as usize, na as usize, de as usize);

    let mut v = CVec::zeros(layout.dim());
    for xi in 0..nx {
        let xs = per_player(&xr.decode(xi), k, n, dx);
        let p = rep.input_prob(&xs);
        if p == 0.0 {
            continue;
        }
        for ai in 0..na {
            let a_s = per_player(&ar.decode(ai), k, n, da);
            let ops: Vec<Option<&CMat>> = (0..k).map(|j| Some(&sqrt_povms[j][xs[j]][a_s[j]])).collect();
            let xi_xa = apply_factors(&s.state, &s.dims, &ops);
            let base_idx = ((xi * nx + xi) * de) * na + ai;
            for (e, z) in xi_xa.iter().enumerate() {
                v[base_idx + e * na] = z * cr(p.sqrt());
            }
        }
    }
    let state = State::pure(layout, v)?;
    Ok(AdviceState {
        prior: Arc::new(state.clone()),
        state,
        verifier: Arc::new(CqGame::from_classical(g)?),
        classical: Some(base),
        n,
        event: "none".into(),
        lambda: 1.0,
    })
}

/// Regroup coordinate-major digits `d[i*k + j]` into per-player inputs of
/// the repeated game.
fn per_player(digits: &[usize], k: usize, n: usize, base: &[usize]) -> Vec<usize> {
    (0..k).map(|j| from_coordinate_digits(&(0..n).map(|i| digits[i * k + j]).collect::<Vec<_>>(), base[j])).collect()
}

/// Project the answers onto tuples that win every coordinate.
pub fn condition_win_all(adv: &AdviceState) -> Result<AdviceState> {
    let g = adv.classical.clone().ok_or_else(|| Error::Unsupported("winning all coordinates needs classical answers".into()))?;
    let (n, k) = (adv.n, adv.k());
    let mut on = adv.all_inputs();
    on.extend((0..n).flat_map(|i| adv.coordinate_answers(i)));
    let p = adv.state.project_where(&on, |d| (0..n).all(|i| g.accepts(&d[i * k..(i + 1) * k], &d[n * k + i * k..n * k + (i + 1) * k])))?;
    let post = p.post.ok_or(Error::ZeroProbability)?;
    Ok(AdviceState {
        state: post.normalized()?,
        lambda: adv.lambda * p.prob,
        event: if adv.is_conditioned() { format!("{} and win-all", adv.event) } else { "win-all".into() },
        ..adv.clone()
    })
}

/// The state `sum_x sqrt(mu(x)) |x x> (sqrt(V_{x_C}) |xi_x> |1> + sqrt(id - V_{x_C}) |xi_x> |0>)`
/// for a CQ strategy of the n-fold repetition, conditioned on the flag `R = 1`.
pub fn condition_win_subset_cq(g: &CqGame, n: usize, s: &CqStrategy, coords: &[usize], budget: usize) -> Result<AdviceState> {
    let base = Arc::new(g.clone());
    let rep = base.repeat(n)?;
    let k = g.k();
    let (dx, da) = (g.inputs(), g.answer_dims());
    if let Some(&i) = coords.iter().find(|&&i| i >= n) {
        return Err(Error::Invalid(format!("coordinate {i} out of range for {n} repetitions")));
    }
    let mut coords = coords.to_vec();
    coords.sort_unstable();
    coords.dedup();
    let nx: u128 = dx.iter().map(|&d| pow(d, n)).product();
    let d_ea: u128 = s.e_dims.iter().map(|&d| d as u128).product::<u128>() * da.iter().map(|&d| pow(d, n)).product::<u128>();
    check_budget(nx * nx * d_ea * 2, budget)?;
    s.check(rep.inputs(), rep.answer_dims())?;

    // Strategy registers E_0 A_(.,0) E_1 A_(.,1) ..., matching the
    // strategy's own order with each A_j split by coordinate.
    let mut ea_regs = Vec::new();
    for j in 0..k {
        ea_regs.push((e_label(j), s.e_dims[j]));
        for i in 0..n {
            ea_regs.push((a_label(i, j), da[j]));
        }
    }
    let ea_layout = Layout::new(ea_regs.clone())?;
    let xi = State::pure(ea_layout, s.state.clone())?;
    let player_ea: Vec<Vec<String>> = (0..k).map(|j| std::iter::once(e_label(j)).chain((0..n).map(|i| a_label(i, j))).collect()).collect();
    let checked: Vec<String> = coords.iter().flat_map(|&i| (0..k).map(move |j| a_label(i, j))).collect();

    let mut regs = Vec::new();
    for i in 0..n {
        for j in 0..k {
            regs.push((x_label(i, j), dx[j]));
        }
    }
    for i in 0..n {
        for j in 0..k {
            regs.push((x_copy_label(i, j), dx[j]));
        }
    }
    regs.extend(ea_regs);
    regs.push((FLAG.to_string(), 2));
    let layout = Layout::new(regs)?;
    let cell: Vec<usize> = (0..n).flat_map(|_| 0..k).collect();
    let xr = Radix::new(&cell.iter().map(|&j| dx[j]).collect::<Vec<_>>());
    let (nx, d_ea) = (nx as usize, d_ea as usize);

    let mut v = CVec::zeros(layout.dim());
    for xidx in 0..nx {
        let digits = xr.decode(xidx);
        let xs = per_player(&digits, k, n, dx);
        let p = rep.input_prob(&xs);
        if p == 0.0 {
            continue;
        }
        let mut xi_x = xi.clone();
        for j in 0..k {
            xi_x = xi_x.apply_local(&s.unitaries[j][xs[j]], &player_ea[j])?;
        }
        let w = coords.iter().fold(identity(1), |acc, &i| kron(&acc, &g.verification(&digits[i * k..(i + 1) * k])));
        let win = xi_x.apply_local(&sqrt_psd(&w)?, &checked)?;
        let lose = xi_x.apply_local(&sqrt_psd(&(identity(w.nrows()) - &w))?, &checked)?;
        let (win, lose) = (win.vector().expect("pure"), lose.vector().expect("pure"));
        let base_idx = (xidx * nx + xidx) * d_ea;
        for e in 0..d_ea {
            v[(base_idx + e) * 2 + 1] = win[e] * cr(p.sqrt());
            v[(base_idx + e) * 2] = lose[e] * cr(p.sqrt());
        }
    }
    let theta = State::pure(layout, v)?;
    let proj = theta.project(&[FLAG], &[1])?;
    let post = proj.post.ok_or(Error::ZeroProbability)?;
    let label = coords.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    Ok(AdviceState {
        state: post.normalized()?,
        verifier: base,
        classical: None,
        n,
        event: format!("win-subset:{{{label}}}"),
        lambda: proj.prob,
        prior: Arc::new(theta),
    })
}

/// Everything measured on an advice state. The rounding fields are filled
/// in by [`round_and_play`].
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub event: String,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub log_inv_lambda: f64,
    /// Per coordinate, probability that measuring it wins.
    pub coordinate_win: Vec<f64>,
    /// Per coordinate, `S(phi^{X_(i,.)} || mu)`.
    pub input_divergence: Vec<f64>,
    pub divergence_sum: f64,
    /// `[i][j] = I(X_(i,j) : Z_-j)`, `Z_-j` being every register outside player j.
    pub mutual_info: Vec<Vec<f64>>,
    /// Average input divergence and average mutual information per coordinate.
    pub delta: f64,
    pub info_delta: f64,
    /// `S_inf` of the conditioned `X E` marginal against the prior's.
    pub xe_max_divergence: ExtReal,
    /// Per player, `2 S(phi^{X_(.,j) Z_-j} || psi^{X_(.,j)} ⊗ psi^{Z_-j})`;
    /// empty for flagged states, whose prior is not a product across that cut.
    pub raz_rhs: Vec<ExtReal>,
    pub invariants_hold: bool,
    pub rounding: Option<RoundingReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundingReport {
    pub coordinate: usize,
    /// `E_x K(phi_x, U_x phi U_x^dag)` over the coordinate's inputs.
    pub avg_bures: f64,
    /// `4 k sum_j I(X_(i,j) : Z_-j)`.
    pub info_bound: f64,
    pub pr_f0: f64,
    pub pr_f1: f64,
    /// `K(F0, F1)` between the two win bits.
    pub rounding_gap: f64,
    /// Win probability of the rounded strategy on fresh inputs from `mu`.
    pub kappa: f64,
    /// `Pr(F0 = 1) - 4 K(F0, F1) - 4 S(phi^{X_(i,.)} || mu)`.
    pub kappa_floor: f64,
    pub chain_holds: bool,
    pub kappa_holds: bool,
}

/// `sum_u <phi| (|u><u| on X_(i,.)) ⊗ (V_u on A_(i,.)) |phi>` for a state
/// whose `X_(i,.)` registers are classical.
fn coordinate_win_prob(adv: &AdviceState, phi: &State, i: usize) -> Result<f64> {
    let (xs, ans) = (adv.coordinate_inputs(i), adv.coordinate_answers(i));
    let ur = Radix::new(adv.verifier.inputs());
    let mut total = 0.0;
    for ui in 0..ur.size() {
        let u = ur.decode(ui);
        let p = phi.project(&xs, &u)?;
        if let Some(post) = p.post {
            let checked = post.apply_local(&adv.verifier.verification(&u), &ans)?;
            total += post.inner(&checked)?.re;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

fn single_input_dist(g: &CqGame) -> Vec<f64> {
    let r = Radix::new(g.inputs());
    (0..r.size()).map(|u| g.input_prob(&r.decode(u))).collect()
}

/// Properties (A), (B) and (C): per-coordinate wins, input skew and
/// correlations between the players.
pub fn measure_properties(adv: &AdviceState) -> Result<ReductionReport> {
    let (n, k) = (adv.n, adv.k());
    let phi = &adv.state;
    let mu = single_input_dist(&adv.verifier);
    let coordinate_win: Vec<f64> = (0..n).into_par_iter().map(|i| coordinate_win_prob(adv, phi, i)).collect::<Result<_>>()?;
    let input_divergence: Vec<f64> = (0..n)
        .map(|i| Ok(classical::kl(&phi.distribution(&adv.coordinate_inputs(i))?, &mu).value()))
        .collect::<Result<_>>()?;
    let divergence_sum = input_divergence.iter().sum::<f64>();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let infos: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            mutual_information(phi, &[x_label(i, j)], &adv.others(j))
        })
        .collect::<Result<_>>()?;
    let mutual_info: Vec<Vec<f64>> = infos.chunks(k).map(|c| c.to_vec()).collect();

    let mut xe = adv.all_inputs();
    xe.extend((0..k).map(e_label));
    let phi_xe = phi.partial_trace(&xe)?.density();
    let psi_xe = adv.prior.normalized()?.partial_trace(&xe)?.density();
    let xe_max_divergence = relative_min_entropy(&phi_xe, &psi_xe)?;

    // The flag's referee measurement acts on all answers at once, so the
    // prior's inputs need not be independent of the other players there.
    let raz_players = if adv.has_flag() { 0 } else { k };
    let raz_rhs: Vec<ExtReal> = (0..raz_players)
        .into_par_iter()
        .map(|j| {
            let own: Vec<String> = (0..n).map(|i| x_label(i, j)).collect();
            let rest = adv.others(j);
            let prior = adv.prior.normalized()?;
            let (sa, sb) = (prior.partial_trace(&own)?.density(), prior.partial_trace(&rest)?.density());
            Ok(match relative_entropy_to_product(phi, &own, &rest, &sa, &sb)? {
                ExtReal::Finite(v) => ExtReal::Finite(2.0 * v),
                inf => inf,
            })
        })
        .collect::<Result<_>>()?;

    let log_inv_lambda = -adv.lambda.log2();
    let raz_ok = (0..raz_players).all(|j| {
        let lhs: f64 = (0..n).map(|i| mutual_info[i][j]).sum();
        match raz_rhs[j] {
            ExtReal::Finite(r) => lhs <= r + 1e-7,
            ExtReal::PosInfinity => true,
        }
    });
    let skew_ok = match xe_max_divergence {
        ExtReal::Finite(s) => s <= log_inv_lambda + 1e-7,
        ExtReal::PosInfinity => false,
    };
    let invariants_hold = skew_ok && divergence_sum <= log_inv_lambda + 1e-7 && raz_ok;
    Ok(ReductionReport {
        event: adv.event.clone(),
        n,
        k,
        lambda: adv.lambda,
        log_inv_lambda,
        coordinate_win,
        delta: divergence_sum / n as f64,
        info_delta: infos.iter().sum::<f64>() / n as f64,
        input_divergence,
        divergence_sum,
        mutual_info,
        xe_max_divergence,
        raz_rhs,
        invariants_hold,
        rounding: None,
    })
}

/// Round the advice state at coordinate `i` into a strategy for one copy
/// of the game and play it.
///
/// Player j applies `U^j_{u_j}` (the Uhlmann unitary towards the state
/// conditioned on `X_(i,j) = u_j`) to its registers and reports `A_(i,j)`.
/// `F0` is the win bit of coordinate `i` in the conditioned state `phi_u`,
/// `F1` the win bit after rounding, both with `u ~ phi^{X_(i,.)}`; `kappa`
/// draws `u` from the game's own distribution instead.
pub fn round_and_play(adv: &AdviceState, i: usize) -> Result<ReductionReport> {
    adv.check_coordinate(i)?;
    let mut report = measure_properties(adv)?;
    report.rounding = Some(round_measured(adv, &report, i)?);
    Ok(report)
}

/// The rounding half of [`round_and_play`], reusing an existing
/// [`measure_properties`] report for the same state.
pub fn round_measured(adv: &AdviceState, report: &ReductionReport, i: usize) -> Result<RoundingReport> {
    adv.check_coordinate(i)?;
    let k = adv.k();
    let phi = &adv.state;
    let inputs = adv.coordinate_inputs(i);
    let answers = adv.coordinate_answers(i);
    let locals: Vec<Vec<String>> = (0..k).map(|j| adv.player_registers(j)).collect();
    let rounded = strategy_rounding(phi, &inputs, &locals)?;

    let ur = Radix::new(adv.verifier.inputs());
    let p_u = phi.distribution(&inputs)?;
    let (mut pr_f1, mut kappa) = (0.0, 0.0);
    for ui in 0..ur.size() {
        let u = ur.decode(ui);
        let mu_u = adv.verifier.input_prob(&u);
        if mu_u == 0.0 && p_u[ui] == 0.0 {
            continue;
        }
        let mut moved = phi.clone();
        for j in 0..k {
            moved = moved.apply_local(&rounded.unitaries[j][u[j]], &locals[j])?;
        }
        let checked = moved.apply_local(&adv.verifier.verification(&u), &answers)?;
        let win = moved.inner(&checked)?.re.clamp(0.0, 1.0);
        pr_f1 += p_u[ui] * win;
        kappa += mu_u * win;
    }
    let pr_f0 = report.coordinate_win[i];
    let rounding_gap = classical::bures_sq(&[pr_f0, 1.0 - pr_f0], &[pr_f1, 1.0 - pr_f1]);
    let kappa_floor = pr_f0 - 4.0 * rounding_gap - 4.0 * report.input_divergence[i];
    let chain_holds = rounding_gap <= rounded.avg_bures + CHAIN_TOL && rounded.avg_bures <= rounded.bound + CHAIN_TOL;
    Ok(RoundingReport {
        coordinate: i,
        avg_bures: rounded.avg_bures,
        info_bound: rounded.bound,
        pr_f0,
        pr_f1,
        rounding_gap,
        kappa,
        kappa_floor,
        chain_holds,
        kappa_holds: kappa >= kappa_floor - CHAIN_TOL,
    })
}

/// Protocol B: a uniformly random coordinate outside `skip`, rounded and
/// played. Returns the per-coordinate reports and the average `kappa`.
pub fn protocol_b(adv: &AdviceState, skip: &[usize]) -> Result<(Vec<ReductionReport>, f64)> {
    let coords: Vec<usize> = (0..adv.n).filter(|i| !skip.contains(i)).collect();
    if coords.is_empty() {
        return Err(Error::Invalid("no coordinate left to play".into()));
    }
    let measured = measure_properties(adv)?;
    let reports: Vec<ReductionReport> = coords
        .iter()
        .map(|&i| Ok(ReductionReport { rounding: Some(round_measured(adv, &measured, i)?), ..measured.clone() }))
        .collect::<Result<_>>()?;
    let kappa = reports.iter().map(|r| r.rounding.as_ref().expect("rounded").kappa).sum::<f64>() / coords.len() as f64;
    Ok((reports, kappa))
}

#[cfg(test)]
mod tests;
