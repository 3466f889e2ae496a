//! One function per subcommand. Each returns a [`Report`]; nothing here
//! touches standard output.

use std::path::Path;
use std::sync::Arc;

use repval_core::advice::{self, ProtocolCMode, ADVICE_BUDGET};
use repval_core::games::json::{CqGameFile, GameFile, StrategyFile};
use repval_core::games::{agreement_repeated_strategy, build_agreement_game, ClassicalStrategy, CqGame, Game, QuantumStrategy, MATERIALIZE_LIMIT};
use repval_core::qit::battery;
use repval_core::search::{self, SearchConfig};
use repval_core::values::{self, corpus, SeesawConfig, BRUTE_FORCE_BUDGET, LP_BUDGET};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::*;
use crate::output::{num, Failure, Outcome, Report, Table};

/// Caps on dense allocations, tightened by `REPVAL_BUDGET_MB`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Budgets {
    pub megabytes: Option<u64>,
    /// Total dimension of an advice state.
    pub advice_dim: usize,
    /// Variables of the non-signaling LP (its tableau is roughly square).
    pub lp_vars: u128,
    /// Entries of a materialized predicate table (one bit each).
    pub table_entries: u128,
}

impl Budgets {
    pub fn from_megabytes(mb: Option<u64>) -> Budgets {
        let Some(mb) = mb else {
            return Budgets { megabytes: None, advice_dim: ADVICE_BUDGET, lp_vars: LP_BUDGET, table_entries: MATERIALIZE_LIMIT };
        };
        let bytes = (mb as u128) << 20;
        Budgets {
            megabytes: Some(mb),
            advice_dim: ADVICE_BUDGET.min((bytes / 16).min(usize::MAX as u128) as usize),
            lp_vars: LP_BUDGET.min(((bytes / 8) as f64).sqrt() as u128),
            table_entries: MATERIALIZE_LIMIT.min(bytes * 8),
        }
    }

    pub fn from_env() -> Outcome<Budgets> {
        match std::env::var("REPVAL_BUDGET_MB") {
            Err(_) => Ok(Budgets::from_megabytes(None)),
            Ok(v) => {
                let mb = v.trim().parse::<u64>().map_err(|e| Failure::Usage(format!("REPVAL_BUDGET_MB=`{v}`: {e}")))?;
                Ok(Budgets::from_megabytes(Some(mb)))
            }
        }
    }
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Outcome<T> {
    serde_json::from_str(text).map_err(|e| Failure::InvalidInput(format!("{}: {e}", path.display())))
}

/// A game file of either kind; told apart by `predicate` versus `verification`.
enum AnyGame {
    Classical(Game),
    Cq(CqGame),
}

fn load_any_game(path: &Path) -> Outcome<AnyGame> {
    let text = read(path)?;
    let v: serde_json::Value = parse(path, &text)?;
    if v.get("verification").is_some() {
        Ok(AnyGame::Cq(parse::<CqGameFile>(path, &text)?.into_game()?))
    } else {
        Ok(AnyGame::Classical(parse::<GameFile>(path, &text)?.into_game()?))
    }
}

fn load_game(path: &Path) -> Outcome<Game> {
    match load_any_game(path)? {
        AnyGame::Classical(g) => Ok(g),
        AnyGame::Cq(_) => Err(Failure::Usage(format!("{}: this command needs a game with a classical predicate", path.display()))),
    }
}

fn load_strategy(path: &Path) -> Outcome<StrategyFile> {
    let text = read(path)?;
    parse(path, &text)
}

fn fits_single_copy(g: &Game, per_player_inputs: impl Iterator<Item = usize>) -> bool {
    per_player_inputs.eq(g.inputs().iter().copied())
}

/// A classical strategy for the repetition: single-copy tables are played
/// independently in every coordinate.
fn classical_for_repetition(g: &Game, rep: &Game, n: usize, s: ClassicalStrategy) -> Outcome<ClassicalStrategy> {
    if n > 1 && fits_single_copy(g, s.tables.iter().map(Vec::len)) {
        return Ok(s.tensor_power(g, n)?);
    }
    s.check_shape(rep)?;
    Ok(s)
}

fn quantum_for_repetition(g: &Game, rep: &Game, n: usize, s: QuantumStrategy) -> Outcome<QuantumStrategy> {
    if n > 1 && fits_single_copy(g, s.povms.iter().map(Vec::len)) {
        s.check(g)?;
        return Ok(s.tensor_power(n)?);
    }
    s.check(rep)?;
    Ok(s)
}

fn value_row(method: &str, value: f64) -> Table {
    let mut t = Table::new(vec!["method", "value"]);
    t.push(vec![method.into(), num(value)]);
    t
}

pub fn value(cmd: &ValueCommand, budgets: &Budgets) -> Outcome<Report> {
    let (result, method) = match cmd {
        ValueCommand::Classical(a) => (values::classical_value_bruteforce(&load_game(&a.game)?, BRUTE_FORCE_BUDGET)?, "classical"),
        ValueCommand::Ns(a) => (values::ns_value_lp(&load_game(&a.game)?, budgets.lp_vars)?, "ns"),
        ValueCommand::Seesaw(a) => {
            let g = load_game(&a.game)?;
            let dims = a.dims.clone().unwrap_or_else(|| corpus::seesaw_dims(&g));
            if dims.len() != g.k() {
                return Err(Failure::Usage(format!("--dims has {} entries for {} players", dims.len(), g.k())));
            }
            if a.restarts == 0 {
                return Err(Failure::Usage("--restarts must be at least 1".into()));
            }
            (values::seesaw_lower_bound(&g, &SeesawConfig::new(dims, a.restarts, a.seed))?, "seesaw")
        }
    };
    let table = value_row(method, result.value);
    Ok(Report::new(&result).with_table(table))
}

pub fn repeat(a: &RepeatArgs, budgets: &Budgets) -> Outcome<Report> {
    let g = Arc::new(load_game(&a.game)?);
    let rep = g.repeat(a.n)?;
    let Some(path) = &a.strategy else {
        let file = GameFile::from_game(&rep.materialize(budgets.table_entries)?)?;
        return Ok(Report::new(json!({ "n": a.n, "game": file })));
    };
    let single_copy_inputs = a.n > 1;
    let (win, single) = match load_strategy(path)? {
        StrategyFile::Classical(s) => {
            let single = (single_copy_inputs && fits_single_copy(&g, s.tables.iter().map(Vec::len)))
                .then(|| values::evaluate_classical(&g, &s))
                .transpose()?;
            let s = classical_for_repetition(&g, &rep, a.n, s)?;
            (values::evaluate_classical(&rep, &s)?, single)
        }
        StrategyFile::Quantum(f) => {
            let s = f.into_strategy()?;
            let single = (single_copy_inputs && fits_single_copy(&g, s.povms.iter().map(Vec::len)))
                .then(|| values::evaluate_quantum_strategy(&g, &s))
                .transpose()?;
            let s = quantum_for_repetition(&g, &rep, a.n, s)?;
            (values::evaluate_quantum_strategy(&rep, &s)?, single)
        }
        StrategyFile::Ns(_) | StrategyFile::Cq(_) => {
            return Err(Failure::Usage("repeat scores classical or quantum strategies".into()));
        }
    };
    let mut t = Table::new(vec!["n", "win_probability", "single_copy_value"]);
    t.push(vec![a.n.to_string(), num(win), single.map(num).unwrap_or_default()]);
    Ok(Report::new(json!({
        "n": a.n,
        "win_probability": win,
        "single_copy_value": single,
        "product_of_single_copies": single.map(|p| p.powi(a.n as i32)),
    }))
    .with_table(t))
}

pub fn counterexample(a: &CounterexampleArgs, budgets: &Budgets) -> Outcome<Report> {
    let g = Arc::new(build_agreement_game(a.k)?);
    let classical = values::classical_value_bruteforce(&g, BRUTE_FORCE_BUDGET)?;
    let ns = values::ns_value_lp(&g, budgets.lp_vars)?;
    let rep = g.repeat(a.k)?;
    let repeated = values::evaluate_classical(&rep, &agreement_repeated_strategy(a.k)?)?;
    let mut t = Table::new(vec!["k", "classical", "ns", "repeated_strategy"]);
    t.push(vec![a.k.to_string(), num(classical.value), num(ns.value), num(repeated)]);
    Ok(Report::new(json!({
        "k": a.k,
        "classical": classical.value,
        "ns": ns.value,
        "repeated_strategy": repeated,
        "repeated_inputs": rep.num_inputs().to_string(),
        "game": GameFile::from_game(&g)?,
        "repeated_strategy_tables": agreement_repeated_strategy(a.k)?,
        "details": { "classical": classical, "ns": ns },
    }))
    .with_table(t))
}

pub fn qit_battery(a: &BatteryArgs) -> Outcome<Report> {
    if a.cases == 0 {
        return Err(Failure::Usage("--cases must be at least 1".into()));
    }
    let report = battery::run_battery(a.cases, a.seed);
    let mut t = Table::new(vec!["fact", "cases", "judged", "violations", "errors", "worst_excess"]);
    for f in &report.facts {
        t.push(vec![f.name.clone(), f.cases.to_string(), f.judged.to_string(), f.violations.to_string(), f.errors.to_string(), num(f.worst_excess)]);
    }
    let failed = report.total_violations > 0 || report.facts.iter().any(|f| f.errors > 0);
    let mut out = Report::new(&report).with_table(t);
    out.failed_check = failed;
    Ok(out)
}

pub fn advice_run(a: &AdviceArgs, budgets: &Budgets) -> Outcome<Report> {
    let strategy = load_strategy(&a.strategy)?;
    let (state, skip) = match (load_any_game(&a.game)?, strategy, &a.condition) {
        (AnyGame::Classical(g), StrategyFile::Cq(f), Condition::WinSubset(c)) => {
            let s = f.into_strategy()?;
            (advice::condition_win_subset_cq(&CqGame::from_classical(&g)?, a.n, &s, c, budgets.advice_dim)?, c.clone())
        }
        (AnyGame::Cq(g), StrategyFile::Cq(f), cond) => {
            let coords = match cond {
                Condition::WinSubset(c) => c.clone(),
                Condition::WinAll => (0..a.n).collect(),
                Condition::None => Vec::new(),
            };
            let s = f.into_strategy()?;
            (advice::condition_win_subset_cq(&g, a.n, &s, &coords, budgets.advice_dim)?, coords)
        }
        (AnyGame::Classical(g), s, cond) => {
            let g = Arc::new(g);
            let rep = g.repeat(a.n)?;
            let s = match s {
                StrategyFile::Classical(s) => {
                    let s = classical_for_repetition(&g, &rep, a.n, s)?;
                    QuantumStrategy::from_classical(&rep, &s)?
                }
                StrategyFile::Quantum(f) => quantum_for_repetition(&g, &rep, a.n, f.into_strategy()?)?,
                StrategyFile::Cq(_) => return Err(Failure::Usage("a CQ strategy needs --condition win-subset:C".into())),
                StrategyFile::Ns(_) => return Err(Failure::Usage("advice states need a classical, quantum or CQ strategy".into())),
            };
            let psi0 = advice::build_psi0(&g, a.n, &s, budgets.advice_dim)?;
            match cond {
                Condition::None => (psi0, Vec::new()),
                Condition::WinAll => (advice::condition_win_all(&psi0)?, Vec::new()),
                Condition::WinSubset(_) => return Err(Failure::Usage("win-subset:C needs a CQ strategy; use win-all for this one".into())),
            }
        }
        (AnyGame::Cq(_), _, _) => return Err(Failure::Usage("a CQ game needs a CQ strategy".into())),
    };
    let (rounds, kappa) = advice::protocol_b(&state, &skip)?;
    let properties = advice::ReductionReport { rounding: None, ..rounds[0].clone() };
    let mut t = Table::new(vec![
        "coordinate",
        "coordinate_win",
        "input_divergence",
        "avg_bures",
        "info_bound",
        "pr_f0",
        "pr_f1",
        "rounding_gap",
        "kappa",
        "kappa_floor",
        "chain_holds",
        "kappa_holds",
    ]);
    let rounding: Vec<advice::RoundingReport> = rounds.into_iter().map(|r| r.rounding.expect("protocol_b rounds every coordinate")).collect();
    for r in &rounding {
        let i = r.coordinate;
        t.push(vec![
            i.to_string(),
            num(properties.coordinate_win[i]),
            num(properties.input_divergence[i]),
            num(r.avg_bures),
            num(r.info_bound),
            num(r.pr_f0),
            num(r.pr_f1),
            num(r.rounding_gap),
            num(r.kappa),
            num(r.kappa_floor),
            r.chain_holds.to_string(),
            r.kappa_holds.to_string(),
        ]);
    }
    Ok(Report::new(json!({
        "dimension": state.state.layout().dim(),
        "report": properties,
        "rounding": rounding,
        "kappa": kappa,
    }))
    .with_table(t))
}

fn losing_pattern(n: usize, fraction: f64) -> Outcome<Vec<bool>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Failure::Usage(format!("--losing-fraction {fraction} is not in [0, 1]")));
    }
    let losing = (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    Ok((0..n).map(|i| i < losing).collect())
}

pub fn search_sim(a: &SearchArgs) -> Outcome<Report> {
    if !(a.eps_prime > 0.0 && a.eps_prime < 1.0) || !(a.eta > 0.0 && a.eta < 1.0) {
        return Err(Failure::Usage("need 0 < eps-prime < 1 and 0 < eta < 1".into()));
    }
    if a.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    let cfg = SearchConfig::new(a.eps_prime, a.eta, a.n, a.answer_bits, a.q)?;
    let loss = losing_pattern(a.n, a.losing_fraction)?;
    let outcome = search::protocol_run(&loss, &cfg, a.samples, a.seed)?;
    let exact = search::exact_acceptance(&loss, &cfg)?;
    let mut t = Table::new(vec!["accept_prob", "ci_low", "ci_high", "std_error", "exact", "q", "m", "T", "bound", "samples"]);
    t.push(vec![
        num(outcome.accept_prob),
        num(outcome.ci[0]),
        num(outcome.ci[1]),
        num(outcome.std_error),
        num(exact),
        outcome.q.to_string(),
        outcome.m.to_string(),
        outcome.qubits_exchanged.to_string(),
        num(outcome.bound),
        outcome.samples.to_string(),
    ]);
    let mut body = serde_json::to_value(&outcome).expect("outcome serializes");
    body["exact_accept_prob"] = json!(exact);
    body["losing_coordinates"] = json!(loss.iter().filter(|&&b| b).count());
    body["config"] = serde_json::to_value(&cfg).expect("config serializes");
    Ok(Report::new(body).with_table(t))
}

pub fn protocol_c(a: &ProtocolCArgs) -> Outcome<Report> {
    let g = Arc::new(load_game(&a.game)?);
    let rep = g.repeat(a.n)?;
    let s = match load_strategy(&a.strategy)? {
        StrategyFile::Classical(s) => classical_for_repetition(&g, &rep, a.n, s)?,
        _ => return Err(Failure::Usage("protocol-c plays a classical strategy".into())),
    };
    let mode = match a.samples {
        None => ProtocolCMode::Exact,
        Some(0) => return Err(Failure::Usage("--samples must be at least 1".into())),
        Some(samples) => ProtocolCMode::MonteCarlo { samples, seed: a.seed },
    };
    let r = advice::protocol_c_classical(&g, a.n, &s, &a.coords, mode)?;
    let mut t = Table::new(vec!["lambda", "omega", "kappa", "kappa_std_error", "delta", "delta_bound", "factorization_defect", "kappa_holds"]);
    t.push(vec![
        num(r.lambda),
        num(r.omega),
        num(r.kappa),
        r.kappa_std_error.map(num).unwrap_or_default(),
        num(r.delta),
        num(r.delta_bound),
        num(r.factorization_defect),
        r.kappa_holds.to_string(),
    ]);
    Ok(Report::new(&r).with_table(t))
}
