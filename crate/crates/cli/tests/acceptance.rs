//! Acceptance run: each criterion prints one `PASS` or `FAIL` line with the
//! measured numbers and its runtime, and the binary exits non-zero if any
//! criterion fails. Runs with `harness = false`, so the lines always show.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use repval_core::advice::{build_psi0, condition_win_all, measure_properties, protocol_c_classical, round_measured, ProtocolCMode, ADVICE_BUDGET};
use repval_core::games::json::GameFile;
use repval_core::games::{agreement_repeated_strategy, build_agreement_game, chsh};
use repval_core::qit::battery;
use repval_core::qit::strategy_rounding;
use repval_core::qmat::random::{random_distribution, random_pure, rng_from_seed};
use repval_core::qmat::{cr, CVec, Layout, State};
use repval_core::search::{comm_cost, protocol_run, sample_run, schedule, success_after_full, worst_case_steps, SearchConfig};
use repval_core::values::{self, corpus, SeesawConfig, Witness, BRUTE_FORCE_BUDGET, LP_BUDGET};
use serde_json::Value;

type Verdict = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(t)
    } else {
        Err(format!("took {t:.1?}, limit {limit:?}"))
    }
}

fn counterexample_values() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    for k in [2u32, 3] {
        let out = Command::new(env!("CARGO_BIN_EXE_repval")).args(["counterexample", "--k", &k.to_string()]).env_remove("REPVAL_BUDGET_MB").output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("k={k}: exit {:?}", out.status.code()));
        }
        let v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
        let (c, ns, rep) = (v["classical"].as_f64().unwrap(), v["ns"].as_f64().unwrap(), v["repeated_strategy"].as_f64().unwrap());
        let inputs = v["repeated_inputs"].as_str().unwrap().to_string();
        notes.push(format!("k={k}: classical {c}, ns {ns:.7}, repeated {rep} over {inputs} inputs"));
        if c != 0.5 {
            bad.push(format!("k={k} classical {c} != 0.5"));
        }
        if (ns - 0.5).abs() > 1e-6 {
            bad.push(format!("k={k} ns {ns:.7} not within 1e-6 of 0.5"));
        }
        if rep != 0.5 {
            bad.push(format!("k={k} repeated strategy {rep} != 0.5"));
        }
        if inputs != (1u64 << (k * k)).to_string() {
            bad.push(format!("k={k} enumerated {inputs} inputs, expected 2^{}", k * k));
        }
    }
    let t = within(Duration::from_secs(10), start)?;
    let line = format!("{} ({t:.2?})", notes.join("; "));
    if bad.is_empty() {
        Ok(line)
    } else {
        Err(format!("{}: {line}", bad.join(", ")))
    }
}

fn inequality_battery() -> Verdict {
    let start = Instant::now();
    let report = battery::run_battery(1000, 2024);
    let t = within(Duration::from_secs(300), start)?;
    let failing: Vec<String> = report
        .facts
        .iter()
        .filter(|f| f.violations > 0 || f.errors > 0)
        .map(|f| format!("{} ({} violations, {} errors, worst excess {:.3})", f.name, f.violations, f.errors, f.worst_excess))
        .collect();
    let line = format!("{} checks x {} cases, {} violations ({t:.1?})", report.facts.len(), report.cases, report.total_violations);
    if failing.is_empty() {
        Ok(line)
    } else {
        Err(format!("{line}; failing: {}", failing.join(", ")))
    }
}

/// `sum_x sqrt(mu(x)) |x>|x'>|phi_x>` with per-player input, copy and
/// answer registers plus one shared register `B`.
fn random_cq_state(seed: u64, k: usize, dx: usize, da: usize, db: usize) -> (State, Vec<String>, Vec<Vec<String>>) {
    let mut rng = rng_from_seed(seed);
    let mut regs: Vec<(String, usize)> = Vec::new();
    regs.extend((0..k).map(|j| (format!("X{j}"), dx)));
    regs.extend((0..k).map(|j| (format!("X'{j}"), dx)));
    regs.extend((0..k).map(|j| (format!("A{j}"), da)));
    regs.push(("B".into(), db));
    let layout = Layout::new(regs).unwrap();
    let nx = dx.pow(k as u32);
    let rest = da.pow(k as u32) * db;
    let mu = random_distribution(&mut rng, nx);
    let mut v = CVec::zeros(layout.dim());
    for x in 0..nx {
        let phi_x = random_pure(&mut rng, rest);
        for r in 0..rest {
            v[(x * nx + x) * rest + r] = phi_x[r] * cr(mu[x].sqrt());
        }
    }
    let inputs = (0..k).map(|j| format!("X{j}")).collect();
    let locals = (0..k).map(|j| vec![format!("X{j}"), format!("X'{j}"), format!("A{j}")]).collect();
    (State::pure(layout, v).unwrap(), inputs, locals)
}

fn strategy_rounding_bounds() -> Verdict {
    let start = Instant::now();
    let shapes = [(2, 2, 2, 2), (2, 3, 2, 2), (2, 4, 2, 1), (2, 2, 4, 3), (3, 2, 2, 2), (3, 2, 2, 1)];
    let (mut states, mut worst_single, mut worst_chain) = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (si, &(k, dx, da, db)) in shapes.iter().enumerate() {
        for case in 0..20u64 {
            let (phi, inputs, locals) = random_cq_state(1000 * si as u64 + case, k, dx, da, db);
            let out = strategy_rounding(&phi, &inputs, &locals).map_err(|e| e.to_string())?;
            for j in 0..k {
                worst_single = worst_single.max(out.per_player_bures[j] - out.info[j]);
            }
            worst_chain = worst_chain.max(out.avg_bures - out.bound);
            states += 1;
        }
    }
    let t = within(Duration::from_secs(300), start)?;
    let line = format!("{states} states, max E_x K - I = {worst_single:.2e}, max E_x K - 4k sum I = {worst_chain:.2e} ({t:.1?})");
    if worst_single <= 1e-7 && worst_chain <= 1e-6 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn advice_enactment() -> Verdict {
    let start = Instant::now();
    let g = Arc::new(chsh());
    if !(g.k() == 2 && g.is_free() && g.outputs().iter().all(|&a| a == 2)) {
        return Err("instance is not a two-player binary free game".into());
    }
    let seesaw = values::seesaw_lower_bound(&g, &SeesawConfig::new(corpus::seesaw_dims(&g), 8, 0)).map_err(|e| e.to_string())?;
    if !(0.7 < seesaw.value && seesaw.value < 0.95) {
        return Err(format!("see-saw value {} outside (0.7, 0.95)", seesaw.value));
    }
    let Some(Witness::Quantum(file)) = seesaw.witness else { return Err("see-saw returned no quantum strategy".into()) };
    let s2 = file.into_strategy().and_then(|s| s.tensor_power(2)).map_err(|e| e.to_string())?;
    let direct = values::evaluate_quantum_strategy(&g.repeat(2).map_err(|e| e.to_string())?, &s2).map_err(|e| e.to_string())?;
    let phi = build_psi0(&g, 2, &s2, ADVICE_BUDGET).and_then(|psi| condition_win_all(&psi)).map_err(|e| e.to_string())?;
    let report = measure_properties(&phi).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    if (report.lambda - direct).abs() > 1e-8 {
        bad.push(format!("lambda {} vs direct {direct}", report.lambda));
    }
    if report.divergence_sum > report.log_inv_lambda + 1e-7 {
        bad.push(format!("sum of input divergences {} > log 1/lambda {}", report.divergence_sum, report.log_inv_lambda));
    }
    let mut kappas = Vec::new();
    for i in 0..2 {
        let r = round_measured(&phi, &report, i).map_err(|e| e.to_string())?;
        if !(r.rounding_gap <= r.avg_bures + 1e-6 && r.avg_bures <= r.info_bound + 1e-6) {
            bad.push(format!("coordinate {i}: chain {} <= {} <= {} fails", r.rounding_gap, r.avg_bures, r.info_bound));
        }
        let floor = r.pr_f0 - 4.0 * r.rounding_gap - 4.0 * report.input_divergence[i];
        if r.kappa < floor - 1e-6 {
            bad.push(format!("coordinate {i}: kappa {} below {floor}", r.kappa));
        }
        kappas.push(format!("{:.4}", r.kappa));
    }
    let t = within(Duration::from_secs(120), start)?;
    let line = format!(
        "see-saw {:.5}, lambda {:.6} (direct {direct:.6}), sum div {:.2e} <= {:.4}, kappa [{}] ({t:.1?})",
        seesaw.value,
        report.lambda,
        report.divergence_sum,
        report.log_inv_lambda,
        kappas.join(", ")
    );
    if bad.is_empty() {
        Ok(line)
    } else {
        Err(format!("{}: {line}", bad.join("; ")))
    }
}

/// Group success from full amplitude vectors, following the schedule.
fn amplitude_group_success(m: usize, t: usize) -> f64 {
    let marked: Vec<bool> = (0..m).map(|i| i < t).collect();
    let miss: f64 = schedule(m).iter().map(|&c| 1.0 - (0..c).map(|j| success_after_full(&marked, j)).sum::<f64>() / c as f64).product();
    1.0 - miss
}

fn search_protocol() -> Verdict {
    let start = Instant::now();
    let n = 200;
    let cfg = SearchConfig::new(0.1, 0.1, n, 1, None).map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(31);
    let winning = vec![false; n];
    let rejects = (0..10_000).filter(|_| sample_run(&winning, &cfg, &mut rng).0.is_some()).count();
    let all_win = protocol_run(&winning, &cfg, 10_000, 1).map_err(|e| e.to_string())?;

    let loss: Vec<bool> = (0..n).map(|i| i < n / 10).collect();
    let mc = protocol_run(&loss, &cfg, 100_000, 2).map_err(|e| e.to_string())?;
    let ceiling = cfg.acceptance_bound() + 3.0 * mc.std_error;

    let mut min_success = f64::INFINITY;
    for m in 1..=64 {
        for t in 1..=m {
            min_success = min_success.min(amplitude_group_success(m, t));
        }
    }

    let t_cost = comm_cost(&cfg, worst_case_steps(cfg.m)) as f64;
    let nominal = cfg.q as f64 * (cfg.m as f64).sqrt() * f64::from(cfg.answer_bits + cfg.index_bits);
    let ratio = t_cost / nominal;

    let t = within(Duration::from_secs(180), start)?;
    let line = format!(
        "all-winning rejects {rejects}/10000 (accept {}), losing 0.1: accept {:.5} <= {ceiling:.5}, min group success {min_success:.4}, T/nominal {ratio:.2} ({t:.1?})",
        all_win.accept_prob, mc.accept_prob
    );
    if rejects == 0 && all_win.accept_prob == 1.0 && mc.accept_prob <= ceiling && min_success >= 2.0 / 3.0 && (0.25..=4.0).contains(&ratio) {
        Ok(line)
    } else {
        Err(line)
    }
}

fn protocol_c_agreement() -> Verdict {
    let start = Instant::now();
    let g = Arc::new(build_agreement_game(2).map_err(|e| e.to_string())?);
    let s = agreement_repeated_strategy(2).map_err(|e| e.to_string())?;
    let r = protocol_c_classical(&g, 2, &s, &[0], ProtocolCMode::Exact).map_err(|e| e.to_string())?;
    // With one free coordinate, lambda * omega is the chance of winning both.
    let both = values::evaluate_classical(&g.repeat(2).map_err(|e| e.to_string())?, &s).map_err(|e| e.to_string())?;
    let t = within(Duration::from_secs(30), start)?;
    let line = format!(
        "lambda {}, omega {}, kappa {}, delta {} (bound {:.1}), factorization defect {:.1e} ({t:.2?})",
        r.lambda, r.omega, r.kappa, r.delta, r.delta_bound, r.factorization_defect
    );
    if r.factorization_defect < 1e-12 && r.kappa >= r.omega - 4.0 * r.delta && (r.lambda * r.omega - both).abs() < 1e-12 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn value_ordering() -> Verdict {
    let start = Instant::now();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(root().join("corpus")).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    paths.sort();
    let mut bad = Vec::new();
    let mut chsh_triple = None;
    for p in &paths {
        let name = p.file_stem().unwrap().to_string_lossy().to_string();
        let file: GameFile = serde_json::from_str(&std::fs::read_to_string(p).map_err(|e| e.to_string())?).map_err(|e| format!("{name}: {e}"))?;
        let g = file.into_game().map_err(|e| format!("{name}: {e}"))?;
        let c = values::classical_value_bruteforce(&g, BRUTE_FORCE_BUDGET).map_err(|e| e.to_string())?.value;
        let q = values::seesaw_lower_bound(&g, &SeesawConfig::new(corpus::seesaw_dims(&g), 8, 0)).map_err(|e| e.to_string())?.value;
        let ns = values::ns_value_lp(&g, LP_BUDGET).map_err(|e| e.to_string())?.value;
        if !(c <= q + 1e-6 && q <= ns + 1e-6) {
            bad.push(format!("{name}: {c} / {q} / {ns}"));
        }
        if name == "chsh" {
            chsh_triple = Some((c, q, ns));
        }
    }
    let t = within(Duration::from_secs(120), start)?;
    let Some((c, q, ns)) = chsh_triple else { return Err("corpus has no chsh game".into()) };
    let line = format!("{} games ordered, chsh ({c}, {q:.5}, {ns:.6}) ({t:.1?})", paths.len() - bad.len());
    if paths.len() < 10 {
        bad.push(format!("only {} games", paths.len()));
    }
    if (c - 0.75).abs() > 1e-9 || q < 0.8534 || (ns - 1.0).abs() > 1e-6 {
        bad.push("chsh triple differs from (0.75, >= 0.8534, 1.0)".into());
    }
    if bad.is_empty() {
        Ok(line)
    } else {
        Err(format!("{}: {line}", bad.join("; ")))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("counterexample values", counterexample_values),
        ("inequality battery", inequality_battery),
        ("strategy rounding bounds", strategy_rounding_bounds),
        ("advice state enactment", advice_enactment),
        ("distributed search", search_protocol),
        ("protocol C on the agreement game", protocol_c_agreement),
        ("value ordering corpus", value_ordering),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
