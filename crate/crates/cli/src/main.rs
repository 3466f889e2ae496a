//! `repval`: reproducible experiments on game values, quantum information
//! inequalities, advice states and the distributed search protocol.
//!
//! Every report is JSON (or CSV with `--format csv`) carrying a manifest with
//! the parsed arguments, seed, version and timing. Exit codes: 0 success,
//! 1 a checked property failed, 2 usage error, 3 size budget exceeded,
//! 4 invalid input.

mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::{AdviceCommand, Cli, Command, SearchCommand};
use commands::Budgets;
use output::{Failure, Outcome, Report, RunManifest, Timing, EXIT_FAILED_CHECK, EXIT_USAGE};

fn dispatch(command: &Command, budgets: &Budgets) -> Outcome<Report> {
    match command {
        Command::Value(v) => commands::value(v, budgets),
        Command::Repeat(a) => commands::repeat(a, budgets),
        Command::Counterexample(a) => commands::counterexample(a, budgets),
        Command::QitBattery(a) => commands::qit_battery(a),
        Command::Advice(AdviceCommand::Run(a)) => commands::advice_run(a, budgets),
        Command::Search(SearchCommand::Sim(a)) => commands::search_sim(a),
        Command::ProtocolC(a) => commands::protocol_c(a),
    }
}

fn run(cli: &Cli, argv: Vec<String>) -> Outcome<bool> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let budgets = Budgets::from_env()?;
    let start = Instant::now();
    let report = dispatch(&cli.command, &budgets)?;
    let failed = report.failed_check;
    let manifest = RunManifest {
        command: cli.command.name(),
        argv,
        config: serde_json::json!({ "args": cli, "budgets": budgets }),
        seed: cli.command.seed(),
        version: env!("CARGO_PKG_VERSION"),
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), threads: rayon::current_num_threads() },
    };
    let text = output::render(report, &manifest, cli.format)?;
    output::emit(&text, cli.out.as_deref())?;
    Ok(!failed)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(&cli, argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("repval: report written, but at least one checked property failed");
            ExitCode::from(EXIT_FAILED_CHECK)
        }
        Err(f) => {
            eprintln!("repval: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
