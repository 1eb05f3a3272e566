//! `pacfourier` command-line front end.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod report;
mod source;

use commands::{gen, oracle, select, train, verify, CommonArgs};
use error::{CliResult, EXIT_CHECK_FAILED};
use report::{write_text, Run, RunReport};

#[derive(Debug, Parser)]
#[command(name = "pacfourier", version, about = "Fourier-based learning and feature selection on the Boolean cube")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a learner on a train split and evaluate it on the held-out rows
    Train(train::TrainCmd),
    /// Choose the best feature subset of size k and evaluate its predictor
    Select(select::SelectCmd),
    /// Exact optimal junta error, sandwich bounds and the ERM cross-check
    Oracle(oracle::OracleCmd),
    /// Sweep sample sizes and check the error against Popt and the deviation bound
    Verify(verify::VerifyCmd),
    /// Write a synthetic dataset
    Gen(gen::GenCmd),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Train(c) => &c.common,
            Command::Select(c) => &c.common,
            Command::Oracle(c) => &c.common,
            Command::Verify(c) => &c.common,
            Command::Gen(c) => &c.common,
        }
    }
}

fn dispatch(command: Command, args: Vec<String>) -> CliResult<RunReport> {
    let timed = command.common().timings;
    match command {
        Command::Train(c) => train::run(c, Run::new("train", args, timed)),
        Command::Select(c) => select::run(c, Run::new("select", args, timed)),
        Command::Oracle(c) => oracle::run(c, Run::new("oracle", args, timed)),
        Command::Verify(c) => verify::run(c, Run::new("verify", args, timed)),
        Command::Gen(c) => gen::run(c, Run::new("gen", args, timed)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = cli.command.common().out.clone();
    let result = dispatch(cli.command, args).and_then(|report| {
        let text = report.to_json();
        match &out {
            Some(path) => write_text(path, &text)?,
            None => print!("{text}"),
        }
        Ok(report.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification checks failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
