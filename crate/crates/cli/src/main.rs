mod args;
mod commands;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] loolsim::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let report = match &cli.command {
        Command::HomScan(a) => commands::hom_scan_cmd(a)?,
        Command::Eraser(a) => commands::eraser_cmd(a)?,
        Command::Witness(a) => commands::witness_cmd(a)?,
        Command::Tomo(a) => commands::tomo_cmd(a)?,
        Command::Schmidt(a) => commands::schmidt_cmd(a)?,
        Command::Lift(a) => commands::lift_cmd(a)?,
    };
    emit(&report, cli)
}

fn emit(report: &Report, cli: &Cli) -> Result<(), CliError> {
    let body = match cli.output.format {
        Format::Json => {
            let mut s = serde_json::to_vec_pretty(&report.json)?;
            s.push(b'\n');
            s
        }
        Format::Csv => report.csv.clone(),
    };
    let width = report
        .summary
        .iter()
        .map(|(k, _)| k.chars().count())
        .max()
        .unwrap_or(0);
    let table: String = report
        .summary
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect();

    match &cli.output.out {
        Some(path) => {
            fs::write(path, &body)?;
            let mut out = io::stdout().lock();
            out.write_all(table.as_bytes())?;
            writeln!(out, "{:<width$}  {}", "written", path.display())?;
        }
        None => {
            io::stdout().lock().write_all(&body)?;
            io::stderr().lock().write_all(table.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on parse errors
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
