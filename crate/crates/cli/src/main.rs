mod args;
mod commands;
mod config;
mod error;
mod model;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Output;
use error::{CliError, CliResult};
use report::{emit, CommandEcho, Timing};

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    match threads {
        None => Ok(()),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Computation(format!("thread pool: {e}"))),
    }
}

fn execute(cli: &Cli, echo: CommandEcho) -> CliResult<()> {
    configure_threads(cli.threads)?;
    let start = Instant::now();
    let output = match &cli.command {
        Command::Fit(a) => commands::fit_cmd(a, echo)?,
        Command::Tune(a) => commands::tune_cmd(a, echo)?,
        Command::Simulate(a) => commands::simulate_cmd(a, echo)?,
        Command::Rng(a) => commands::rng_cmd(a)?,
        Command::Fisher(a) => commands::fisher_cmd(a, echo)?,
    };
    if let Output::Report(mut report, path) = output {
        if cli.timing {
            report.timing = Some(Timing {
                elapsed_seconds: start.elapsed().as_secs_f64(),
            });
        }
        emit(path.as_deref(), &report.to_json()?)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let name = match cli.command {
        Command::Fit(_) => "fit",
        Command::Tune(_) => "tune",
        Command::Simulate(_) => "simulate",
        Command::Rng(_) => "rng",
        Command::Fisher(_) => "fisher",
    };
    let echo = CommandEcho {
        name: name.to_string(),
        args: argv.iter().skip(1).cloned().collect(),
    };
    match execute(&cli, echo) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn argument_definitions_are_consistent() {
        super::Cli::command().debug_assert();
    }
}
