mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, EXIT_USAGE};

fn threads_of(command: &Command) -> Option<usize> {
    match command {
        Command::Factorize(a) => a.solver.threads,
        Command::Bench(a) => a.solver.threads,
        Command::Gen(_) => None,
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Factorize(a) => commands::factorize(a),
        Command::Bench(a) => commands::bench(a).map(drop),
        Command::Gen(a) => commands::gen(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_of(&cli.command) {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE as u8);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };

    match pool.install(|| dispatch(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
