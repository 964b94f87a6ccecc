//! `vanet-hopcalc`: hop-count analysis from the command line.

mod cli;
mod commands;
mod config;
mod error;
mod output;

use clap::Parser;
use cli::{Cli, Command};
use config::{ConfigFile, Resolver};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    let mut r = Resolver::new(name, file)?;
    let report = match cli.command {
        Command::Pmf(a) => commands::pmf(a, &mut r),
        Command::MeanSweep(a) => commands::mean_sweep(a, &mut r),
        Command::Simulate(a) => commands::simulate(a, &mut r),
        Command::Fit(a) => commands::fit(a, &mut r),
        Command::Compare(a) => commands::compare(a, &mut r),
        Command::Density(a) => commands::density(a, &mut r),
        Command::KernelDump(a) => commands::kernel_dump(a, &mut r),
        Command::TablesDump(a) => commands::tables_dump(a, &mut r),
        Command::SynthTrace(a) => commands::synth_trace(a, &mut r),
    }?;
    let resolved = r.finish()?;
    output::emit(cli.output.as_deref(), &output::render(name, &resolved, &report))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("vanet-hopcalc: {e}");
        std::process::exit(e.exit_code());
    }
}
