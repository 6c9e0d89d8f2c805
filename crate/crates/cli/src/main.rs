mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use io::UsageError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let format = cli.format;
    match cli.command {
        Command::Experiment(a) => commands::experiment(a, format),
        Command::Serve(a) => commands::serve(a),
        other => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
            pool.install(|| match other {
                Command::Prep(a) => commands::prep(a, format),
                Command::Cluster(a) => commands::cluster(a, format),
                Command::Pck(a) => commands::pck(a, format),
                Command::Metrics(a) => commands::metrics(a, format),
                Command::Synth(a) => commands::synth(a, format),
                Command::Experiment(_) | Command::Serve(_) => unreachable!(),
            })
        }
    }
}
