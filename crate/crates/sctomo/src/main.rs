use clap::Parser;
use sctomo::cli::{run, Cli};
use sctomo::CliError;

fn main() {
    if let Err(e) = run(Cli::parse()) {
        match e {
            CliError::NotConverged => eprintln!("warning: {e}"),
            _ => eprintln!("error: {e}"),
        }
        std::process::exit(e.exit_code());
    }
}
