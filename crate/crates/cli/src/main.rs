use std::process::ExitCode;

use clap::Parser;

use topotrack_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("topotrack: {e}");
            e.into()
        }
    }
}
