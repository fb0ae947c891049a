use std::process::ExitCode;

use clap::Parser;
use jndbench::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.describe());
            ExitCode::from(e.exit_code())
        }
    }
}
