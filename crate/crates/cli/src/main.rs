use std::process::ExitCode;

use clap::Parser;

use pwarx_cli::{parse_config, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parse_config(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pwarx: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
