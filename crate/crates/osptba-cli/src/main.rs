use std::process::ExitCode;

use clap::Parser;
use osptba_cli::{emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|report| emit(&cli, &report).map(|text| (report.pass, text)));
    match result {
        Ok((pass, text)) => {
            if let Some(t) = text {
                print!("{t}");
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("osptba: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
