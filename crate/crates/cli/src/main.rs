use std::process::ExitCode;

use clap::Parser;
use dipolesim::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((report, written)) => {
            for c in &report.checks {
                let tag = if c.passed { "ok  " } else { "FAIL" };
                println!("{tag} {}: {:e} ({})", c.name, c.value, c.rule);
            }
            for (k, v) in &report.metrics {
                println!("{k} = {v}");
            }
            for p in &written {
                eprintln!("wrote {}", p.display());
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("dipolesim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
