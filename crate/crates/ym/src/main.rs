use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ym::cli::{run, Args, RunConfig};

fn main() -> ExitCode {
    let result = RunConfig::from_args(Args::parse()).and_then(|config| run(&config));
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()) {
                eprintln!("ym: {e}");
                return ExitCode::from(3);
            }
            ExitCode::from(out.status as u8)
        }
        Err(e) => {
            eprintln!("ym: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
