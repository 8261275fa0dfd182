use std::io::Write;
use std::process::ExitCode;

use acdq::harness::{format_csv, parse_args, run_experiment, selftest, Command};

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    match parse_args(std::env::args_os())? {
        Command::Help(text) => {
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest(params) => {
            let results = selftest::run(params.seed, params.trials);
            let mut failed = 0;
            for r in &results {
                println!(
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
                failed += usize::from(!r.passed);
            }
            Ok(if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Experiment(config) => {
            let records = run_experiment(&config)?;
            if config.output_path.is_none() {
                std::io::stdout().write_all(format_csv(&records).as_bytes())?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
