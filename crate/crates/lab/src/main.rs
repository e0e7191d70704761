use std::process::ExitCode;

use clap::Parser;
use urn_lab::commands::{run, RunError};
use urn_lab::config::{Cli, ExperimentConfig};
use urn_lab::output::emit;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = ExperimentConfig::from(cli);
    match run(&cfg) {
        Ok(o) => {
            if let Err(e) = emit(cfg.format, cfg.out.as_deref(), cfg.command.name(), cfg.seed, o.params, &o.table) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(if o.passed { 0 } else { 1 })
        }
        Err(RunError::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(RunError::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
