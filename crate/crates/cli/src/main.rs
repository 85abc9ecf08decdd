mod args;
mod bench;
mod eval;
mod exit;
mod fit;
mod images;
mod score;
mod synth;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Command, RunConfig};

fn run(config: RunConfig) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build_global()
        .map_err(|e| exit::usage(format!("--threads: {e}")))?;
    match config.command {
        Command::Fit(a) => fit::run(a),
        Command::Score(a) => score::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Bench(a) => bench::run(a, config.threads),
        Command::Synth(a) => synth::run(a),
    }
}

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if config.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(exit::USAGE);
    }
    match run(config) {
        Ok(()) => ExitCode::from(exit::SUCCESS),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
