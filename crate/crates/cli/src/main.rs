mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { run::USAGE } else { run::OK });
        }
    };
    match run::dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(run::Failure::Usage(msg)) => {
            eprintln!("verjar: {msg}");
            ExitCode::from(run::USAGE)
        }
        Err(run::Failure::Fatal(err)) => {
            eprintln!("verjar: {err:#}");
            ExitCode::from(run::FATAL)
        }
    }
}
