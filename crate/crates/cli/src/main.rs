use std::process::ExitCode;

use clap::Parser;
use sharecap::commands::{run, Cli, EXIT_OK, EXIT_PARSE};

fn main() -> ExitCode {
    sharecap::init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { EXIT_OK });
        }
    };
    ExitCode::from(run(cli))
}
