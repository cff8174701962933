use clap::Parser;

use povmc::cli::{self, Cli, Exit};

fn main() {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            // Usage errors are refusals; clap's own code 2 would read as
            // a heuristic answer.
            let code = if e.use_stderr() { Exit::Refused as i32 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli::init_threads().and_then(|()| cli::run(&args)) {
        Ok(exit) => exit,
        Err(e) => {
            eprintln!("error: {e}");
            Exit::Refused
        }
    };
    std::process::exit(code as i32);
}
