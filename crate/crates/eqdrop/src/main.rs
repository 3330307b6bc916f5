use clap::Parser;

use eqdrop::cli::{self, Cli};
use eqdrop::ExitCode;

fn main() {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { ExitCode::Usage as i32 } else { ExitCode::Ok as i32 });
        }
    };
    let code = match cli::run(&parsed) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code as i32);
}
