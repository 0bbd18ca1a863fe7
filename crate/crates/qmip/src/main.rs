use std::io::Write;

use clap::Parser;
use qmip::commands::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(&cli, std::env::args().collect()) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            for line in out.lines {
                // A closed pipe is not an error of the command.
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
