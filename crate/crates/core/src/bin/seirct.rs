use clap::Parser;
use seirct::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            // single-line, machine-parsable
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
