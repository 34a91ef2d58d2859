use clap::Parser;

use hwfuzz::{run, Cli, EXIT_ERROR};

fn main() {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}
