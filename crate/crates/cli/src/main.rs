use std::io::Write;

use clap::Parser;

fn main() {
    let cli = pimsner_cli::Cli::parse();
    let (out, err, code) = pimsner_cli::main_with(&cli);
    // a closed pipe on stdout is not worth a panic
    let _ = std::io::stdout().write_all(out.as_bytes());
    let _ = std::io::stderr().write_all(err.as_bytes());
    std::process::exit(code);
}
