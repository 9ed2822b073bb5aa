use clap::Parser;
use tcvqite_cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
