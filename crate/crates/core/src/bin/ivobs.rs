use clap::Parser;
use interval_observer::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
