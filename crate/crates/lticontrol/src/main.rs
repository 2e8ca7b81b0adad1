use clap::Parser;
use lticontrol::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
