use clap::Parser;
use nhspec::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
