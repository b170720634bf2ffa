use clap::Parser;
use pmrsim::cli::{main_with, Args};

fn main() {
    std::process::exit(main_with(&Args::parse()));
}
