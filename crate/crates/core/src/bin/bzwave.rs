use clap::Parser;

fn main() {
    std::process::exit(bzwave::cli::run(bzwave::cli::Cli::parse()));
}
