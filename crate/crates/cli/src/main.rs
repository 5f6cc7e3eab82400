use clap::Parser;

use ifs_recur_cli::cli::Cli;

fn main() {
    let cli = Cli::parse();
    let common = cli.common;
    let (kind, flags) = cli.command.into_overrides();
    std::process::exit(ifs_recur_cli::run(kind, common, flags));
}
