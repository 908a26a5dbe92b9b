use clap::Parser;

fn main() {
    let cli = cheatvote_cli::Cli::parse();
    if let Err(e) = cheatvote_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
