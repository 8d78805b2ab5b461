use clap::Parser;

fn main() {
    let cli = qholo::cli::Cli::parse();
    if let Err(e) = qholo::cli::run(cli) {
        eprintln!("qholo: {e}");
        std::process::exit(qholo::cli::exit_code(&e));
    }
}
