use clap::Parser;

fn main() {
    let cli = toxsurf_cli::Cli::parse();
    if let Err(e) = toxsurf_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
