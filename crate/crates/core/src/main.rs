use antjam::cli::{run_command, Cli};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run_command(&cli) {
        eprintln!("antjam: {e}");
        std::process::exit(e.exit_code());
    }
}
