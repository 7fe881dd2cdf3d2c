use clap::Parser;
use polyhdiv_cli::{configure_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    configure_threads();
    let code = run(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
