use clap::Parser;
use eegcn_core::cli::{run, Cli};

fn main() {
    let env = env_logger::Env::new().filter_or("EEGCN_LOG", "warn");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
