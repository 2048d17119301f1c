use clap::Parser;

fn main() {
    let cli = fiberlink_cli::Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = fiberlink_cli::run(cli) {
        eprintln!("fiberlink: {e}");
        std::process::exit(e.exit_code());
    }
}
