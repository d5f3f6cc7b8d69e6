use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = edgecert_cli::args::Cli::parse();
    if let Err(e) = edgecert_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(edgecert_cli::exit_code(&e));
    }
}
