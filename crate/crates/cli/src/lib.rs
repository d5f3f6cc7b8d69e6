//! Commands behind the `edgecert` binary and the session service.

pub mod args;
pub mod commands;
pub mod service;

use args::{Cli, Command};

/// Process exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use edgecert::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(E::MalformedData(_) | E::Csv(_) | E::TooFewSamples { .. } | E::LengthMismatch { .. }) => 2,
        Some(E::InvalidConfig(_)) => 3,
        Some(E::Abandoned) => 4,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Audit(a) => commands::audit(&a),
        Command::Iterate(a) => commands::iterate(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Stress(a) => commands::stress(&a),
        Command::Serve(a) => {
            let addr = format!("{}:{}", a.host, a.port).parse()?;
            tokio::runtime::Runtime::new()?.block_on(service::serve(addr, a.state_dir))
        }
    }
}
