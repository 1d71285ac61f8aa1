use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use leraat_relay::{chat_client_for, start, Resources, ServerConfig};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "leraat-relay", version, about = "Pilot advisory relay server")]
struct Cli {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Rebuild the manual index from the corpus even if the index file exists.
    #[arg(long)]
    build_index: bool,
}

fn fail(e: impl std::fmt::Display) -> ! {
    eprintln!("leraat-relay: {e}");
    std::process::exit(1);
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("LERAAT_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    let config = ServerConfig::load(&cli.config).unwrap_or_else(|e| fail(e));
    // Blocking HTTP clients must be created outside the async runtime.
    let resources = Resources::prepare(&config, cli.build_index).unwrap_or_else(|e| fail(e));
    let runtime = tokio::runtime::Runtime::new().unwrap_or_else(|e| fail(e));
    let result: Result<(), String> = runtime.block_on(async {
        let client = chat_client_for(&config).map_err(|e| e.to_string())?;
        let relay = start(&config, Arc::new(resources), client)
            .await
            .map_err(|e| e.to_string())?;
        tokio::select! {
            r = relay.wait() => r.map_err(|e| format!("server stopped: {e}")),
            _ = tokio::signal::ctrl_c() => Ok(()),
        }
    });
    match result {
        // Exit without unwinding the runtime; blocking clients held by the
        // server tasks must not be dropped inside it.
        Ok(()) => std::process::exit(0),
        Err(e) => fail(e),
    }
}
