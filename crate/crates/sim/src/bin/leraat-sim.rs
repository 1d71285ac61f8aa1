use std::path::PathBuf;

use clap::Parser;
use leraat_sim::{load_scenario, play};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "leraat-sim", version, about = "Replay a telemetry scenario against the relay")]
struct Cli {
    /// Newline-delimited scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Relay base URL, e.g. http://127.0.0.1:8080
    #[arg(long)]
    target: String,
    /// Playback speed multiplier.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Restart from the first frame after the last one, until interrupted.
    #[arg(long = "loop")]
    looped: bool,
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("LERAAT_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cli = Cli::parse();
    let scenario = match load_scenario(&cli.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("leraat-sim: {e}");
            std::process::exit(1);
        }
    };
    println!(
        "playing {} ({} frames, {:.1} s at rate {})",
        scenario.metadata.name,
        scenario.frames.len(),
        scenario.duration_ms() as f64 / 1000.0,
        cli.rate
    );
    match play(&scenario, &cli.target, cli.rate, cli.looped).await {
        Ok(s) => println!(
            "frames_sent={} rejections={} elapsed={:.3}s",
            s.frames_sent,
            s.rejections,
            s.elapsed.as_secs_f64()
        ),
        Err(e) => {
            eprintln!("leraat-sim: {e}");
            std::process::exit(2);
        }
    }
}
