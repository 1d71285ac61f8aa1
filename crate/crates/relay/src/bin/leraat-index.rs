use clap::Parser;
use leraat_relay::index_cli::{run, IndexCli};

fn main() {
    match run(IndexCli::parse()) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
        }
        Err(e) => {
            eprintln!("leraat-index: {e}");
            std::process::exit(1);
        }
    }
}
