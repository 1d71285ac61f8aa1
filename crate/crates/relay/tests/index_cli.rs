mod common;

use clap::Parser;
use common::data;
use leraat_core::retrieval::load_index;
use leraat_relay::index_cli::{run, IndexCli};

fn cli(args: &[&str]) -> IndexCli {
    IndexCli::try_parse_from(std::iter::once("leraat-index").chain(args.iter().copied())).unwrap()
}

#[test]
fn ingest_then_search() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("idx.json");
    let corpus = data("corpus");
    let out = run(cli(&[
        "ingest", "--corpus", corpus.to_str().unwrap(), "--index", index.to_str().unwrap(),
        "--chunk-size", "400", "--overlap", "50",
    ]))
    .unwrap();
    assert!(out[0].starts_with("indexed "), "{out:?}");
    let loaded = load_index(&index).unwrap();
    assert_eq!(loaded.chunk_params().chunk_size, 400);

    let lines = run(cli(&["search", "--index", index.to_str().unwrap(), "--query", "fuel leak crossfeed", "--k", "3"])).unwrap();
    assert_eq!(lines.len(), 3);
    for (i, line) in lines.iter().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 4, "{line}");
        assert_eq!(cols[0], (i + 1).to_string());
        let (_, decimals) = cols[1].split_once('.').unwrap();
        assert_eq!(decimals.len(), 4);
        cols[3].parse::<usize>().unwrap();
    }
    assert!(lines[0].contains("fuel.md"), "{lines:?}");
}

#[test]
fn bad_parameters_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("idx.json");
    let corpus = data("corpus");
    assert!(run(cli(&[
        "ingest", "--corpus", corpus.to_str().unwrap(), "--index", index.to_str().unwrap(),
        "--chunk-size", "100", "--overlap", "100",
    ]))
    .is_err());
    assert!(!index.exists());
    assert!(IndexCli::try_parse_from(["leraat-index", "ingest", "--corpus", "x", "--index", "y", "--embedder", "magic"]).is_err());
    run(cli(&["ingest", "--corpus", corpus.to_str().unwrap(), "--index", index.to_str().unwrap()])).unwrap();
    assert!(run(cli(&["search", "--index", index.to_str().unwrap(), "--query", "x", "--k", "0"])).is_err());
}
