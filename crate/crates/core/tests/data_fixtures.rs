use std::path::PathBuf;

use leraat_core::airports::{
    great_circle_nm, load_airport_db, nearby_airports, parse_metar, AlternateParams,
    FileMetarSource, LatLon, MetarSource,
};
use leraat_core::retrieval::{
    build_index, chunk_document, load_index, query_top_k, save_index, ChunkParams,
    LocalHashEmbedder, DEFAULT_TOP_K,
};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

#[test]
fn bundled_airport_db_loads() {
    let db = load_airport_db(&data("airports.csv")).unwrap();
    assert!(db.len() > 50);
    let ksea = db.get("KSEA").unwrap();
    assert_eq!(ksea.runways.len(), 3);
    assert_eq!(ksea.longest_runway_ft(), 11901.0);
    assert_eq!(db.without_runways().map(|a| a.ident.as_str()).collect::<Vec<_>>(), vec!["WA11"]);
}

#[test]
fn long_runway_alternates_around_seattle() {
    let db = load_airport_db(&data("airports.csv")).unwrap();
    let ksea = db.get("KSEA").unwrap().position();
    let got = nearby_airports(&db, ksea, 200.0, 9000.0, 10);
    let mut oracle: Vec<(f64, String)> = db
        .iter()
        .filter(|a| a.runways.iter().any(|r| r.length_ft >= 9000.0))
        .map(|a| (great_circle_nm(ksea, a.position()).0, a.ident.clone()))
        .filter(|(d, _)| *d <= 200.0)
        .collect();
    oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let idents: Vec<&str> = got.iter().map(|c| c.airport.ident.as_str()).collect();
    assert_eq!(idents, oracle.iter().map(|(_, i)| i.as_str()).collect::<Vec<_>>());
    assert_eq!(idents[0], "KSEA");
    assert!(idents.contains(&"KBFI"));
    assert!(!idents.contains(&"KRNT"));
    assert!(!idents.contains(&"KPWT"));
    assert!(got.iter().all(|c| c.longest_runway_ft >= 9000.0));

    let nearest = nearby_airports(&db, ksea, 200.0, 9000.0, 1);
    assert_eq!(nearest.len(), 1);
    assert_eq!(nearest[0].airport.ident, "KSEA");
}

#[test]
fn open_ocean_has_no_alternates() {
    let db = load_airport_db(&data("airports.csv")).unwrap();
    let p = AlternateParams::default();
    assert!(nearby_airports(&db, LatLon::new(-40.0, -140.0), 0.1, p.min_runway_ft, p.max_results).is_empty());
}

#[test]
fn bundled_metars_decode_and_reconstruct() {
    let text = std::fs::read_to_string(data("metar.txt")).unwrap();
    let mut n = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
        let m = parse_metar(line).unwrap();
        assert_eq!(m.reconstruct(), line.split_whitespace().collect::<Vec<_>>().join(" "));
        assert!(m.wind.is_some(), "{line}");
        assert!(m.altimeter_inhg.is_some(), "{line}");
        n += 1;
    }
    assert!(n >= 40);
    let src = FileMetarSource::load(&data("metar.txt")).unwrap();
    let sea = parse_metar(&src.fetch(&["KSEA"])["KSEA"]).unwrap();
    assert_eq!(sea.ceiling_ft, Some(600));
    assert_eq!(sea.visibility_sm, Some(2.0));
}

#[test]
fn corpus_index_counts_match_per_file_chunking() {
    let dir = tempfile::tempdir().unwrap();
    let texts = [
        ("a.md", "x".repeat(1000)),
        ("b.txt", "hydraulic ".repeat(250)),
        ("sub/c.md", "fuel leak check ".repeat(40)),
    ];
    for (name, body) in &texts {
        let path = dir.path().join(name);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, body).unwrap();
    }
    std::fs::write(dir.path().join("notes.pdf"), "ignored").unwrap();
    let params = ChunkParams::new(1000, 200).unwrap();
    let index = build_index(dir.path(), params, &LocalHashEmbedder::default()).unwrap();
    let expected: usize = texts
        .iter()
        .map(|(name, body)| chunk_document(name, body, 1000, 200).unwrap().len())
        .sum();
    assert_eq!(index.len(), expected);
    assert!(index.entries().iter().any(|e| e.chunk.doc_id == "sub/c.md"));
}

#[test]
fn bundled_corpus_builds_deterministically() {
    let provider = LocalHashEmbedder::default();
    let out = tempfile::tempdir().unwrap();
    let (p1, p2) = (out.path().join("one.json"), out.path().join("two.json"));
    for p in [&p1, &p2] {
        let index = build_index(&data("corpus"), ChunkParams::default(), &provider).unwrap();
        save_index(&index, p).unwrap();
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

    let index = load_index(&p1).unwrap();
    let hits = query_top_k(&index, "HYD G SYS LO PR\nHYD Y SYS LO PR", DEFAULT_TOP_K, &provider).unwrap();
    assert_eq!(hits.len(), DEFAULT_TOP_K.min(index.len()));
    assert_eq!(hits[0].chunk.doc_id, "hydraulics.md");
}
