use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::chunk::{chunk_with, ChunkParams, DocumentChunk};
use super::embed::{cosine_similarity, EmbeddingProvider, EmbeddingVector};
use super::RetrievalError;

pub const DEFAULT_TOP_K: usize = 10;
pub const INDEX_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub chunk: DocumentChunk,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredChunk {
    pub chunk: DocumentChunk,
    pub score: f64,
}

/// A sealed, immutable set of embedded chunks. Built with [`IndexBuilder`] or
/// loaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    embedder_id: String,
    params: ChunkParams,
    entries: Vec<IndexEntry>,
}

/// Append-only staging area for an index.
#[derive(Debug)]
pub struct IndexBuilder {
    dim: Option<usize>,
    embedder_id: String,
    params: ChunkParams,
    entries: Vec<IndexEntry>,
}

impl IndexBuilder {
    pub fn new(embedder_id: impl Into<String>, params: ChunkParams) -> Self {
        Self {
            dim: None,
            embedder_id: embedder_id.into(),
            params,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, chunk: DocumentChunk, vector: EmbeddingVector) -> Result<(), RetrievalError> {
        let dim = *self.dim.get_or_insert(vector.dim());
        if vector.dim() != dim || dim == 0 {
            return Err(RetrievalError::DimensionMismatch {
                expected: dim,
                got: vector.dim(),
            });
        }
        self.entries.push(IndexEntry { chunk, vector });
        Ok(())
    }

    pub fn seal(self) -> VectorIndex {
        VectorIndex {
            dim: self.dim.unwrap_or(0),
            embedder_id: self.embedder_id,
            params: self.params,
            entries: self.entries,
        }
    }
}

impl VectorIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn chunk_params(&self) -> ChunkParams {
        self.params
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exhaustive ranking of all entries against an already-embedded query.
    pub fn search(&self, query: &EmbeddingVector, k: usize) -> Result<Vec<ScoredChunk>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        if self.entries.is_empty() {
            return Ok(Vec::new());
        }
        let mut scored = self
            .entries
            .iter()
            .map(|e| Ok((cosine_similarity(query, &e.vector)?, &e.chunk)))
            .collect::<Result<Vec<_>, RetrievalError>>()?;
        scored.sort_by(|(sa, ca), (sb, cb)| rank_order(*sa, ca, *sb, cb));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(score, chunk)| ScoredChunk {
                chunk: chunk.clone(),
                score,
            })
            .collect())
    }
}

/// Score descending, then (doc_id, chunk_index) ascending.
fn rank_order(sa: f64, a: &DocumentChunk, sb: f64, b: &DocumentChunk) -> Ordering {
    sb.total_cmp(&sa)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
        .then_with(|| a.chunk_index.cmp(&b.chunk_index))
}

/// Embeds `query` with `provider` and returns the `k` closest chunks.
pub fn query_top_k(
    index: &VectorIndex,
    query: &str,
    k: usize,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<ScoredChunk>, RetrievalError> {
    let provider_id = provider.embedder_id();
    if provider_id != index.embedder_id {
        return Err(RetrievalError::EmbedderMismatch {
            index: index.embedder_id.clone(),
            provider: provider_id,
        });
    }
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    let vector = provider
        .embed(&[query])?
        .pop()
        .ok_or(RetrievalError::EmptyInput)?;
    index.search(&vector, k)
}

fn is_corpus_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("txt") | Some("md")
    )
}

fn doc_id_for(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Chunks and embeds every `.txt`/`.md` file below `corpus_dir`.
///
/// All files are read before anything is embedded; a single unreadable file
/// fails the whole build.
pub fn build_index(
    corpus_dir: &Path,
    params: ChunkParams,
    provider: &dyn EmbeddingProvider,
) -> Result<VectorIndex, RetrievalError> {
    let mut documents = Vec::new();
    let mut unreadable: Vec<(PathBuf, String)> = Vec::new();
    for entry in WalkDir::new(corpus_dir).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| corpus_dir.to_path_buf());
                unreadable.push((path, e.to_string()));
                continue;
            }
        };
        if !entry.file_type().is_file() || !is_corpus_file(entry.path()) {
            continue;
        }
        match fs::read(entry.path()).map_err(|e| e.to_string()).and_then(|bytes| {
            String::from_utf8(bytes).map_err(|_| "not valid UTF-8".to_string())
        }) {
            Ok(text) => documents.push((doc_id_for(corpus_dir, entry.path()), text)),
            Err(e) => unreadable.push((entry.path().to_path_buf(), e)),
        }
    }
    if !unreadable.is_empty() {
        return Err(RetrievalError::UnreadableFiles(unreadable));
    }
    if documents.is_empty() {
        return Err(RetrievalError::EmptyCorpus(corpus_dir.to_path_buf()));
    }

    let chunks: Vec<DocumentChunk> = documents
        .iter()
        .flat_map(|(id, text)| chunk_with(id, text, params))
        .collect();
    let mut builder = IndexBuilder::new(provider.embedder_id(), params);
    if !chunks.is_empty() {
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        let vectors = provider.embed(&texts)?;
        for (chunk, vector) in chunks.into_iter().zip(vectors) {
            builder.push(chunk, vector)?;
        }
    }
    Ok(builder.seal())
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    version: u64,
    dim: usize,
    embedder_id: String,
    chunk_size: usize,
    overlap: usize,
    entries: Vec<EntryRecord>,
}

#[derive(Serialize, Deserialize)]
struct EntryRecord {
    doc_id: String,
    chunk_index: usize,
    char_start: usize,
    char_end: usize,
    text: String,
    vector: Vec<f32>,
}

impl From<&VectorIndex> for IndexFile {
    fn from(index: &VectorIndex) -> Self {
        IndexFile {
            version: INDEX_FORMAT_VERSION,
            dim: index.dim,
            embedder_id: index.embedder_id.clone(),
            chunk_size: index.params.chunk_size,
            overlap: index.params.overlap,
            entries: index
                .entries
                .iter()
                .map(|e| EntryRecord {
                    doc_id: e.chunk.doc_id.clone(),
                    chunk_index: e.chunk.chunk_index,
                    char_start: e.chunk.char_start,
                    char_end: e.chunk.char_end,
                    text: e.chunk.text.clone(),
                    vector: e.vector.values.clone(),
                })
                .collect(),
        }
    }
}

pub fn index_to_json(index: &VectorIndex) -> String {
    serde_json::to_string(&IndexFile::from(index)).expect("index serialization cannot fail")
}

pub fn index_from_json(bytes: &[u8]) -> Result<VectorIndex, RetrievalError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| RetrievalError::CorruptIndex(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| RetrievalError::CorruptIndex("missing or non-integer `version`".into()))?;
    if version != INDEX_FORMAT_VERSION {
        return Err(RetrievalError::UnsupportedVersion(version));
    }
    let file: IndexFile =
        serde_json::from_value(value).map_err(|e| RetrievalError::CorruptIndex(e.to_string()))?;
    let corrupt = |msg: String| Err(RetrievalError::CorruptIndex(msg));
    let params = ChunkParams::new(file.chunk_size, file.overlap)
        .map_err(|e| RetrievalError::CorruptIndex(e.to_string()))?;
    if file.embedder_id.is_empty() {
        return corrupt("empty embedder_id".into());
    }
    if file.dim == 0 && !file.entries.is_empty() {
        return corrupt("dim is 0 but entries are present".into());
    }
    let mut entries = Vec::with_capacity(file.entries.len());
    for (i, rec) in file.entries.into_iter().enumerate() {
        if rec.vector.len() != file.dim {
            return corrupt(format!("entry {i}: vector has {} values, expected {}", rec.vector.len(), file.dim));
        }
        if rec.vector.iter().any(|v| !v.is_finite()) {
            return corrupt(format!("entry {i}: non-finite vector value"));
        }
        if rec.char_start >= rec.char_end || rec.text.chars().count() != rec.char_end - rec.char_start {
            return corrupt(format!("entry {i}: chunk offsets do not match its text"));
        }
        entries.push(IndexEntry {
            chunk: DocumentChunk {
                doc_id: rec.doc_id,
                chunk_index: rec.chunk_index,
                char_start: rec.char_start,
                char_end: rec.char_end,
                text: rec.text,
            },
            vector: EmbeddingVector::new(rec.vector),
        });
    }
    Ok(VectorIndex {
        dim: file.dim,
        embedder_id: file.embedder_id,
        params,
        entries,
    })
}

/// Writes the index atomically (temp file + rename).
pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), RetrievalError> {
    let io = |e: std::io::Error| RetrievalError::Io(format!("{}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, index_to_json(index)).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn load_index(path: &Path) -> Result<VectorIndex, RetrievalError> {
    let bytes = fs::read(path).map_err(|e| RetrievalError::Io(format!("{}: {e}", path.display())))?;
    index_from_json(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{chunk_document, LocalHashEmbedder};

    fn tiny_index() -> VectorIndex {
        let e = LocalHashEmbedder::new(8);
        let mut b = IndexBuilder::new(e.embedder_id(), ChunkParams::new(20, 5).unwrap());
        for (i, text) in ["green hydraulic low pressure", "fuel imbalance", "engine fire"].iter().enumerate() {
            let chunk = DocumentChunk {
                doc_id: format!("doc{i}.md"),
                chunk_index: 0,
                char_start: 0,
                char_end: text.chars().count(),
                text: text.to_string(),
            };
            b.push(chunk, e.embed(&[text]).unwrap().remove(0)).unwrap();
        }
        b.seal()
    }

    #[test]
    fn builder_enforces_dimension() {
        let mut b = IndexBuilder::new("x", ChunkParams::default());
        let c = DocumentChunk { doc_id: "a".into(), chunk_index: 0, char_start: 0, char_end: 1, text: "a".into() };
        b.push(c.clone(), EmbeddingVector::new(vec![1.0, 0.0])).unwrap();
        assert!(matches!(
            b.push(c, EmbeddingVector::new(vec![1.0])),
            Err(RetrievalError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn k_larger_than_index_returns_everything() {
        let index = tiny_index();
        let e = LocalHashEmbedder::new(8);
        let hits = query_top_k(&index, "hydraulic", DEFAULT_TOP_K, &e).unwrap();
        assert_eq!(hits.len(), 3);
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
        assert_eq!(DEFAULT_TOP_K, 10);
    }

    #[test]
    fn ties_break_by_doc_then_chunk() {
        let mut b = IndexBuilder::new("t", ChunkParams::default());
        for (doc, idx) in [("b", 1), ("a", 2), ("b", 0), ("a", 0)] {
            let c = DocumentChunk { doc_id: doc.into(), chunk_index: idx, char_start: 0, char_end: 1, text: "x".into() };
            b.push(c, EmbeddingVector::new(vec![1.0, 1.0])).unwrap();
        }
        let hits = b.seal().search(&EmbeddingVector::new(vec![2.0, 2.0]), 10).unwrap();
        let order: Vec<(&str, usize)> = hits.iter().map(|h| (h.chunk.doc_id.as_str(), h.chunk.chunk_index)).collect();
        assert_eq!(order, vec![("a", 0), ("a", 2), ("b", 0), ("b", 1)]);
    }

    #[test]
    fn mismatched_embedder_is_rejected() {
        let index = tiny_index();
        let err = query_top_k(&index, "fuel", 3, &LocalHashEmbedder::new(16)).unwrap_err();
        assert!(matches!(err, RetrievalError::EmbedderMismatch { .. }));
        assert_eq!(query_top_k(&index, "fuel", 0, &LocalHashEmbedder::new(8)), Err(RetrievalError::InvalidK));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        let index = tiny_index();
        save_index(&index, &path).unwrap();
        assert_eq!(load_index(&path).unwrap(), index);
        assert!(!dir.path().join("index.json.tmp").exists());
    }

    #[test]
    fn unsupported_version_is_reported() {
        let json = index_to_json(&tiny_index()).replacen("\"version\":1", "\"version\":99", 1);
        assert_eq!(index_from_json(json.as_bytes()), Err(RetrievalError::UnsupportedVersion(99)));
    }

    #[test]
    fn every_truncation_is_rejected_or_identical() {
        let index = tiny_index();
        let json = index_to_json(&index);
        for cut in 0..json.len() {
            match index_from_json(&json.as_bytes()[..cut]) {
                Err(RetrievalError::CorruptIndex(_)) => {}
                Ok(loaded) => assert_eq!(loaded, index, "cut at {cut}"),
                Err(other) => panic!("unexpected error at {cut}: {other}"),
            }
        }
    }

    #[test]
    fn build_index_over_directory() {
        let dir = tempfile::tempdir().unwrap();
        let texts = [("a.md", "x".repeat(1000)), ("sub/b.txt", "y ".repeat(900)), ("c.md", "z".repeat(50))];
        for (name, text) in &texts {
            let path = dir.path().join(name);
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(path, text).unwrap();
        }
        fs::write(dir.path().join("ignored.pdf"), [0xffu8, 0x00]).unwrap();
        let params = ChunkParams::new(1000, 200).unwrap();
        let e = LocalHashEmbedder::new(32);
        let index = build_index(dir.path(), params, &e).unwrap();
        let expected: usize = texts
            .iter()
            .map(|(n, t)| chunk_document(n, t, 1000, 200).unwrap().len())
            .sum();
        assert_eq!(index.len(), expected);
        assert_eq!(index.embedder_id(), e.embedder_id());
        assert!(index.entries().iter().any(|en| en.chunk.doc_id == "sub/b.txt"));
    }

    #[test]
    fn unreadable_file_fails_the_build() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("good.md"), "fine").unwrap();
        fs::write(dir.path().join("bad.md"), [0xc3u8, 0x28]).unwrap();
        let err = build_index(dir.path(), ChunkParams::default(), &LocalHashEmbedder::default()).unwrap_err();
        match err {
            RetrievalError::UnreadableFiles(files) => {
                assert_eq!(files.len(), 1);
                assert!(files[0].0.ends_with("bad.md"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("notes.pdf"), "x").unwrap();
        assert!(matches!(
            build_index(dir.path(), ChunkParams::default(), &LocalHashEmbedder::default()),
            Err(RetrievalError::EmptyCorpus(_))
        ));
    }
}
