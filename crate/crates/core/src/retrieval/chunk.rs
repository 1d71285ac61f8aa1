use serde::{Deserialize, Serialize};

use super::RetrievalError;

pub const DEFAULT_CHUNK_SIZE: usize = 1200;
pub const DEFAULT_OVERLAP: usize = 200;

/// A contiguous excerpt of one source document. Offsets count characters,
/// not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentChunk {
    pub doc_id: String,
    pub chunk_index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkParams {
    pub chunk_size: usize,
    pub overlap: usize,
}

impl Default for ChunkParams {
    fn default() -> Self {
        Self {
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

impl ChunkParams {
    pub fn new(chunk_size: usize, overlap: usize) -> Result<Self, RetrievalError> {
        if chunk_size == 0 || overlap >= chunk_size {
            return Err(RetrievalError::InvalidChunkParams { chunk_size, overlap });
        }
        Ok(Self { chunk_size, overlap })
    }

    pub fn stride(&self) -> usize {
        self.chunk_size - self.overlap
    }
}

/// Splits `text` into fixed-size character windows advancing by
/// `chunk_size - overlap`. The last window always ends at the end of the text.
pub fn chunk_document(
    doc_id: &str,
    text: &str,
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<DocumentChunk>, RetrievalError> {
    let params = ChunkParams::new(chunk_size, overlap)?;
    Ok(chunk_with(doc_id, text, params))
}

pub(crate) fn chunk_with(doc_id: &str, text: &str, params: ChunkParams) -> Vec<DocumentChunk> {
    // Byte offset of every char boundary, including the end of the string.
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let len = bounds.len() - 1;
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + params.chunk_size).min(len);
        chunks.push(DocumentChunk {
            doc_id: doc_id.to_string(),
            chunk_index: chunks.len(),
            char_start: start,
            char_end: end,
            text: text[bounds[start]..bounds[end]].to_string(),
        });
        if end == len {
            break;
        }
        start += params.stride();
    }
    chunks
}

/// Inverse of chunking: concatenates chunk texts with the overlapping prefix of
/// every chunk after the first removed.
pub fn reassemble(chunks: &[DocumentChunk]) -> String {
    let mut out = String::new();
    let mut covered: usize = 0;
    for chunk in chunks {
        let skip = covered.saturating_sub(chunk.char_start);
        out.extend(chunk.text.chars().skip(skip));
        covered = chunk.char_end;
    }
    out
}
