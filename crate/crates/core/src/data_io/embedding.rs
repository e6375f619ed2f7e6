use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{csv_reader, normalize_token, DataError};

/// Dense word vectors, stored row-major as `f32` to keep large tables small.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    /// Entries dropped at load time because their vector had zero norm.
    pub skipped_zero: usize,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, ..Default::default() }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub(crate) fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Inserts a normalized word. Zero-norm vectors are counted and skipped;
    /// a repeated word keeps its first vector. Returns whether it was stored.
    pub fn insert(&mut self, word: &str, vector: &[f32]) -> Result<bool, String> {
        if vector.len() != self.dimension {
            return Err(format!(
                "vector for '{word}' has {} components, expected {}",
                vector.len(),
                self.dimension
            ));
        }
        if vector.iter().all(|&v| v == 0.0) {
            self.skipped_zero += 1;
            return Ok(false);
        }
        let word = normalize_token(word);
        if word.is_empty() || self.index.contains_key(&word) {
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(true)
    }
}

/// Reads `word,v1,...,vD` with a header row. When `keep` is given only those
/// (normalized) words are stored.
pub fn parse_embeddings_csv(path: &Path, keep: Option<&HashSet<String>>) -> Result<EmbeddingTable, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut rdr = csv_reader(file);
    let width = rdr.headers()?.len();
    if width < 2 {
        return Err(DataError::format(1, "expected header word,v1,...,vD"));
    }
    let mut table = EmbeddingTable::new(width - 1);
    let mut buf = Vec::with_capacity(width - 1);
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row?;
        let word = row.get(0).unwrap_or("");
        if let Some(k) = keep {
            if !k.contains(&normalize_token(word)) {
                continue;
            }
        }
        buf.clear();
        for cell in row.iter().skip(1) {
            let v: f32 = cell
                .trim()
                .parse()
                .map_err(|_| DataError::format(line, format!("'{cell}' is not a number")))?;
            buf.push(v);
        }
        table.insert(word, &buf).map_err(|m| DataError::format(line, m))?;
    }
    Ok(table)
}

/// Reads the binary word2vec layout: an ASCII header `"<count> <dim>\n"`
/// followed by `count` entries of `<word> ` plus `dim` little-endian `f32`s,
/// each optionally followed by a newline.
pub fn parse_embeddings_word2vec(path: &Path, keep: Option<&HashSet<String>>) -> Result<EmbeddingTable, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_word2vec(BufReader::new(file), keep).map_err(|e| match e {
        Word2VecError::Io(err) => DataError::io(path, err),
        Word2VecError::Format(entry, m) => DataError::format(entry, m),
    })
}

enum Word2VecError {
    Io(std::io::Error),
    Format(u64, String),
}

impl From<std::io::Error> for Word2VecError {
    fn from(e: std::io::Error) -> Self {
        Word2VecError::Io(e)
    }
}

fn read_word2vec<R: BufRead>(mut r: R, keep: Option<&HashSet<String>>) -> Result<EmbeddingTable, Word2VecError> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let mut parts = header.split_whitespace().map(str::parse::<usize>);
    let (Some(Ok(count)), Some(Ok(dim))) = (parts.next(), parts.next()) else {
        return Err(Word2VecError::Format(0, format!("bad word2vec header '{}'", header.trim())));
    };
    let mut table = EmbeddingTable::new(dim);
    let mut raw = vec![0u8; dim * 4];
    let mut vec = vec![0f32; dim];
    for entry in 0..count {
        let mut word = Vec::new();
        r.read_until(b' ', &mut word)?;
        if word.last() != Some(&b' ') {
            return Err(Word2VecError::Format(entry as u64 + 1, "truncated entry".into()));
        }
        word.pop();
        while word.first() == Some(&b'\n') {
            word.remove(0);
        }
        r.read_exact(&mut raw)?;
        for (slot, chunk) in vec.iter_mut().zip(raw.chunks_exact(4)) {
            *slot = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        let word = String::from_utf8_lossy(&word).into_owned();
        if keep.is_some_and(|k| !k.contains(&normalize_token(&word))) {
            continue;
        }
        table
            .insert(&word, &vec)
            .map_err(|m| Word2VecError::Format(entry as u64 + 1, m))?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn csv_table_loads_and_skips_zero_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        std::fs::write(&path, "word,v1,v2\na,1,0\nB,1,0.01\nz,0,0\n").unwrap();
        let t = parse_embeddings_csv(&path, None).unwrap();
        assert_eq!(t.dimension(), 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b").unwrap(), &[1.0, 0.01]);
        assert_eq!(t.skipped_zero, 1);
    }

    #[test]
    fn ragged_csv_row_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        std::fs::write(&path, "word,v1,v2\na,1\n").unwrap();
        assert!(parse_embeddings_csv(&path, None).is_err());
    }

    #[test]
    fn word2vec_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "3 2").unwrap();
        for (w, v) in [("King", [0.5f32, -1.0]), ("queen", [0.25, 2.0]), ("pad", [3.0, 4.0])] {
            f.write_all(w.as_bytes()).unwrap();
            f.write_all(b" ").unwrap();
            for x in v {
                f.write_all(&x.to_le_bytes()).unwrap();
            }
            f.write_all(b"\n").unwrap();
        }
        drop(f);
        let keep: HashSet<String> = ["king".to_string(), "queen".to_string()].into();
        let t = parse_embeddings_word2vec(&path, Some(&keep)).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("king").unwrap(), &[0.5, -1.0]);
        assert_eq!(t.get("queen").unwrap(), &[0.25, 2.0]);
    }
}
