use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";

/// Precomputed vectors keyed by headline id (or `id/relation`), all of one dimension.
///
/// Binary layout: `EMB1`, `u32` dim, `u64` count, then per entry a `u16`
/// key length, the UTF-8 key and `dim` `f32` values, all little-endian.
/// JSON Lines `{"key": .., "values": [..]}` is accepted on read.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: IndexMap<String, EmbeddingVector>,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    key: String,
    values: Vec<f32>,
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], EmbedError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            EmbedError::Format(format!("truncated file: {what} at byte {}", self.pos))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N], EmbedError> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDim);
        }
        Ok(Self {
            dim,
            entries: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Inserts or replaces; entries keep first-insertion order.
    pub fn insert(&mut self, key: impl Into<String>, v: EmbeddingVector) -> Result<(), EmbedError> {
        if v.dim() != self.dim {
            return Err(EmbedError::Dim { expected: self.dim, got: v.dim() });
        }
        let key = key.into();
        if key.len() > usize::from(u16::MAX) {
            return Err(EmbedError::Format(format!("key of {} bytes exceeds u16 length", key.len())));
        }
        self.entries.insert(key, v);
        Ok(())
    }

    pub fn lookup(&self, key: &str) -> Result<&EmbeddingVector, EmbedError> {
        self.entries.get(key).ok_or_else(|| EmbedError::NotFound(key.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, EmbedError> {
        let buf = std::fs::read(path)?;
        if buf.starts_with(EMB1_MAGIC) {
            Self::decode_binary(&buf)
        } else {
            Self::decode_jsonl(&buf)
        }
    }

    pub fn decode_binary(buf: &[u8]) -> Result<Self, EmbedError> {
        let mut cur = Cursor { buf, pos: 0 };
        if &cur.array::<4>("magic")? != EMB1_MAGIC {
            return Err(EmbedError::Format("missing EMB1 magic".into()));
        }
        let dim = u32::from_le_bytes(cur.array("dimension")?) as usize;
        let count = u64::from_le_bytes(cur.array("count")?);
        let mut store = Self::new(dim)?;
        for i in 0..count {
            let klen = u16::from_le_bytes(cur.array("key length")?) as usize;
            let key = std::str::from_utf8(cur.take(klen, "key")?)
                .map_err(|e| EmbedError::Format(format!("entry {i}: key is not UTF-8: {e}")))?
                .to_string();
            let raw = cur.take(dim * 4, "vector")?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
                .collect();
            let v = EmbeddingVector::new(values).map_err(|e| EmbedError::Format(format!("entry {key:?}: {e}")))?;
            if store.contains(&key) {
                return Err(EmbedError::DuplicateKey(key));
            }
            store.insert(key, v)?;
        }
        if cur.pos != buf.len() {
            return Err(EmbedError::Format(format!("{} trailing bytes", buf.len() - cur.pos)));
        }
        Ok(store)
    }

    fn decode_jsonl(buf: &[u8]) -> Result<Self, EmbedError> {
        let text = std::str::from_utf8(buf).map_err(|e| EmbedError::Format(format!("neither EMB1 nor UTF-8: {e}")))?;
        let mut store: Option<Self> = None;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: JsonEntry = serde_json::from_str(line)
                .map_err(|e| EmbedError::Format(format!("line {}: {e}", idx + 1)))?;
            let v = EmbeddingVector::new(entry.values)
                .map_err(|e| EmbedError::Format(format!("line {}: {e}", idx + 1)))?;
            let store = match &mut store {
                Some(s) => s,
                None => store.insert(Self::new(v.dim())?),
            };
            if store.contains(&entry.key) {
                return Err(EmbedError::DuplicateKey(entry.key));
            }
            store.insert(entry.key, v)?;
        }
        store.ok_or_else(|| EmbedError::Format("empty JSON-lines store has no dimension".into()))
    }

    pub fn encode_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.len() * (2 + 16 + 4 * self.dim));
        out.extend_from_slice(EMB1_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (key, v) in &self.entries {
            out.extend_from_slice(&(key.len() as u16).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            for x in v.values() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Writes the binary format.
    pub fn write(&self, path: &Path) -> Result<(), EmbedError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&self.encode_binary())?;
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), EmbedError> {
        let mut w = BufWriter::new(File::create(path)?);
        for (key, v) in &self.entries {
            let e = JsonEntry {
                key: key.clone(),
                values: v.values().to_vec(),
            };
            serde_json::to_writer(&mut w, &e).map_err(|e| EmbedError::Format(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Serves vectors from a loaded store: by key first, then by the text itself.
#[derive(Debug, Clone)]
pub struct StoreProvider {
    store: EmbeddingStore,
}

impl StoreProvider {
    pub fn new(store: EmbeddingStore) -> Self {
        Self { store }
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }
}

impl EmbeddingProvider for StoreProvider {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        self.store.lookup(text).cloned()
    }

    fn encode_keyed(&self, key: &str, text: &str) -> Result<EmbeddingVector, EmbedError> {
        match self.store.lookup(key) {
            Ok(v) => Ok(v.clone()),
            Err(_) => self.store.lookup(text).cloned().map_err(|_| EmbedError::NotFound(key.to_string())),
        }
    }
}
