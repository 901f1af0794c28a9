use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{HeadlineRecord, LanguageCode};
use crate::jsonl::{read_jsonl, JsonlError};

use super::{ProcessedKnowledge, RelationType};

/// Identifies one acquisition: which headline (and its exact text), which
/// commonsense model, which rendering template.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub headline_id: String,
    pub headline_hash: String,
    pub model_id: String,
    pub template_version: u32,
}

impl CacheKey {
    pub fn new(headline: &HeadlineRecord, model_id: &str, template_version: u32) -> Self {
        Self {
            headline_id: headline.id.clone(),
            headline_hash: text_hash(&headline.text),
            model_id: model_id.to_string(),
            template_version,
        }
    }
}

pub fn text_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Concurrent reads, serialized writes.
pub trait KnowledgeCache: Send + Sync {
    fn get(&self, key: &CacheKey) -> Option<ProcessedKnowledge>;
    fn put(&self, key: CacheKey, value: ProcessedKnowledge) -> io::Result<()>;
}

#[derive(Debug, Default)]
pub struct MemoryCache {
    map: RwLock<HashMap<CacheKey, ProcessedKnowledge>>,
}

impl MemoryCache {
    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl KnowledgeCache for MemoryCache {
    fn get(&self, key: &CacheKey) -> Option<ProcessedKnowledge> {
        self.map.read().expect("cache lock").get(key).cloned()
    }

    fn put(&self, key: CacheKey, value: ProcessedKnowledge) -> io::Result<()> {
        self.map.write().expect("cache lock").insert(key, value);
        Ok(())
    }
}

/// One line of the knowledge store file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub headline_id: String,
    pub language: LanguageCode,
    pub text: String,
    pub model_id: String,
    pub template_version: u32,
    #[serde(default)]
    pub headline_hash: String,
    /// Per-relation clauses; absent in stores that only carry the paragraph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relations: Option<[String; RelationType::COUNT]>,
}

impl KnowledgeEntry {
    pub fn new(key: &CacheKey, pk: &ProcessedKnowledge) -> Self {
        Self {
            headline_id: pk.headline_id.clone(),
            language: pk.language,
            text: pk.text.clone(),
            model_id: key.model_id.clone(),
            template_version: key.template_version,
            headline_hash: key.headline_hash.clone(),
            relations: Some(pk.relations.clone()),
        }
    }

    pub fn key(&self) -> CacheKey {
        CacheKey {
            headline_id: self.headline_id.clone(),
            headline_hash: self.headline_hash.clone(),
            model_id: self.model_id.clone(),
            template_version: self.template_version,
        }
    }

    pub fn knowledge(&self) -> ProcessedKnowledge {
        ProcessedKnowledge {
            headline_id: self.headline_id.clone(),
            language: self.language,
            text: self.text.clone(),
            relations: self.relations.clone().unwrap_or_default(),
        }
    }
}

/// File-backed cache: the JSON Lines knowledge store. Every `put` is appended
/// and flushed immediately so an interrupted batch resumes where it stopped.
#[derive(Debug)]
pub struct JsonlKnowledgeStore {
    path: PathBuf,
    entries: RwLock<HashMap<CacheKey, KnowledgeEntry>>,
    writer: Mutex<BufWriter<File>>,
}

impl JsonlKnowledgeStore {
    pub fn open(path: &Path) -> Result<Self, JsonlError> {
        let existing: Vec<KnowledgeEntry> = if path.exists() { read_jsonl(path)? } else { Vec::new() };
        let entries = existing.into_iter().map(|e| (e.key(), e)).collect();
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            entries: RwLock::new(entries),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Latest entry for a headline id, regardless of model or template.
    pub fn by_headline(&self) -> HashMap<String, KnowledgeEntry> {
        self.entries
            .read()
            .expect("store lock")
            .values()
            .map(|e| (e.headline_id.clone(), e.clone()))
            .collect()
    }

    /// Rewrites the file with exactly `keys`, in that order, dropping stale
    /// entries and making the file independent of completion order.
    pub fn compact(&self, keys: &[CacheKey]) -> io::Result<()> {
        let entries = self.entries.read().expect("store lock");
        let mut writer = self.writer.lock().expect("store writer");
        writer.flush()?;
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            for key in keys {
                if let Some(e) = entries.get(key) {
                    serde_json::to_writer(&mut out, e)?;
                    out.write_all(b"\n")?;
                }
            }
            out.flush()?;
        }
        std::fs::rename(&tmp, &self.path)?;
        *writer = BufWriter::new(OpenOptions::new().append(true).open(&self.path)?);
        Ok(())
    }
}

impl KnowledgeCache for JsonlKnowledgeStore {
    fn get(&self, key: &CacheKey) -> Option<ProcessedKnowledge> {
        self.entries.read().expect("store lock").get(key).map(KnowledgeEntry::knowledge)
    }

    fn put(&self, key: CacheKey, value: ProcessedKnowledge) -> io::Result<()> {
        let entry = KnowledgeEntry::new(&key, &value);
        {
            let mut writer = self.writer.lock().expect("store writer");
            serde_json::to_writer(&mut *writer, &entry)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        self.entries.write().expect("store lock").insert(key, entry);
        Ok(())
    }
}

/// Loads a knowledge store file into a headline-id map (read-only use).
pub fn load_knowledge_store(path: &Path) -> Result<HashMap<String, KnowledgeEntry>, JsonlError> {
    Ok(read_jsonl::<KnowledgeEntry>(path)?
        .into_iter()
        .map(|e| (e.headline_id.clone(), e))
        .collect())
}
