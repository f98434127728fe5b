//! File-backed stores: append-oriented JSON-lines with in-memory indexes.
//!
//! Appends are the journal of record; `compact` rewrites a store to one
//! line per live key. Flat files keep every run diffable and let the test
//! suite inspect state without a database.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{ProductRecord, UpsertKind};
use crate::crawler::{CrawledPage, PageSink};
use crate::text::normalize_name;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("store {path} line {line}: {source}")]
    Corrupt {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Maps normalized name variants onto one canonical normalized name, so
/// "ibm t61" and "lenovo thinkpad t61" can count as one product when the
/// operator says so. Empty by default.
#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    map: HashMap<String, String>,
}

impl AliasTable {
    pub fn new(map: HashMap<String, String>) -> Self {
        AliasTable {
            map: map
                .into_iter()
                .map(|(k, v)| (normalize_name(&k), normalize_name(&v)))
                .collect(),
        }
    }

    pub fn canonical(&self, normalized_name: &str) -> String {
        self.map
            .get(normalized_name)
            .cloned()
            .unwrap_or_else(|| normalized_name.to_string())
    }
}

type ProductKey = (String, String, String); // (site, url, canonical name)

/// Product observations keyed by (site, url, canonical normalized name).
/// Appends journal every observation; the live view keeps the newest
/// `extracted_at` per key (append order breaks exact ties).
pub struct ProductStore {
    path: PathBuf,
    aliases: AliasTable,
    live: HashMap<ProductKey, ProductRecord>,
}

impl ProductStore {
    pub fn open(path: impl Into<PathBuf>, aliases: AliasTable) -> Result<Self, StoreError> {
        let path = path.into();
        let mut store = ProductStore {
            path,
            aliases,
            live: HashMap::new(),
        };
        if store.path.exists() {
            let file = File::open(&store.path).map_err(|e| io_err(&store.path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| io_err(&store.path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: ProductRecord =
                    serde_json::from_str(&line).map_err(|source| StoreError::Corrupt {
                        path: store.path.display().to_string(),
                        line: i + 1,
                        source,
                    })?;
                let key = store.key_of(&record);
                store.apply(key, record);
            }
        }
        Ok(store)
    }

    fn key_of(&self, record: &ProductRecord) -> ProductKey {
        (
            record.site.clone(),
            record.url.clone(),
            self.aliases.canonical(&normalize_name(&record.name)),
        )
    }

    fn apply(&mut self, key: ProductKey, record: ProductRecord) -> UpsertKind {
        match self.live.get(&key) {
            None => {
                self.live.insert(key, record);
                UpsertKind::Inserted
            }
            Some(existing) => {
                if record.extracted_at >= existing.extracted_at {
                    self.live.insert(key, record);
                }
                UpsertKind::Updated
            }
        }
    }

    /// Journals the record and folds it into the live view. `name_key` is
    /// the canonical normalized name the caller derived.
    pub fn upsert(
        &mut self,
        record: ProductRecord,
        name_key: &str,
    ) -> Result<UpsertKind, StoreError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| io_err(&self.path, e))?;
        let line = serde_json::to_string(&record).expect("records always serialize");
        writeln!(file, "{line}").map_err(|e| io_err(&self.path, e))?;
        let key = (
            record.site.clone(),
            record.url.clone(),
            name_key.to_string(),
        );
        Ok(self.apply(key, record))
    }

    /// Live records, sorted by key for stable output.
    pub fn records(&self) -> Vec<ProductRecord> {
        let mut entries: Vec<(&ProductKey, &ProductRecord)> = self.live.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries.into_iter().map(|(_, r)| r.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Rewrites the file to exactly the live view (one line per key),
    /// atomically via a sibling temp file.
    pub fn compact(&self) -> Result<(), StoreError> {
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
            for record in self.records() {
                let line = serde_json::to_string(&record).expect("records always serialize");
                writeln!(file, "{line}").map_err(|e| io_err(&tmp, e))?;
            }
            file.sync_all().map_err(|e| io_err(&tmp, e))?;
        }
        fs::rename(&tmp, &self.path).map_err(|e| io_err(&self.path, e))?;
        Ok(())
    }
}

/// The growing list of known product names: one normalized name per line,
/// no duplicates. Every extraction feeds new names back here, widening the
/// next discovery round.
pub struct SeedStore {
    path: PathBuf,
    names: Vec<String>,
    seen: HashSet<String>,
}

impl SeedStore {
    /// Opens (or primes) the store; a missing file is an empty store.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let mut store = SeedStore {
            path,
            names: Vec::new(),
            seen: HashSet::new(),
        };
        if store.path.exists() {
            let file = File::open(&store.path).map_err(|e| io_err(&store.path, e))?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| io_err(&store.path, e))?;
                let name = normalize_name(&line);
                if !name.is_empty() && store.seen.insert(name.clone()) {
                    store.names.push(name);
                }
            }
        }
        Ok(store)
    }

    /// Adds a name if unseen; returns whether it was new. Blank names are
    /// ignored.
    pub fn add(&mut self, name: &str) -> Result<bool, StoreError> {
        let name = normalize_name(name);
        if name.is_empty() || !self.seen.insert(name.clone()) {
            return Ok(false);
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| io_err(&self.path, e))?;
        writeln!(file, "{name}").map_err(|e| io_err(&self.path, e))?;
        self.names.push(name);
        Ok(true)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// One crawled page on disk: body under a content-addressed file name,
/// metadata in the index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PageIndexRow {
    pub url: String,
    pub site: String,
    pub depth: usize,
    /// Body file name relative to the store directory.
    pub file: String,
    pub charset: Option<String>,
    pub fetched_at: DateTime<Utc>,
}

/// Crawl output: page bodies as files named by URL hash, plus a JSON-lines
/// index.
pub struct PageStore {
    dir: PathBuf,
    index: PathBuf,
}

impl PageStore {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let index = dir.join("index.jsonl");
        Ok(PageStore { dir, index })
    }

    pub fn append(&self, page: &CrawledPage) -> std::io::Result<()> {
        let digest = Sha256::digest(page.url.as_bytes());
        let mut file = String::with_capacity(digest.len() * 2 + 5);
        for byte in digest {
            file.push_str(&format!("{byte:02x}"));
        }
        file.push_str(".html");
        fs::write(self.dir.join(&file), &page.body)?;
        let row = PageIndexRow {
            url: page.url.clone(),
            site: page.site.clone(),
            depth: page.depth,
            file,
            charset: page.charset.clone(),
            fetched_at: page.fetched_at,
        };
        let mut index = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.index)?;
        writeln!(index, "{}", serde_json::to_string(&row).expect("rows serialize"))?;
        Ok(())
    }

    pub fn rows(&self) -> Result<Vec<PageIndexRow>, StoreError> {
        let mut rows = Vec::new();
        if !self.index.exists() {
            return Ok(rows);
        }
        let file = File::open(&self.index).map_err(|e| io_err(&self.index, e))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_err(&self.index, e))?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push(
                serde_json::from_str(&line).map_err(|source| StoreError::Corrupt {
                    path: self.index.display().to_string(),
                    line: i + 1,
                    source,
                })?,
            );
        }
        Ok(rows)
    }

    pub fn read_body(&self, row: &PageIndexRow) -> Result<Vec<u8>, StoreError> {
        let path = self.dir.join(&row.file);
        fs::read(&path).map_err(|e| io_err(&path, e))
    }
}

impl PageSink for std::sync::Mutex<PageStore> {
    fn accept(&self, page: CrawledPage) -> std::io::Result<()> {
        self.lock().expect("page store lock").append(&page)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{upsert, Currency};
    use chrono::TimeZone;

    fn record(site: &str, url: &str, name: &str, amount: u64, at_secs: i64) -> ProductRecord {
        ProductRecord {
            name: name.to_string(),
            amount,
            currency: Currency::VND,
            raw_price: format!("VNĐ {amount}"),
            url: url.to_string(),
            site: site.to_string(),
            extracted_at: Utc.timestamp_opt(at_secs, 0).unwrap(),
        }
    }

    #[test]
    fn upsert_inserts_updates_and_feeds_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let mut products =
            ProductStore::open(dir.path().join("products.jsonl"), AliasTable::default()).unwrap();
        let mut seeds = SeedStore::open(dir.path().join("seeds.txt")).unwrap();
        let aliases = AliasTable::default();

        let first = upsert(
            record("a.vn", "http://a.vn/1", "Nokia 1200", 540_000, 100),
            &mut products,
            &mut seeds,
            &aliases,
        )
        .unwrap();
        assert_eq!(first.product, UpsertKind::Inserted);
        assert!(first.seed_added);

        // price change on the same key: updated, seed already known
        let second = upsert(
            record("a.vn", "http://a.vn/1", "Nokia  1200", 520_000, 200),
            &mut products,
            &mut seeds,
            &aliases,
        )
        .unwrap();
        assert_eq!(second.product, UpsertKind::Updated);
        assert!(!second.seed_added);
        assert_eq!(products.len(), 1);
        assert_eq!(products.records()[0].amount, 520_000);

        // different color, different product
        let third = upsert(
            record("a.vn", "http://a.vn/1", "Nokia 1200 black", 540_000, 200),
            &mut products,
            &mut seeds,
            &aliases,
        )
        .unwrap();
        assert_eq!(third.product, UpsertKind::Inserted);
        assert!(third.seed_added);
        assert_eq!(products.len(), 2);
        assert_eq!(seeds.names(), ["nokia 1200", "nokia 1200 black"]);
    }

    #[test]
    fn stale_timestamp_does_not_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let mut products =
            ProductStore::open(dir.path().join("p.jsonl"), AliasTable::default()).unwrap();
        products
            .upsert(record("a.vn", "http://a.vn/1", "x", 100, 500), "x")
            .unwrap();
        products
            .upsert(record("a.vn", "http://a.vn/1", "x", 50, 400), "x")
            .unwrap();
        assert_eq!(products.records()[0].amount, 100);
    }

    #[test]
    fn reopen_and_compact_preserve_the_live_view() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("products.jsonl");
        {
            let mut products = ProductStore::open(&path, AliasTable::default()).unwrap();
            for (amount, at) in [(1u64, 10i64), (2, 20), (3, 30)] {
                products
                    .upsert(record("a.vn", "http://a.vn/1", "x", amount, at), "x")
                    .unwrap();
            }
            products
                .upsert(record("b.vn", "http://b.vn/2", "y", 9, 10), "y")
                .unwrap();
            assert_eq!(products.len(), 2);
        }
        // journal holds 4 lines; reopening folds them back to 2 keys
        let reopened = ProductStore::open(&path, AliasTable::default()).unwrap();
        assert_eq!(reopened.len(), 2);
        assert_eq!(reopened.records()[0].amount, 3);

        reopened.compact().unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        let again = ProductStore::open(&path, AliasTable::default()).unwrap();
        assert_eq!(again.records(), reopened.records());
    }

    #[test]
    fn aliases_merge_product_keys() {
        let aliases = AliasTable::new(HashMap::from([(
            "IBM T61".to_string(),
            "Lenovo ThinkPad T61".to_string(),
        )]));
        let dir = tempfile::tempdir().unwrap();
        let mut products =
            ProductStore::open(dir.path().join("p.jsonl"), aliases.clone()).unwrap();
        let mut seeds = SeedStore::open(dir.path().join("s.txt")).unwrap();
        upsert(
            record("a.vn", "http://a.vn/1", "Lenovo ThinkPad T61", 100, 10),
            &mut products,
            &mut seeds,
            &aliases,
        )
        .unwrap();
        let effect = upsert(
            record("a.vn", "http://a.vn/1", "IBM T61", 90, 20),
            &mut products,
            &mut seeds,
            &aliases,
        )
        .unwrap();
        assert_eq!(effect.product, UpsertKind::Updated);
        assert!(!effect.seed_added);
        assert_eq!(products.len(), 1);
        assert_eq!(seeds.len(), 1);
    }

    #[test]
    fn seed_store_dedupes_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seeds.txt");
        {
            let mut seeds = SeedStore::open(&path).unwrap();
            assert!(seeds.add("Nokia 1200").unwrap());
            assert!(!seeds.add("  nokia   1200 ").unwrap());
            assert!(seeds.add("iPad 2").unwrap());
            assert!(!seeds.add("   ").unwrap());
        }
        let seeds = SeedStore::open(&path).unwrap();
        assert_eq!(seeds.names(), ["nokia 1200", "ipad 2"]);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "nokia 1200\nipad 2\n");
    }

    #[test]
    fn page_store_roundtrips_pages() {
        let dir = tempfile::tempdir().unwrap();
        let store = PageStore::create(dir.path().join("pages")).unwrap();
        let page = CrawledPage {
            url: "http://a.vn/1.html".to_string(),
            site: "a.vn".to_string(),
            depth: 1,
            body: b"<html><body>x</body></html>".to_vec(),
            charset: Some("utf-8".to_string()),
            fetched_at: Utc.timestamp_opt(1000, 0).unwrap(),
        };
        store.append(&page).unwrap();
        let rows = store.rows().unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].url, page.url);
        assert_eq!(store.read_body(&rows[0]).unwrap(), page.body);
    }
}
