//! File-backed stand-ins for search engines and page fetches.
//!
//! Layout under a fixture root:
//!
//! ```text
//! <root>/<engine>/<sha256(normalized query)>.json
//! <root>/<engine>/<page_file>            (raw page bodies, paths relative to the engine dir)
//! ```
//!
//! Each JSON file is `{"query": "...", "results": [{"rank", "url", "snippet", "page_file"?}]}`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::cache::sha256_hex;
use super::{Engine, Fetcher, SearchProvider, SearchResult};
use crate::error::{Error, Result};
use crate::querygen::Query;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureHit {
    pub rank: usize,
    pub url: String,
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub query: String,
    pub results: Vec<FixtureHit>,
}

/// File stem for a normalized query.
pub fn fixture_key(normalized_query: &str) -> String {
    sha256_hex(normalized_query.as_bytes())
}

impl FixtureFile {
    /// Writes the query file plus any page bodies; `pages` maps `page_file`
    /// names to raw HTML.
    pub fn write(&self, root: &Path, engine: Engine, pages: &[(String, String)]) -> Result<PathBuf> {
        let dir = root.join(engine.name());
        for (name, body) in pages {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(format!("{}.json", fixture_key(&self.query)));
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.line(), e.to_string()))
    }
}

/// Deterministic provider answering from `<root>/<engine>/`.
#[derive(Debug)]
pub struct FixtureProvider {
    dir: PathBuf,
    engine: Engine,
    searches: AtomicUsize,
}

impl FixtureProvider {
    pub fn new(root: impl AsRef<Path>, engine: Engine) -> Self {
        FixtureProvider {
            dir: root.as_ref().join(engine.name()),
            engine,
            searches: AtomicUsize::new(0),
        }
    }

    pub fn search_count(&self) -> usize {
        self.searches.load(Ordering::Relaxed)
    }
}

impl SearchProvider for FixtureProvider {
    fn engine(&self) -> Engine {
        self.engine
    }

    fn search(&self, query: &Query, max_hits: usize) -> Result<Vec<SearchResult>> {
        self.searches.fetch_add(1, Ordering::Relaxed);
        let normalized = query.normalized();
        let path = self.dir.join(format!("{}.json", fixture_key(&normalized)));
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = FixtureFile::read(&path)?;
        if file.query != normalized {
            return Err(Error::format(
                path.display().to_string(),
                0,
                format!("fixture is for `{}`, not `{normalized}`", file.query),
            ));
        }
        let mut hits = file.results;
        hits.sort_by_key(|h| h.rank);
        Ok(hits
            .into_iter()
            .take(max_hits)
            .map(|h| SearchResult {
                rank: h.rank,
                url: h.url,
                snippet: h.snippet,
                page_text: None,
                engine: self.engine,
            })
            .collect())
    }
}

/// Serves page bodies referenced by fixture files, by URL.
#[derive(Debug, Default)]
pub struct FixtureFetcher {
    pages: HashMap<String, PathBuf>,
    fetches: AtomicUsize,
}

impl FixtureFetcher {
    /// Indexes every `page_file` under all engine directories of `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let mut pages = HashMap::new();
        for engine in Engine::ALL {
            let dir = root.join(engine.name());
            let Ok(entries) = fs::read_dir(&dir) else {
                continue;
            };
            let mut paths: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for path in paths {
                for hit in FixtureFile::read(&path)?.results {
                    if let Some(page) = hit.page_file {
                        pages.entry(hit.url).or_insert_with(|| dir.join(page));
                    }
                }
            }
        }
        Ok(FixtureFetcher {
            pages,
            fetches: AtomicUsize::new(0),
        })
    }

    /// Number of fetch attempts served so far.
    pub fn fetch_count(&self) -> usize {
        self.fetches.load(Ordering::Relaxed)
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }
}

impl Fetcher for FixtureFetcher {
    fn fetch_raw(&self, url: &str) -> Result<String> {
        self.fetches.fetch_add(1, Ordering::Relaxed);
        let path = self
            .pages
            .get(url)
            .ok_or_else(|| Error::PageUnavailable(format!("{url}: no fixture page")))?;
        fs::read_to_string(path).map_err(|e| Error::PageUnavailable(format!("{url}: {e}")))
    }
}
