//! Evidence retrieval: search providers, domain filtering, the query
//! relaxation loop, page fetching and caching.
//!
//! Providers are pluggable through [`SearchProvider`]. Tests and offline
//! experiments use [`FixtureProvider`], which answers from JSON files keyed by
//! the SHA-256 of the normalized query; the live Google and Bing clients
//! (feature `live`) read credentials from the environment and consult a
//! [`DiskCache`] before the network.

mod cache;
mod fixture;
mod html;
#[cfg(feature = "live")]
mod live;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::querygen::{relax, Query};

pub use cache::{DiskCache, CACHE_DIR_ENV};
pub use fixture::{fixture_key, FixtureFetcher, FixtureFile, FixtureHit, FixtureProvider};
pub use html::{collapse_whitespace, looks_like_html, strip_html};
#[cfg(feature = "live")]
pub use live::{parse_bing_response, parse_google_response, BingProvider, GoogleProvider, HttpFetcher};

pub const MAX_HITS: usize = 10;
pub const DEFAULT_FETCH_PARALLELISM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Google,
    Bing,
}

impl Engine {
    pub const ALL: [Engine; 2] = [Engine::Google, Engine::Bing];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Google => "google",
            Engine::Bing => "bing",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "google" => Ok(Engine::Google),
            "bing" => Ok(Engine::Bing),
            _ => Err(Error::invalid(format!("unknown engine `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// 1-based rank as returned by the engine.
    pub rank: usize,
    pub url: String,
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_text: Option<String>,
    pub engine: Engine,
}

pub trait SearchProvider: Send + Sync {
    fn engine(&self) -> Engine;

    /// At most `max_hits` results in rank order. An unknown query is an
    /// empty list; transport problems are [`Error::Retryable`].
    fn search(&self, query: &Query, max_hits: usize) -> Result<Vec<SearchResult>>;
}

/// Retrieves raw page bodies. Failures are [`Error::PageUnavailable`].
pub trait Fetcher: Send + Sync {
    fn fetch_raw(&self, url: &str) -> Result<String>;
}

/// Fetches `url` and reduces it to visible text.
pub fn fetch_page(url: &str, fetcher: &dyn Fetcher) -> Result<String> {
    url::Url::parse(url).map_err(|e| Error::invalid(format!("malformed url `{url}`: {e}")))?;
    let raw = fetcher.fetch_raw(url)?;
    Ok(strip_html(&raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    Blacklist,
    Whitelist,
}

/// Which result domains are admissible. Listed domains also cover their
/// subdomains, so `bad.com` matches `news.bad.com`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainPolicy {
    pub mode: PolicyMode,
    pub domains: BTreeSet<String>,
}

impl DomainPolicy {
    pub fn new<I, S>(mode: PolicyMode, domains: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let domains = domains
            .into_iter()
            .map(|d| {
                let d = d.as_ref().trim().to_lowercase();
                if d.is_empty() || d.contains("://") || d.contains('/') {
                    Err(Error::invalid(format!("`{d}` is not a bare domain")))
                } else {
                    Ok(d.trim_start_matches("www.").to_string())
                }
            })
            .collect::<Result<_>>()?;
        Ok(DomainPolicy { mode, domains })
    }

    pub fn allow_all() -> Self {
        DomainPolicy {
            mode: PolicyMode::Blacklist,
            domains: BTreeSet::new(),
        }
    }

    /// One domain per line, `#` comments allowed.
    pub fn parse(mode: PolicyMode, source: &str) -> Result<Self> {
        DomainPolicy::new(
            mode,
            source
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn from_path(mode: PolicyMode, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DomainPolicy::parse(mode, &text)
    }

    /// Bundled list of unreliable domains, used as a blacklist.
    pub fn bundled_blacklist() -> &'static DomainPolicy {
        static P: OnceLock<DomainPolicy> = OnceLock::new();
        P.get_or_init(|| {
            DomainPolicy::parse(PolicyMode::Blacklist, include_str!("../../data/unreliable_domains.txt"))
                .expect("bundled blacklist parses")
        })
    }

    /// Bundled reputable-source whitelist for the forum answer task.
    pub fn bundled_cqa_whitelist() -> &'static DomainPolicy {
        static P: OnceLock<DomainPolicy> = OnceLock::new();
        P.get_or_init(|| {
            DomainPolicy::parse(PolicyMode::Whitelist, include_str!("../../data/cqa_whitelist.txt"))
                .expect("bundled whitelist parses")
        })
    }

    fn listed(&self, url: &str) -> bool {
        let Some(host) = url::Url::parse(url).ok().and_then(|u| u.host_str().map(str::to_lowercase)) else {
            return false;
        };
        let host = host.trim_start_matches("www.");
        self.domains
            .iter()
            .any(|d| host == d || host.strip_suffix(d.as_str()).is_some_and(|p| p.ends_with('.')))
    }

    pub fn allows(&self, url: &str) -> bool {
        match self.mode {
            PolicyMode::Blacklist => !self.listed(url),
            PolicyMode::Whitelist => self.listed(url),
        }
    }
}

/// Keeps admissible results in their original order; ranks are not renumbered.
pub fn filter_domains(results: Vec<SearchResult>, policy: &DomainPolicy) -> Vec<SearchResult> {
    results.into_iter().filter(|r| policy.allows(&r.url)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        RetryPolicy {
            base_delay: Duration::ZERO,
            ..Default::default()
        }
    }

    /// Runs `op`, retrying [`Error::Retryable`] failures with exponential backoff.
    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T>) -> Result<T> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match op() {
                Err(Error::Retryable(msg)) if attempt < self.attempts.max(1) => {
                    let delay = self.base_delay * 2u32.pow(attempt - 1);
                    log::warn!("attempt {attempt} failed ({msg}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
                other => return other,
            }
        }
    }
}

/// Results from one engine for one claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineEvidence {
    pub engine: Engine,
    pub results: Vec<SearchResult>,
    pub query_used: Query,
    pub relaxations_applied: usize,
}

/// Searches with `query`; while nothing survives the domain policy, drops the
/// last query token and tries again. Gives up with an empty result list once
/// a single-token query fails.
pub fn retrieve_with_relaxation(
    provider: &dyn SearchProvider,
    query: &Query,
    policy: &DomainPolicy,
) -> Result<EngineEvidence> {
    retrieve_with_relaxation_retrying(provider, query, policy, &RetryPolicy::default())
}

pub fn retrieve_with_relaxation_retrying(
    provider: &dyn SearchProvider,
    query: &Query,
    policy: &DomainPolicy,
    retry: &RetryPolicy,
) -> Result<EngineEvidence> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut current = query.clone();
    let mut relaxations = 0;
    loop {
        let hits = retry.run(|| provider.search(&current, MAX_HITS))?;
        let kept = filter_domains(hits, policy);
        if !kept.is_empty() {
            return Ok(EngineEvidence {
                engine: provider.engine(),
                results: kept,
                query_used: current,
                relaxations_applied: relaxations,
            });
        }
        match relax(&current) {
            Ok(shorter) => {
                current = shorter;
                relaxations += 1;
            }
            Err(_) => {
                return Ok(EngineEvidence {
                    engine: provider.engine(),
                    results: Vec::new(),
                    query_used: current,
                    relaxations_applied: relaxations,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineSelection {
    Google,
    Bing,
    Both,
}

impl EngineSelection {
    pub fn includes(self, engine: Engine) -> bool {
        matches!(
            (self, engine),
            (EngineSelection::Both, _) | (EngineSelection::Google, Engine::Google) | (EngineSelection::Bing, Engine::Bing)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceSelection {
    Snippets,
    Pages,
    Both,
}

impl SourceSelection {
    pub fn snippets(self) -> bool {
        self != SourceSelection::Pages
    }

    pub fn pages(self) -> bool {
        self != SourceSelection::Snippets
    }
}

/// Everything retrieved for one claim, one entry per engine queried.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub claim_id: String,
    pub engines: Vec<EngineEvidence>,
}

impl EvidenceBundle {
    pub fn empty(claim_id: impl Into<String>) -> Self {
        EvidenceBundle {
            claim_id: claim_id.into(),
            engines: Vec::new(),
        }
    }

    pub fn engine(&self, engine: Engine) -> Option<&EngineEvidence> {
        self.engines.iter().find(|e| e.engine == engine)
    }

    pub fn results(&self, engine: Engine) -> &[SearchResult] {
        self.engine(engine).map_or(&[], |e| e.results.as_slice())
    }

    pub fn has_results(&self) -> bool {
        self.engines.iter().any(|e| !e.results.is_empty())
    }

    /// Drops engines outside `engines`; drops snippets or page text not
    /// covered by `sources`.
    pub fn restricted(&self, engines: EngineSelection, sources: SourceSelection) -> EvidenceBundle {
        let engines = self
            .engines
            .iter()
            .filter(|e| engines.includes(e.engine))
            .map(|e| EngineEvidence {
                results: e
                    .results
                    .iter()
                    .map(|r| SearchResult {
                        snippet: if sources.snippets() { r.snippet.clone() } else { String::new() },
                        page_text: if sources.pages() { r.page_text.clone() } else { None },
                        ..r.clone()
                    })
                    .collect(),
                ..e.clone()
            })
            .collect();
        EvidenceBundle {
            claim_id: self.claim_id.clone(),
            engines,
        }
    }

    /// Fills `page_text` for every result, fetching with at most
    /// `parallelism` concurrent requests. Unavailable pages stay `None`.
    pub fn fetch_pages(&mut self, fetcher: &dyn Fetcher, parallelism: usize) {
        let slots: Vec<(usize, usize, String)> = self
            .engines
            .iter()
            .enumerate()
            .flat_map(|(e, ev)| ev.results.iter().enumerate().map(move |(r, res)| (e, r, res.url.clone())))
            .collect();
        let pages: Vec<Mutex<Option<String>>> = slots.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = parallelism.clamp(1, slots.len().max(1));

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some((_, _, url)) = slots.get(i) else {
                        break;
                    };
                    match fetch_page(url, fetcher) {
                        Ok(text) if !text.trim().is_empty() => *pages[i].lock().expect("page slot") = Some(text),
                        Ok(_) => {}
                        Err(e) => log::debug!("{e}"),
                    }
                });
            }
        });

        for ((e, r, _), page) in slots.into_iter().zip(pages) {
            self.engines[e].results[r].page_text = page.into_inner().expect("page slot");
        }
    }
}

/// Per-claim retrieval across engines, with optional page fetching.
pub struct EvidenceGatherer<'a> {
    pub providers: Vec<&'a dyn SearchProvider>,
    pub fetcher: Option<&'a dyn Fetcher>,
    pub policy: DomainPolicy,
    pub retry: RetryPolicy,
    pub parallelism: usize,
}

impl<'a> EvidenceGatherer<'a> {
    pub fn new(providers: Vec<&'a dyn SearchProvider>, policy: DomainPolicy) -> Self {
        EvidenceGatherer {
            providers,
            fetcher: None,
            policy,
            retry: RetryPolicy::default(),
            parallelism: DEFAULT_FETCH_PARALLELISM,
        }
    }

    pub fn with_fetcher(mut self, fetcher: &'a dyn Fetcher) -> Self {
        self.fetcher = Some(fetcher);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn gather(&self, claim_id: &str, query: &Query) -> Result<EvidenceBundle> {
        let mut engines = Vec::new();
        for p in &self.providers {
            engines.push(retrieve_with_relaxation_retrying(*p, query, &self.policy, &self.retry)?);
        }
        engines.sort_by_key(|e| e.engine);
        let mut bundle = EvidenceBundle {
            claim_id: claim_id.to_string(),
            engines,
        };
        if let Some(f) = self.fetcher {
            bundle.fetch_pages(f, self.parallelism);
        }
        Ok(bundle)
    }
}
