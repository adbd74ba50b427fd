//! HTTP clients for the Google Custom Search and Bing Web Search APIs, and
//! a page fetcher. Responses are cached on disk when a cache is configured.

use std::time::Duration;

use serde::Deserialize;

use super::cache::DiskCache;
use super::{looks_like_html, Engine, Fetcher, SearchProvider, SearchResult};
use crate::error::{Error, Result};
use crate::querygen::Query;

pub const GOOGLE_KEY_ENV: &str = "VERISCOPE_GOOGLE_KEY";
/// Custom Search engine id; the API needs it next to the key.
pub const GOOGLE_CX_ENV: &str = "VERISCOPE_GOOGLE_CX";
pub const BING_KEY_ENV: &str = "VERISCOPE_BING_KEY";

const USER_AGENT: &str = concat!("veriscope/", env!("CARGO_PKG_VERSION"));
const GOOGLE_ENDPOINT: &str = "https://www.googleapis.com/customsearch/v1";
const BING_ENDPOINT: &str = "https://api.bing.microsoft.com/v7.0/search";

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .user_agent(USER_AGENT)
        .timeout_global(Some(Duration::from_secs(20)))
        .build()
        .into()
}

fn env_var(name: &str) -> Result<String> {
    std::env::var(name)
        .ok()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| Error::invalid(format!("environment variable {name} is not set")))
}

fn transport(e: ureq::Error) -> Error {
    match e {
        // client errors (bad key, quota) will not improve on retry
        ureq::Error::StatusCode(code) if (400..500).contains(&code) && code != 429 => {
            Error::invalid(format!("search API rejected the request: HTTP {code}"))
        }
        other => Error::Retryable(other.to_string()),
    }
}

fn cached_or(cache: Option<&DiskCache>, namespace: &str, key: &str, fetch: impl FnOnce() -> Result<String>) -> Result<String> {
    if let Some(hit) = cache.and_then(|c| c.get(namespace, key)) {
        if let Ok(text) = String::from_utf8(hit) {
            return Ok(text);
        }
    }
    let body = fetch()?;
    if let Some(c) = cache {
        c.put(namespace, key, body.as_bytes())?;
    }
    Ok(body)
}

#[derive(Deserialize)]
struct GoogleResponse {
    #[serde(default)]
    items: Vec<GoogleItem>,
}

#[derive(Deserialize)]
struct GoogleItem {
    link: String,
    #[serde(default)]
    snippet: String,
}

pub fn parse_google_response(body: &str, max_hits: usize) -> Result<Vec<SearchResult>> {
    let parsed: GoogleResponse = serde_json::from_str(body)?;
    Ok(parsed
        .items
        .into_iter()
        .take(max_hits)
        .enumerate()
        .map(|(i, item)| SearchResult {
            rank: i + 1,
            url: item.link,
            snippet: item.snippet.replace('\n', " "),
            page_text: None,
            engine: Engine::Google,
        })
        .collect())
}

#[derive(Deserialize)]
struct BingResponse {
    #[serde(rename = "webPages")]
    web_pages: Option<BingPages>,
}

#[derive(Deserialize)]
struct BingPages {
    #[serde(default)]
    value: Vec<BingItem>,
}

#[derive(Deserialize)]
struct BingItem {
    url: String,
    #[serde(default)]
    snippet: String,
}

pub fn parse_bing_response(body: &str, max_hits: usize) -> Result<Vec<SearchResult>> {
    let parsed: BingResponse = serde_json::from_str(body)?;
    Ok(parsed
        .web_pages
        .map(|p| p.value)
        .unwrap_or_default()
        .into_iter()
        .take(max_hits)
        .enumerate()
        .map(|(i, item)| SearchResult {
            rank: i + 1,
            url: item.url,
            snippet: item.snippet,
            page_text: None,
            engine: Engine::Bing,
        })
        .collect())
}

pub struct GoogleProvider {
    key: String,
    cx: String,
    cache: Option<DiskCache>,
    agent: ureq::Agent,
}

impl GoogleProvider {
    pub fn new(key: String, cx: String, cache: Option<DiskCache>) -> Self {
        GoogleProvider {
            key,
            cx,
            cache,
            agent: agent(),
        }
    }

    /// Credentials from `VERISCOPE_GOOGLE_KEY` / `VERISCOPE_GOOGLE_CX`,
    /// cache from `VERISCOPE_CACHE_DIR`.
    pub fn from_env() -> Result<Self> {
        Ok(GoogleProvider::new(env_var(GOOGLE_KEY_ENV)?, env_var(GOOGLE_CX_ENV)?, DiskCache::from_env()?))
    }
}

impl SearchProvider for GoogleProvider {
    fn engine(&self) -> Engine {
        Engine::Google
    }

    fn search(&self, query: &Query, max_hits: usize) -> Result<Vec<SearchResult>> {
        let q = query.normalized();
        let body = cached_or(self.cache.as_ref(), "google", &q, || {
            self.agent
                .get(GOOGLE_ENDPOINT)
                .query("key", &self.key)
                .query("cx", &self.cx)
                .query("q", &q)
                .query("num", max_hits.min(10).to_string())
                .call()
                .map_err(transport)?
                .body_mut()
                .read_to_string()
                .map_err(transport)
        })?;
        parse_google_response(&body, max_hits)
    }
}

pub struct BingProvider {
    key: String,
    cache: Option<DiskCache>,
    agent: ureq::Agent,
}

impl BingProvider {
    pub fn new(key: String, cache: Option<DiskCache>) -> Self {
        BingProvider {
            key,
            cache,
            agent: agent(),
        }
    }

    pub fn from_env() -> Result<Self> {
        Ok(BingProvider::new(env_var(BING_KEY_ENV)?, DiskCache::from_env()?))
    }
}

impl SearchProvider for BingProvider {
    fn engine(&self) -> Engine {
        Engine::Bing
    }

    fn search(&self, query: &Query, max_hits: usize) -> Result<Vec<SearchResult>> {
        let q = query.normalized();
        let body = cached_or(self.cache.as_ref(), "bing", &q, || {
            self.agent
                .get(BING_ENDPOINT)
                .header("Ocp-Apim-Subscription-Key", &self.key)
                .query("q", &q)
                .query("count", max_hits.min(50).to_string())
                .call()
                .map_err(transport)?
                .body_mut()
                .read_to_string()
                .map_err(transport)
        })?;
        parse_bing_response(&body, max_hits)
    }
}

/// Plain GET with a static user agent. Only HTTP errors are honored; there
/// is no robots.txt handling.
pub struct HttpFetcher {
    cache: Option<DiskCache>,
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(cache: Option<DiskCache>) -> Self {
        HttpFetcher { cache, agent: agent() }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch_raw(&self, url: &str) -> Result<String> {
        cached_or(self.cache.as_ref(), "page", url, || {
            let unavailable = |e: ureq::Error| Error::PageUnavailable(format!("{url}: {e}"));
            let mut resp = self.agent.get(url).call().map_err(unavailable)?;
            let content_type = resp
                .headers()
                .get("content-type")
                .and_then(|v| v.to_str().ok())
                .unwrap_or("")
                .to_ascii_lowercase();
            let body = resp.body_mut().read_to_string().map_err(unavailable)?;
            let html = content_type.contains("html") || (content_type.is_empty() && looks_like_html(&body));
            if !html {
                return Err(Error::PageUnavailable(format!("{url}: not HTML ({content_type})")));
            }
            Ok(body)
        })
    }
}
