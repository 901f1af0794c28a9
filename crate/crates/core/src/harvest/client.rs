use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::http::{HttpError, JsonClient, Method};
use crate::retry::RetryPolicy;

use super::{HarvestError, TemporalQuery};

/// One page of provider results. Items stay raw so that a single malformed
/// entry can be skipped without losing the page.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Page {
    #[serde(default)]
    pub items: Vec<serde_json::Value>,
    #[serde(default)]
    pub next_page_token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("transient provider failure: {0}")]
    Transient(String),
    #[error("provider failure: {0}")]
    Permanent(String),
}

impl ProviderError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transient(_))
    }
}

impl From<HttpError> for ProviderError {
    fn from(e: HttpError) -> Self {
        if e.is_transient() {
            ProviderError::Transient(e.to_string())
        } else {
            ProviderError::Permanent(e.to_string())
        }
    }
}

/// Paginated headline source. Implementations are shared across worker threads.
pub trait NewsProviderClient: Send + Sync {
    fn fetch_page(&self, query: &TemporalQuery, page_token: Option<&str>) -> Result<Page, ProviderError>;
}

/// Headline payload as returned by a provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawHeadline {
    #[serde(default, deserialize_with = "string_or_number")]
    pub id: Option<String>,
    pub title: String,
    #[serde(default)]
    pub published_at: Option<String>,
    /// Language reported by the provider, when it reports one.
    #[serde(default)]
    pub language: Option<String>,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    Ok(match Option::<serde_json::Value>::deserialize(d)? {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s),
        Some(serde_json::Value::Number(n)) => Some(n.to_string()),
        Some(other) => return Err(serde::de::Error::custom(format!("unsupported id {other}"))),
    })
}

impl RawHeadline {
    /// Provider id, or a content hash of (outlet, title) when the provider gave none.
    pub fn dedup_key(&self, outlet: &str) -> String {
        match &self.id {
            Some(id) if !id.is_empty() => id.clone(),
            _ => {
                let mut h = Sha256::new();
                h.update(outlet.as_bytes());
                h.update([0u8]);
                h.update(self.title.trim().as_bytes());
                let digest = h.finalize();
                let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
                format!("h-{hex}")
            }
        }
    }
}

/// Pulls every page of `query`, retrying transient failures per page, and
/// de-duplicates by [`RawHeadline::dedup_key`] keeping the first occurrence.
pub fn fetch_headlines(
    client: &dyn NewsProviderClient,
    query: &TemporalQuery,
    retry: &RetryPolicy,
) -> Result<Vec<RawHeadline>, HarvestError> {
    let mut out = Vec::new();
    let mut seen_keys = HashSet::new();
    let mut seen_tokens = HashSet::new();
    let mut token: Option<String> = None;
    loop {
        let page = retry
            .run(|| client.fetch_page(query, token.as_deref()), ProviderError::is_transient)
            .map_err(|source| HarvestError::Fetch {
                outlet: query.outlet.clone(),
                source,
            })?;
        for item in page.items {
            match serde_json::from_value::<RawHeadline>(item) {
                Ok(h) if !h.title.trim().is_empty() => {
                    if seen_keys.insert(h.dedup_key(&query.outlet)) {
                        out.push(h);
                    }
                }
                Ok(_) => log::warn!("{}: skipping payload with blank title", query.outlet),
                Err(e) => log::warn!("{}: skipping malformed payload: {e}", query.outlet),
            }
        }
        match page.next_page_token {
            Some(next) if seen_tokens.insert(next.clone()) => token = Some(next),
            Some(next) => {
                log::warn!("{}: page token {next:?} repeats, stopping", query.outlet);
                break;
            }
            None => break,
        }
    }
    Ok(out)
}

/// Runs several queries with at most `parallelism` in flight. Results keep query order.
pub fn fetch_many(
    client: &dyn NewsProviderClient,
    queries: &[TemporalQuery],
    retry: &RetryPolicy,
    parallelism: usize,
) -> Vec<Result<Vec<RawHeadline>, HarvestError>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| queries.par_iter().map(|q| fetch_headlines(client, q, retry)).collect())
}

/// Reads pages from `<root>/<query hash>/<n>.json`; the page token is `n`.
/// A query without a directory yields one empty page.
#[derive(Debug, Clone)]
pub struct FixtureNewsClient {
    root: PathBuf,
}

impl FixtureNewsClient {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn page_path(&self, query: &TemporalQuery, page: usize) -> PathBuf {
        self.root.join(query.hash_hex()).join(format!("{page}.json"))
    }
}

impl NewsProviderClient for FixtureNewsClient {
    fn fetch_page(&self, query: &TemporalQuery, page_token: Option<&str>) -> Result<Page, ProviderError> {
        let page: usize = match page_token {
            None => 0,
            Some(t) => t
                .parse()
                .map_err(|_| ProviderError::Permanent(format!("bad fixture page token {t:?}")))?,
        };
        let path = self.page_path(query, page);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| ProviderError::Permanent(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == io::ErrorKind::NotFound && page == 0 => Ok(Page::default()),
            Err(e) => Err(ProviderError::Permanent(format!("{}: {e}", path.display()))),
        }
    }
}

#[derive(Serialize)]
struct PageRequest<'a> {
    outlet: &'a str,
    language: &'a str,
    categories: &'a [String],
    start: String,
    end: String,
    page_token: Option<&'a str>,
}

/// Live adapter: `GET <endpoint>` with a JSON body, answering a [`Page`]-shaped
/// object whose items carry `id`, `title`, `published_at`.
#[derive(Debug, Clone)]
pub struct HttpNewsClient {
    endpoint: String,
    http: JsonClient,
}

impl HttpNewsClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.into(),
            http: JsonClient::new(timeout),
        }
    }
}

impl NewsProviderClient for HttpNewsClient {
    fn fetch_page(&self, query: &TemporalQuery, page_token: Option<&str>) -> Result<Page, ProviderError> {
        let body = PageRequest {
            outlet: &query.outlet,
            language: query.language.as_str(),
            categories: &query.categories,
            start: query.start.to_string(),
            end: query.end.to_string(),
            page_token,
        };
        Ok(self.http.call(Method::Get, &self.endpoint, &body)?)
    }
}
