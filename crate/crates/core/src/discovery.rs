//! Seed-driven discovery of commercial sites.
//!
//! Each seed name becomes a quoted search query; returned pages are fetched
//! and run through induction. A site becomes commercial when strictly more
//! than `threshold` distinct pages on it agree on one pattern pair.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::form_urlencoded;

use crate::crawler::normalize_url;
use crate::dom::parse_html;
use crate::fetch::{HttpFetcher, PageFetcher};
use crate::induction::{induce_with_mode, InductionResult};
use crate::patterns::{PatternPair, SimilarityMode};
use crate::pricing::RuleSet;
use crate::text::normalize_ws;

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("product name is blank")]
    BlankName,
    #[error("search provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("cannot read provider file {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid provider file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Query shape sent to the search provider. `{name}` is replaced by the
/// quoted product name; the rest rides along verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryTemplate {
    pub format: String,
}

impl Default for QueryTemplate {
    fn default() -> Self {
        QueryTemplate {
            format: "\"{name}\" \"vnđ or usd\"".to_string(),
        }
    }
}

impl QueryTemplate {
    pub fn new(format: impl Into<String>) -> Self {
        QueryTemplate {
            format: format.into(),
        }
    }
}

/// Renders the query for one product name. Interior double quotes are
/// stripped before wrapping, so rendering is idempotent on its own output
/// name part.
pub fn build_query(product_name: &str, template: &QueryTemplate) -> Result<String, DiscoveryError> {
    let name = normalize_ws(&product_name.replace('"', ""));
    if name.is_empty() {
        return Err(DiscoveryError::BlankName);
    }
    Ok(template.format.replace("{name}", &name))
}

pub trait SearchProvider: Send + Sync {
    /// Ordered result URLs for `query`, at most `top_k` of them.
    fn search(&self, query: &str, top_k: usize) -> Result<Vec<String>, DiscoveryError>;
}

/// Search results from a file: a JSON object mapping query string to an
/// ordered URL list. Unknown queries return no results, like a search
/// engine that has never seen the phrase.
pub struct FixtureProvider {
    queries: HashMap<String, Vec<String>>,
}

impl FixtureProvider {
    pub fn from_map(queries: HashMap<String, Vec<String>>) -> Self {
        FixtureProvider { queries }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DiscoveryError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DiscoveryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let queries: HashMap<String, Vec<String>> = serde_json::from_str(&text)?;
        Ok(FixtureProvider { queries })
    }
}

impl SearchProvider for FixtureProvider {
    fn search(&self, query: &str, top_k: usize) -> Result<Vec<String>, DiscoveryError> {
        let mut urls = self.queries.get(query).cloned().unwrap_or_default();
        urls.truncate(top_k);
        Ok(urls)
    }
}

/// Best-effort live provider: GETs an endpoint with the query substituted
/// and scrapes absolute links out of the response. Result quality depends
/// entirely on the endpoint; fixture runs never use this.
pub struct LiveProvider {
    /// E.g. "https://html.duckduckgo.com/html/?q={query}".
    endpoint: String,
    fetcher: HttpFetcher,
}

impl LiveProvider {
    pub fn new(endpoint: impl Into<String>, fetcher: HttpFetcher) -> Self {
        LiveProvider {
            endpoint: endpoint.into(),
            fetcher,
        }
    }
}

impl SearchProvider for LiveProvider {
    fn search(&self, query: &str, top_k: usize) -> Result<Vec<String>, DiscoveryError> {
        let encoded: String = form_urlencoded::byte_serialize(query.as_bytes()).collect();
        let url = self.endpoint.replace("{query}", &encoded);
        let page = self
            .fetcher
            .fetch(&url)
            .map_err(|e| DiscoveryError::ProviderUnavailable(e.to_string()))?;
        let tree = parse_html(&page.body, page.charset.as_deref())
            .map_err(|e| DiscoveryError::ProviderUnavailable(e.to_string()))?;
        let mut seen = HashSet::new();
        let mut urls = Vec::new();
        for id in tree.descendants(tree.root()) {
            if tree.tag(id) != "a" {
                continue;
            }
            let Some(href) = tree.attr(id, "href") else {
                continue;
            };
            if !href.starts_with("http://") && !href.starts_with("https://") {
                continue;
            }
            if let Some(normalized) = normalize_url(href) {
                if seen.insert(normalized.clone()) {
                    urls.push(normalized);
                }
            }
            if urls.len() == top_k {
                break;
            }
        }
        Ok(urls)
    }
}

/// Everything one discovery run produced.
#[derive(Debug, Default)]
pub struct DiscoverOutcome {
    pub results: Vec<InductionResult>,
    /// Distinct URLs fetched (after per-run deduplication).
    pub urls_fetched: usize,
    pub fetch_failures: usize,
    /// Seeds skipped because the provider failed or the name was blank.
    pub seeds_skipped: usize,
}

/// Runs the front end: query, fetch, induce, collect. A provider failure
/// abandons that seed only; fetch and parse failures are logged and
/// skipped. Each normalized URL is processed once per run even when several
/// seeds surface it.
pub fn discover(
    seeds: &[String],
    template: &QueryTemplate,
    provider: &dyn SearchProvider,
    fetcher: &dyn PageFetcher,
    top_k: usize,
    rules: &RuleSet,
    mode: SimilarityMode,
) -> DiscoverOutcome {
    let mut outcome = DiscoverOutcome::default();
    let mut seen_urls: HashSet<String> = HashSet::new();

    for seed in seeds {
        let query = match build_query(seed, template) {
            Ok(q) => q,
            Err(e) => {
                warn!("seed {seed:?} skipped: {e}");
                outcome.seeds_skipped += 1;
                continue;
            }
        };
        let urls = match provider.search(&query, top_k) {
            Ok(u) => u,
            Err(e) => {
                warn!("seed {seed:?} skipped: {e}");
                outcome.seeds_skipped += 1;
                continue;
            }
        };
        debug!("seed {seed:?}: {} urls", urls.len());
        for url in urls {
            let Some(normalized) = normalize_url(&url) else {
                debug!("ignoring unusable url {url:?}");
                continue;
            };
            if !seen_urls.insert(normalized.clone()) {
                continue;
            }
            outcome.urls_fetched += 1;
            let page = match fetcher.fetch(&normalized) {
                Ok(p) => p,
                Err(e) => {
                    debug!("fetch failed: {e}");
                    outcome.fetch_failures += 1;
                    continue;
                }
            };
            let tree = match parse_html(&page.body, page.charset.as_deref()) {
                Ok(t) => t,
                Err(e) => {
                    debug!("{normalized}: {e}");
                    continue;
                }
            };
            if let Some(result) = induce_with_mode(&tree, &normalized, seed, rules, mode) {
                outcome.results.push(result);
            }
        }
    }
    info!(
        "discovery: {} inductions from {} urls ({} fetch failures, {} seeds skipped)",
        outcome.results.len(),
        outcome.urls_fetched,
        outcome.fetch_failures,
        outcome.seeds_skipped
    );
    outcome
}

/// Support of one (site, pattern pair) group: how many distinct pages of
/// that site produced exactly this pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSupport {
    pub site: String,
    #[serde(flatten)]
    pub pair: PatternPair,
    pub count: usize,
    /// The distinct supporting page URLs (normalized, sorted).
    pub pages: Vec<String>,
}

/// Support table over all results, sorted by descending count, then site,
/// then pair text. Deterministic regardless of input order.
pub fn site_support(results: &[InductionResult]) -> Vec<SiteSupport> {
    let mut groups: HashMap<(String, String), (PatternPair, HashSet<String>)> = HashMap::new();
    for r in results {
        if r.site.is_empty() {
            continue;
        }
        let page = normalize_url(&r.url).unwrap_or_else(|| r.url.clone());
        let key = (r.site.clone(), r.pair.canonical());
        groups
            .entry(key)
            .or_insert_with(|| (r.pair.clone(), HashSet::new()))
            .1
            .insert(page);
    }
    let mut table: Vec<SiteSupport> = groups
        .into_iter()
        .map(|((site, _), (pair, pages))| {
            let mut pages: Vec<String> = pages.into_iter().collect();
            pages.sort();
            SiteSupport {
                site,
                pair,
                count: pages.len(),
                pages,
            }
        })
        .collect();
    table.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.site.cmp(&b.site))
            .then_with(|| a.pair.canonical().cmp(&b.pair.canonical()))
    });
    table
}

/// Commercial sites: groups whose distinct-page support is strictly greater
/// than `threshold`.
pub fn identify_sites(results: &[InductionResult], threshold: usize) -> Vec<(String, PatternPair)> {
    site_support(results)
        .into_iter()
        .filter(|s| s.count > threshold)
        .map(|s| (s.site, s.pair))
        .collect()
}
