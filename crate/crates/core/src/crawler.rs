//! Same-site breadth-first crawler.
//!
//! One crawl walks one site: links are followed only while they stay on the
//! target host, every normalized URL is fetched at most once, and requests
//! to the host never overlap. Different sites crawl concurrently.

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::dom::{parse_html, DomTree};
use crate::fetch::{site_key, PageFetcher};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("page sink failed: {0}")]
    Sink(#[from] std::io::Error),
}

/// Crawl limits and politeness knobs. The defaults are sized for crawling a
/// real store of several hundred pages without hammering it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrawlConfig {
    /// Upper bound on pages delivered per site.
    pub max_pages: usize,
    /// Link hops from the seed URLs.
    pub max_depth: usize,
    /// Minimum pause between finishing one request to a host and starting
    /// the next.
    pub delay_ms: u64,
    pub timeout_ms: u64,
    pub user_agent: String,
    pub respect_robots: bool,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            max_pages: 1000,
            max_depth: 6,
            delay_ms: 1000,
            timeout_ms: 15_000,
            user_agent: "pricepath/0.1".to_string(),
            respect_robots: true,
        }
    }
}

/// One fetched page as handed to the sink.
#[derive(Debug, Clone)]
pub struct CrawledPage {
    /// Normalized URL that was requested.
    pub url: String,
    pub site: String,
    /// Link hops from the nearest seed.
    pub depth: usize,
    pub body: Vec<u8>,
    /// Charset label reported by the transport, if any.
    pub charset: Option<String>,
    pub fetched_at: DateTime<Utc>,
}

/// Consumer of crawled pages. Accepts deliveries from concurrently running
/// site-crawls; a sink error aborts the crawl that hit it.
pub trait PageSink: Send + Sync {
    fn accept(&self, page: CrawledPage) -> std::io::Result<()>;
}

/// What one site-crawl did.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CrawlSummary {
    pub site: String,
    pub pages_fetched: usize,
    /// Fetch failures as (url, message); these never abort the crawl.
    pub errors: Vec<(String, String)>,
    pub skipped_by_robots: usize,
}

/// Canonical form of an absolute http(s) URL: lowercased scheme and host,
/// default port dropped, fragment dropped, query kept (product ids live
/// there). Applying it twice gives the same string as applying it once.
pub fn normalize_url(url: &str) -> Option<String> {
    let mut parsed = Url::parse(url).ok()?;
    if parsed.scheme() != "http" && parsed.scheme() != "https" {
        return None;
    }
    parsed.host_str()?;
    parsed.set_fragment(None);
    Some(parsed.to_string())
}

/// Absolute normalized targets of every anchor href on the page.
pub fn extract_links(tree: &DomTree, base_url: &str) -> Vec<String> {
    let Ok(base) = Url::parse(base_url) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for id in tree.descendants(tree.root()) {
        if tree.tag(id) != "a" {
            continue;
        }
        let Some(href) = tree.attr(id, "href") else {
            continue;
        };
        let href = href.trim();
        if href.is_empty()
            || href.starts_with('#')
            || href.starts_with("javascript:")
            || href.starts_with("mailto:")
        {
            continue;
        }
        let Ok(joined) = base.join(href) else {
            continue;
        };
        if let Some(normalized) = normalize_url(joined.as_str()) {
            out.push(normalized);
        }
    }
    out
}

/// The subset of robots.txt this crawler honors: Disallow path prefixes from
/// every group addressed to us (exact "*" or a token of our user agent).
#[derive(Debug, Default, Clone)]
pub(crate) struct RobotsRules {
    disallow: Vec<String>,
}

impl RobotsRules {
    pub(crate) fn parse(text: &str, user_agent: &str) -> Self {
        let ua = user_agent.to_lowercase();
        let mut rules = RobotsRules::default();
        let mut group_applies = false;
        let mut in_agent_lines = false;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once(':') else {
                continue;
            };
            let key = key.trim().to_lowercase();
            let value = value.trim();
            match key.as_str() {
                "user-agent" => {
                    // consecutive user-agent lines share the group that follows
                    if !in_agent_lines {
                        group_applies = false;
                        in_agent_lines = true;
                    }
                    let agent = value.to_lowercase();
                    if agent == "*" || ua.contains(&agent) {
                        group_applies = true;
                    }
                }
                "disallow" => {
                    in_agent_lines = false;
                    if group_applies && !value.is_empty() {
                        rules.disallow.push(value.to_string());
                    }
                }
                _ => {
                    in_agent_lines = false;
                }
            }
        }
        rules
    }

    pub(crate) fn allows(&self, path: &str) -> bool {
        !self.disallow.iter().any(|prefix| path.starts_with(prefix))
    }
}

fn robots_for(
    origin: &str,
    config: &CrawlConfig,
    fetcher: &dyn PageFetcher,
    pacer: &mut Pacer,
) -> RobotsRules {
    if !config.respect_robots {
        return RobotsRules::default();
    }
    let url = format!("{origin}/robots.txt");
    pacer.pause();
    let result = fetcher.fetch(&url);
    pacer.mark();
    match result {
        Ok(page) => RobotsRules::parse(&String::from_utf8_lossy(&page.body), &config.user_agent),
        Err(_) => RobotsRules::default(),
    }
}

/// Tracks the end of the previous request to the host and sleeps out the
/// remaining delay before the next one.
struct Pacer {
    delay: Duration,
    last_done: Option<Instant>,
}

impl Pacer {
    fn new(delay_ms: u64) -> Self {
        Pacer {
            delay: Duration::from_millis(delay_ms),
            last_done: None,
        }
    }

    fn pause(&self) {
        if let Some(done) = self.last_done {
            let ready = done + self.delay;
            let now = Instant::now();
            if ready > now {
                std::thread::sleep(ready - now);
            }
        }
    }

    fn mark(&mut self) {
        self.last_done = Some(Instant::now());
    }
}

/// Breadth-first crawl of one site. Seeds outside the site are recorded as
/// errors and skipped; fetch failures never abort the crawl.
pub fn crawl_site(
    site: &str,
    seed_urls: &[String],
    config: &CrawlConfig,
    fetcher: &dyn PageFetcher,
    sink: &dyn PageSink,
) -> Result<CrawlSummary, CrawlError> {
    let mut summary = CrawlSummary {
        site: site.to_string(),
        ..CrawlSummary::default()
    };
    let mut visited: HashSet<String> = HashSet::new();
    let mut queue: VecDeque<(String, usize)> = VecDeque::new();
    // Robots lives at the seed's own origin so a non-default port is kept.
    let mut origin = format!("http://{site}");

    for seed in seed_urls {
        let Some(normalized) = normalize_url(seed) else {
            summary
                .errors
                .push((seed.clone(), "unparseable seed url".to_string()));
            continue;
        };
        if site_key(&normalized).as_deref() != Some(site) {
            summary
                .errors
                .push((normalized, "seed not on target site".to_string()));
            continue;
        }
        if let Ok(parsed) = Url::parse(&normalized) {
            if queue.is_empty() {
                origin = parsed.origin().ascii_serialization();
            }
        }
        if visited.insert(normalized.clone()) {
            queue.push_back((normalized, 0));
        }
    }
    if queue.is_empty() {
        return Ok(summary);
    }

    let mut pacer = Pacer::new(config.delay_ms);
    let robots = robots_for(&origin, config, fetcher, &mut pacer);

    while let Some((url, depth)) = queue.pop_front() {
        if summary.pages_fetched >= config.max_pages {
            break;
        }
        if let Ok(parsed) = Url::parse(&url) {
            if !robots.allows(parsed.path()) {
                summary.skipped_by_robots += 1;
                continue;
            }
        }
        pacer.pause();
        let fetched = fetcher.fetch(&url);
        pacer.mark();
        let page = match fetched {
            Ok(p) => p,
            Err(e) => {
                summary.errors.push((url, e.to_string()));
                continue;
            }
        };
        summary.pages_fetched += 1;

        if depth < config.max_depth {
            if let Ok(tree) = parse_html(&page.body, page.charset.as_deref()) {
                let base = if page.final_url.is_empty() {
                    url.as_str()
                } else {
                    page.final_url.as_str()
                };
                for link in extract_links(&tree, base) {
                    if site_key(&link).as_deref() != Some(site) {
                        continue;
                    }
                    if visited.insert(link.clone()) {
                        queue.push_back((link, depth + 1));
                    }
                }
            }
        }

        sink.accept(CrawledPage {
            url,
            site: site.to_string(),
            depth,
            body: page.body,
            charset: page.charset,
            fetched_at: Utc::now(),
        })?;
    }
    Ok(summary)
}

/// Crawls several sites concurrently, one thread per site. The sink is the
/// synchronization point for deliveries.
pub fn crawl_many(
    sites: &[(String, Vec<String>)],
    config: &CrawlConfig,
    fetcher: &(dyn PageFetcher + Sync),
    sink: &dyn PageSink,
) -> Vec<Result<CrawlSummary, CrawlError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = sites
            .iter()
            .map(|(site, seeds)| {
                scope.spawn(move || crawl_site(site, seeds, config, fetcher, sink))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fetch::MemoryFetcher;
    use std::sync::Mutex;

    struct Collector(Mutex<Vec<CrawledPage>>);

    impl Collector {
        fn new() -> Self {
            Collector(Mutex::new(Vec::new()))
        }
        fn pages(&self) -> Vec<CrawledPage> {
            self.0.lock().unwrap().clone()
        }
    }

    impl PageSink for Collector {
        fn accept(&self, page: CrawledPage) -> std::io::Result<()> {
            self.0.lock().unwrap().push(page);
            Ok(())
        }
    }

    fn page(links: &[&str]) -> Vec<u8> {
        let body: String = links
            .iter()
            .map(|l| format!("<a href=\"{l}\">x</a>"))
            .collect();
        format!("<html><body><p>t</p>{body}</body></html>").into_bytes()
    }

    fn quick_config() -> CrawlConfig {
        CrawlConfig {
            delay_ms: 0,
            respect_robots: false,
            ..CrawlConfig::default()
        }
    }

    #[test]
    fn normalization_examples_and_idempotence() {
        let cases = [
            ("HTTP://WWW.Mobifox.VN:80/p/1.html#frag", "http://www.mobifox.vn/p/1.html"),
            ("https://a.vn:443/x?id=9", "https://a.vn/x?id=9"),
            ("http://a.vn", "http://a.vn/"),
        ];
        for (input, want) in cases {
            let got = normalize_url(input).unwrap();
            assert_eq!(got, want);
            assert_eq!(normalize_url(&got).unwrap(), got);
        }
        assert_eq!(normalize_url("ftp://a.vn/x"), None);
        assert_eq!(normalize_url("not a url"), None);
    }

    #[test]
    fn link_extraction_resolves_and_filters() {
        let tree = parse_html(
            concat!(
                "<html><body>",
                "<a href=\"/p/2.html\">a</a>",
                "<a href=\"news.html\">b</a>",
                "<a href=\"#top\">c</a>",
                "<a href=\"javascript:void(0)\">d</a>",
                "<a href=\"mailto:x@y.vn\">e</a>",
                "<a href=\"http://other.vn/z\">f</a>",
                "</body></html>"
            )
            .as_bytes(),
            None,
        )
        .unwrap();
        let links = extract_links(&tree, "http://a.vn/p/1.html");
        assert_eq!(
            links,
            [
                "http://a.vn/p/2.html",
                "http://a.vn/p/news.html",
                "http://other.vn/z",
            ]
        );
    }

    #[test]
    fn robots_rules_subset() {
        let text = "User-agent: *\nDisallow: /admin/\nDisallow:\n\nUser-agent: otherbot\nDisallow: /\n";
        let rules = RobotsRules::parse(text, "pricepath/0.1");
        assert!(!rules.allows("/admin/secret.html"));
        assert!(rules.allows("/p/1.html"));

        let targeted = RobotsRules::parse("User-agent: pricepath\nDisallow: /p/\n", "pricepath/0.1");
        assert!(!targeted.allows("/p/1.html"));
    }

    #[test]
    fn bfs_visits_each_url_once_and_stays_on_site() {
        let fetcher = MemoryFetcher::new([
            ("http://a.vn/".to_string(), page(&["/1.html", "/2.html", "http://other.vn/x"])),
            ("http://a.vn/1.html".to_string(), page(&["/", "/2.html", "/3.html"])),
            ("http://a.vn/2.html".to_string(), page(&["/1.html"])),
            ("http://a.vn/3.html".to_string(), page(&[])),
        ]);
        let sink = Collector::new();
        let summary = crawl_site(
            "a.vn",
            &["http://a.vn/".to_string()],
            &quick_config(),
            &fetcher,
            &sink,
        )
        .unwrap();
        assert_eq!(summary.pages_fetched, 4);
        assert!(summary.errors.is_empty());
        for (_, count) in fetcher.fetch_counts() {
            assert_eq!(count, 1);
        }
        let pages = sink.pages();
        assert!(pages.iter().all(|p| p.site == "a.vn"));
        // breadth-first: depths never decrease in delivery order
        let depths: Vec<_> = pages.iter().map(|p| p.depth).collect();
        assert!(depths.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn max_pages_is_exact() {
        let mut fetcher = MemoryFetcher::default();
        let links: Vec<String> = (0..30).map(|i| format!("/p/{i}.html")).collect();
        let refs: Vec<&str> = links.iter().map(|s| s.as_str()).collect();
        fetcher.insert("http://a.vn/", page(&refs));
        for l in &links {
            fetcher.insert(format!("http://a.vn{l}"), page(&[]));
        }
        let sink = Collector::new();
        let config = CrawlConfig {
            max_pages: 7,
            ..quick_config()
        };
        let summary =
            crawl_site("a.vn", &["http://a.vn/".to_string()], &config, &fetcher, &sink).unwrap();
        assert_eq!(summary.pages_fetched, 7);
        assert_eq!(sink.pages().len(), 7);
        assert_eq!(fetcher.total_fetches(), 7);
    }

    #[test]
    fn max_depth_stops_link_following() {
        let fetcher = MemoryFetcher::new([
            ("http://a.vn/".to_string(), page(&["/1.html"])),
            ("http://a.vn/1.html".to_string(), page(&["/2.html"])),
            ("http://a.vn/2.html".to_string(), page(&["/3.html"])),
            ("http://a.vn/3.html".to_string(), page(&[])),
        ]);
        let sink = Collector::new();
        let config = CrawlConfig {
            max_depth: 2,
            ..quick_config()
        };
        let summary =
            crawl_site("a.vn", &["http://a.vn/".to_string()], &config, &fetcher, &sink).unwrap();
        assert_eq!(summary.pages_fetched, 3);
    }

    #[test]
    fn failing_seed_is_an_error_not_a_crash() {
        let fetcher = MemoryFetcher::default();
        let sink = Collector::new();
        let summary = crawl_site(
            "a.vn",
            &["http://a.vn/gone.html".to_string()],
            &quick_config(),
            &fetcher,
            &sink,
        )
        .unwrap();
        assert_eq!(summary.pages_fetched, 0);
        assert_eq!(summary.errors.len(), 1);
    }

    #[test]
    fn off_site_seed_is_rejected() {
        let fetcher = MemoryFetcher::new([("http://b.vn/".to_string(), page(&[]))]);
        let sink = Collector::new();
        let summary = crawl_site(
            "a.vn",
            &["http://b.vn/".to_string()],
            &quick_config(),
            &fetcher,
            &sink,
        )
        .unwrap();
        assert_eq!(summary.pages_fetched, 0);
        assert_eq!(summary.errors.len(), 1);
    }

    #[test]
    fn robots_disallow_is_honored() {
        let fetcher = MemoryFetcher::new([
            (
                "http://a.vn/robots.txt".to_string(),
                b"User-agent: *\nDisallow: /admin/\n".to_vec(),
            ),
            ("http://a.vn/".to_string(), page(&["/admin/trap.html", "/ok.html"])),
            ("http://a.vn/admin/trap.html".to_string(), page(&[])),
            ("http://a.vn/ok.html".to_string(), page(&[])),
        ]);
        let sink = Collector::new();
        let config = CrawlConfig {
            delay_ms: 0,
            ..CrawlConfig::default()
        };
        let summary =
            crawl_site("a.vn", &["http://a.vn/".to_string()], &config, &fetcher, &sink).unwrap();
        assert_eq!(summary.pages_fetched, 2);
        assert_eq!(summary.skipped_by_robots, 1);
        assert!(!fetcher.fetch_counts().contains_key("http://a.vn/admin/trap.html"));
    }

    #[test]
    fn crawl_many_covers_all_sites() {
        let fetcher = MemoryFetcher::new([
            ("http://a.vn/".to_string(), page(&["/1.html"])),
            ("http://a.vn/1.html".to_string(), page(&[])),
            ("http://b.vn/".to_string(), page(&[])),
        ]);
        let sink = Collector::new();
        let sites = vec![
            ("a.vn".to_string(), vec!["http://a.vn/".to_string()]),
            ("b.vn".to_string(), vec!["http://b.vn/".to_string()]),
        ];
        let summaries = crawl_many(&sites, &quick_config(), &fetcher, &sink);
        let total: usize = summaries
            .iter()
            .map(|s| s.as_ref().unwrap().pages_fetched)
            .sum();
        assert_eq!(total, 3);
        assert_eq!(sink.pages().len(), 3);
    }
}
