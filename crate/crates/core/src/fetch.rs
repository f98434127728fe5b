//! Page fetching behind one trait, so every stage runs identically against
//! the live web, an on-disk corpus, or an in-memory map.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;
use url::Url;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid url `{0}`")]
    BadUrl(String),
    #[error("{url}: http status {status}")]
    Status { url: String, status: u16 },
    #[error("{url}: {message}")]
    Transport { url: String, message: String },
}

/// A fetched document body plus what the transport said about it.
#[derive(Debug, Clone)]
pub struct FetchedPage {
    /// URL after redirects; equals the requested URL when none occurred.
    pub final_url: String,
    pub body: Vec<u8>,
    /// Charset label from the Content-Type header, when one was sent.
    pub charset: Option<String>,
}

pub trait PageFetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError>;
}

/// Host of `url`, lowercased. This is the site key everything groups under;
/// the www prefix is kept, so www.vatgia.com and vatgia.com are distinct.
pub fn site_key(url: &str) -> Option<String> {
    let parsed = Url::parse(url).ok()?;
    parsed.host_str().map(|h| h.to_lowercase())
}

/// Live HTTP fetcher.
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new(timeout: Duration, user_agent: &str) -> Result<Self, FetchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(user_agent)
            .build()
            .map_err(|e| FetchError::Transport {
                url: String::new(),
                message: e.to_string(),
            })?;
        Ok(HttpFetcher { client })
    }
}

impl PageFetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let response = self
            .client
            .get(url)
            .send()
            .map_err(|e| FetchError::Transport {
                url: url.to_string(),
                message: e.to_string(),
            })?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Status {
                url: url.to_string(),
                status: status.as_u16(),
            });
        }
        let final_url = response.url().to_string();
        let charset = response
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .and_then(charset_from_content_type);
        let body = response
            .bytes()
            .map_err(|e| FetchError::Transport {
                url: url.to_string(),
                message: e.to_string(),
            })?
            .to_vec();
        Ok(FetchedPage {
            final_url,
            body,
            charset,
        })
    }
}

fn charset_from_content_type(value: &str) -> Option<String> {
    value.split(';').skip(1).find_map(|param| {
        let (k, v) = param.split_once('=')?;
        if k.trim().eq_ignore_ascii_case("charset") {
            Some(v.trim().trim_matches('"').to_string())
        } else {
            None
        }
    })
}

/// Serves a directory tree as if it were the web: `http://host/a/b.html`
/// maps to `<root>/host/a/b.html`, with `index.html` for directory paths.
/// The vehicle for fully offline runs against a checked-in corpus.
pub struct CorpusFetcher {
    root: PathBuf,
}

impl CorpusFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        CorpusFetcher { root: root.into() }
    }

    fn file_for(&self, url: &str) -> Result<PathBuf, FetchError> {
        let parsed = Url::parse(url).map_err(|_| FetchError::BadUrl(url.to_string()))?;
        let host = parsed
            .host_str()
            .ok_or_else(|| FetchError::BadUrl(url.to_string()))?;
        let mut rel = parsed.path().trim_start_matches('/').to_string();
        if rel.is_empty() || rel.ends_with('/') {
            rel.push_str("index.html");
        }
        let mut file = self.root.join(host.to_lowercase());
        for part in rel.split('/') {
            // refuse to escape the corpus root
            if part == ".." || part.is_empty() {
                return Err(FetchError::BadUrl(url.to_string()));
            }
            file.push(part);
        }
        Ok(file)
    }
}

impl PageFetcher for CorpusFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let file = self.file_for(url)?;
        match std::fs::read(&file) {
            Ok(body) => Ok(FetchedPage {
                final_url: url.to_string(),
                body,
                charset: None,
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(FetchError::Status {
                url: url.to_string(),
                status: 404,
            }),
            Err(e) => Err(FetchError::Transport {
                url: url.to_string(),
                message: e.to_string(),
            }),
        }
    }
}

/// In-memory fetcher for tests. Counts every fetch per URL.
#[derive(Default)]
pub struct MemoryFetcher {
    pages: HashMap<String, Vec<u8>>,
    counts: Mutex<HashMap<String, usize>>,
}

impl MemoryFetcher {
    pub fn new(pages: impl IntoIterator<Item = (String, Vec<u8>)>) -> Self {
        MemoryFetcher {
            pages: pages.into_iter().collect(),
            counts: Mutex::new(HashMap::new()),
        }
    }

    pub fn insert(&mut self, url: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.pages.insert(url.into(), body.into());
    }

    /// How often each URL was requested, including misses.
    pub fn fetch_counts(&self) -> HashMap<String, usize> {
        self.counts.lock().unwrap().clone()
    }

    pub fn total_fetches(&self) -> usize {
        self.counts.lock().unwrap().values().sum()
    }
}

impl PageFetcher for MemoryFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        *self
            .counts
            .lock()
            .unwrap()
            .entry(url.to_string())
            .or_insert(0) += 1;
        match self.pages.get(url) {
            Some(body) => Ok(FetchedPage {
                final_url: url.to_string(),
                body: body.clone(),
                charset: None,
            }),
            None => Err(FetchError::Status {
                url: url.to_string(),
                status: 404,
            }),
        }
    }
}

/// Politeness decorator: serializes requests per host and enforces a minimum
/// pause between the end of one request and the start of the next on the
/// same host. Crawls do their own pacing; this guards everything else
/// (discovery fetches, robots lookups) when many hosts interleave.
pub struct PoliteFetcher<F> {
    inner: F,
    delay: Duration,
    hosts: Mutex<HashMap<String, Arc<Mutex<Instant>>>>,
}

impl<F: PageFetcher> PoliteFetcher<F> {
    pub fn new(inner: F, delay: Duration) -> Self {
        PoliteFetcher {
            inner,
            delay,
            hosts: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: PageFetcher> PageFetcher for PoliteFetcher<F> {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let host = site_key(url).unwrap_or_default();
        let gate = {
            let mut hosts = self.hosts.lock().unwrap();
            hosts
                .entry(host)
                .or_insert_with(|| Arc::new(Mutex::new(Instant::now())))
                .clone()
        };
        // the host gate stays locked across the request: one in-flight
        // request per host, gap >= delay
        let mut not_before = gate.lock().unwrap();
        let now = Instant::now();
        if *not_before > now {
            std::thread::sleep(*not_before - now);
        }
        let result = self.inner.fetch(url);
        *not_before = Instant::now() + self.delay;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_keys_keep_www_and_lowercase() {
        assert_eq!(
            site_key("http://WWW.123Mua.COM.VN/p/1.html").as_deref(),
            Some("www.123mua.com.vn")
        );
        assert_eq!(site_key("http://vatgia.com/x").as_deref(), Some("vatgia.com"));
        assert_eq!(site_key("not a url"), None);
    }

    #[test]
    fn charset_parsing_from_content_type() {
        assert_eq!(
            charset_from_content_type("text/html; charset=windows-1258").as_deref(),
            Some("windows-1258")
        );
        assert_eq!(
            charset_from_content_type("text/html; CHARSET=\"UTF-8\"").as_deref(),
            Some("UTF-8")
        );
        assert_eq!(charset_from_content_type("text/html"), None);
    }

    #[test]
    fn corpus_fetcher_maps_urls_to_files() {
        let dir = tempfile::tempdir().unwrap();
        let site = dir.path().join("www.mobifox.vn").join("p");
        std::fs::create_dir_all(&site).unwrap();
        std::fs::write(site.join("1.html"), b"<html><body>x</body></html>").unwrap();
        std::fs::write(
            dir.path().join("www.mobifox.vn").join("index.html"),
            b"<html><body>home</body></html>",
        )
        .unwrap();

        let fetcher = CorpusFetcher::new(dir.path());
        assert!(fetcher.fetch("http://www.mobifox.vn/p/1.html").is_ok());
        assert!(fetcher.fetch("http://www.mobifox.vn/").is_ok());
        let err = fetcher.fetch("http://www.mobifox.vn/p/2.html").unwrap_err();
        assert!(matches!(err, FetchError::Status { status: 404, .. }));
        assert!(fetcher.fetch("http://www.mobifox.vn/../escape.html").is_err());
    }

    #[test]
    fn memory_fetcher_counts_requests() {
        let fetcher = MemoryFetcher::new([("http://a.vn/".to_string(), b"hi".to_vec())]);
        fetcher.fetch("http://a.vn/").unwrap();
        fetcher.fetch("http://a.vn/").unwrap();
        assert!(fetcher.fetch("http://a.vn/missing").is_err());
        let counts = fetcher.fetch_counts();
        assert_eq!(counts["http://a.vn/"], 2);
        assert_eq!(counts["http://a.vn/missing"], 1);
    }

    #[test]
    fn polite_fetcher_spaces_out_same_host_requests() {
        let mut inner = MemoryFetcher::default();
        inner.insert("http://a.vn/1", b"x".to_vec());
        inner.insert("http://a.vn/2", b"x".to_vec());
        let polite = PoliteFetcher::new(inner, Duration::from_millis(30));
        let t0 = Instant::now();
        polite.fetch("http://a.vn/1").unwrap();
        polite.fetch("http://a.vn/2").unwrap();
        assert!(t0.elapsed() >= Duration::from_millis(30));
    }
}
