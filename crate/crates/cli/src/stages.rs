//! The pipeline stages behind each subcommand. Stages talk to each other
//! only through files, so any stage can be rerun or replaced on its own.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use log::info;
use rayon::prelude::*;
use thiserror::Error;

use pricepath_core::crawler::{crawl_many, CrawlError};
use pricepath_core::discovery::{
    discover, site_support, DiscoveryError, FixtureProvider, LiveProvider, QueryTemplate,
    SearchProvider, SiteSupport,
};
use pricepath_core::fetch::{
    CorpusFetcher, FetchError, FetchedPage, HttpFetcher, PageFetcher, PoliteFetcher,
};
use pricepath_core::patterns::PatternPair;
use pricepath_core::pipeline::eval::{evaluate, read_gold, EvalError, Prediction};
use pricepath_core::pipeline::store::{AliasTable, PageStore, StoreError};
use pricepath_core::pipeline::{extract_products, normalize_price, upsert, UpsertKind};
use pricepath_core::pricing::{RuleError, RuleSet};
use pricepath_core::{CrawledPage, ProductRecord, ProductStore, SeedStore};

use crate::config::{FetchMode, PipelineConfig, ProviderKind};
use crate::report::{
    CrawlReport, DiscoverReport, EvaluateReport, ExtractReport, RunAllReport, SiteRow,
};

#[derive(Debug, Error)]
pub enum StageError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Crawl(#[from] CrawlError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl StageError {
    /// Stable error class name for the machine-readable report.
    pub fn kind(&self) -> &'static str {
        match self {
            StageError::Config(_) => "ConfigError",
            StageError::Rules(_) => "RuleError",
            StageError::Discovery(_) => "DiscoveryError",
            StageError::Fetch(_) => "FetchError",
            StageError::Crawl(_) => "CrawlError",
            StageError::Store(_) => "StoreError",
            StageError::Eval(_) => "EvalError",
            StageError::Io { .. } => "IoError",
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> StageError {
    StageError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Everything a stage needs besides its own flags.
pub struct StageCtx {
    pub config: PipelineConfig,
    /// Directory the config file lives in; the cwd without one.
    pub base: PathBuf,
}

impl StageCtx {
    pub fn prepare(config_path: Option<&Path>) -> Result<StageCtx, StageError> {
        let Some(path) = config_path else {
            return Ok(StageCtx {
                config: PipelineConfig::default(),
                base: PathBuf::from("."),
            });
        };
        let text = fs::read_to_string(path).map_err(|e| {
            StageError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: PipelineConfig = toml::from_str(&text).map_err(|e| {
            StageError::Config(format!("invalid config {}: {e}", path.display()))
        })?;
        let base = match path.parent() {
            Some(dir) if !dir.as_os_str().is_empty() => dir.to_path_buf(),
            _ => PathBuf::from("."),
        };
        config.resolve_paths(&base);
        Ok(StageCtx { config, base })
    }

    /// Directory stage outputs default into.
    pub fn stores_root(&self) -> PathBuf {
        self.config
            .paths
            .stores
            .clone()
            .unwrap_or_else(|| self.base.join("out"))
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), StageError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(StageError::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

fn configured(path: Option<PathBuf>, what: &str, hint: &str) -> Result<PathBuf, StageError> {
    path.ok_or_else(|| StageError::Config(format!("no {what} configured; {hint}")))
}

/// Fetcher selected by config; one type so every stage moves pages the
/// same way.
pub enum Fetcher {
    Corpus(CorpusFetcher),
    Http(PoliteFetcher<HttpFetcher>),
}

impl PageFetcher for Fetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        match self {
            Fetcher::Corpus(f) => f.fetch(url),
            Fetcher::Http(f) => f.fetch(url),
        }
    }
}

fn build_fetcher(config: &PipelineConfig) -> Result<Fetcher, StageError> {
    match config.fetch.mode {
        FetchMode::Corpus => {
            let dir = configured(
                config.fetch.corpus_dir.clone(),
                "corpus directory",
                "set fetch.corpus_dir",
            )?;
            if !dir.is_dir() {
                return Err(StageError::Config(format!(
                    "corpus directory {} does not exist",
                    dir.display()
                )));
            }
            Ok(Fetcher::Corpus(CorpusFetcher::new(dir)))
        }
        FetchMode::Http => {
            let crawl = &config.crawl;
            let inner = HttpFetcher::new(
                Duration::from_millis(crawl.timeout_ms),
                &crawl.user_agent,
            )?;
            Ok(Fetcher::Http(PoliteFetcher::new(
                inner,
                Duration::from_millis(crawl.delay_ms),
            )))
        }
    }
}

fn read_seed_lines(path: &Path) -> Result<Vec<String>, StageError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut names = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        let name = line.trim();
        if !name.is_empty() {
            names.push(name.to_string());
        }
    }
    Ok(names)
}

fn read_site_rows(path: &Path) -> Result<Vec<SiteSupport>, StageError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: SiteSupport = serde_json::from_str(&line).map_err(|e| {
            StageError::Config(format!("invalid site row {}:{}: {e}", path.display(), i + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Default)]
pub struct DiscoverOverrides {
    pub seeds: Option<PathBuf>,
    pub top_k: Option<usize>,
    pub threshold: Option<usize>,
    pub rules: Option<PathBuf>,
    pub provider: Option<ProviderKind>,
    pub provider_file: Option<PathBuf>,
}

/// Queries every seed, induces patterns on the result pages, and writes the
/// sites whose support beats the threshold as JSON lines.
pub fn discover_stage(
    ctx: &StageCtx,
    ov: &DiscoverOverrides,
    sites_file: &Path,
) -> Result<DiscoverReport, StageError> {
    let rules_path = configured(
        ov.rules.clone().or_else(|| ctx.config.paths.rules.clone()),
        "rules file",
        "pass --rules or set [paths] rules",
    )?;
    require_file(&rules_path, "rules file")?;
    let rules = RuleSet::load(&rules_path)?;

    let seeds_path = configured(
        ov.seeds.clone().or_else(|| ctx.config.paths.seeds.clone()),
        "seeds file",
        "pass --seeds or set [paths] seeds",
    )?;
    require_file(&seeds_path, "seeds file")?;
    let seeds = read_seed_lines(&seeds_path)?;

    let template = ctx
        .config
        .discovery
        .template
        .clone()
        .map(QueryTemplate::new)
        .unwrap_or_default();
    let top_k = ov.top_k.unwrap_or(ctx.config.discovery.top_k);
    let threshold = ov.threshold.unwrap_or(ctx.config.discovery.threshold);

    let provider: Box<dyn SearchProvider> =
        match ov.provider.unwrap_or(ctx.config.discovery.provider) {
            ProviderKind::Fixture => {
                let file = configured(
                    ov.provider_file
                        .clone()
                        .or_else(|| ctx.config.paths.provider.clone()),
                    "provider file",
                    "pass --provider-file or set [paths] provider",
                )?;
                require_file(&file, "provider file")?;
                Box::new(FixtureProvider::load(&file)?)
            }
            ProviderKind::Live => {
                let endpoint = ctx.config.discovery.live_endpoint.clone().ok_or_else(|| {
                    StageError::Config(
                        "no live endpoint configured; set discovery.live_endpoint".to_string(),
                    )
                })?;
                let crawl = &ctx.config.crawl;
                let http = HttpFetcher::new(
                    Duration::from_millis(crawl.timeout_ms),
                    &crawl.user_agent,
                )?;
                Box::new(LiveProvider::new(endpoint, http))
            }
        };

    let fetcher = build_fetcher(&ctx.config)?;
    let outcome = discover(
        &seeds,
        &template,
        provider.as_ref(),
        &fetcher,
        top_k,
        &rules,
        ctx.config.similarity.mode,
    );

    let picked: Vec<SiteSupport> = site_support(&outcome.results)
        .into_iter()
        .filter(|s| s.count > threshold)
        .collect();

    if let Some(dir) = sites_file.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut out = File::create(sites_file).map_err(|e| io_err(sites_file, e))?;
    for row in &picked {
        let line = serde_json::to_string(row)
            .map_err(|e| StageError::Config(format!("site row does not serialize: {e}")))?;
        writeln!(out, "{line}").map_err(|e| io_err(sites_file, e))?;
    }
    info!("discover: {} sites -> {}", picked.len(), sites_file.display());

    Ok(DiscoverReport {
        seeds: seeds.len(),
        urls_fetched: outcome.urls_fetched,
        fetch_failures: outcome.fetch_failures,
        seeds_skipped: outcome.seeds_skipped,
        inductions: outcome.results.len(),
        sites_identified: picked.len(),
        sites: picked
            .iter()
            .map(|s| SiteRow {
                site: s.site.clone(),
                support: s.count,
            })
            .collect(),
        sites_file: sites_file.display().to_string(),
    })
}

#[derive(Debug, Default)]
pub struct CrawlOverrides {
    pub max_pages: Option<usize>,
    pub max_depth: Option<usize>,
    pub delay: Option<u64>,
}

/// Crawls every site in the sites file breadth-first, seeded by its
/// supporting pages, into a page store.
pub fn crawl_stage(
    ctx: &StageCtx,
    ov: &CrawlOverrides,
    sites_file: &Path,
    pages_dir: &Path,
) -> Result<CrawlReport, StageError> {
    require_file(sites_file, "sites file")?;
    let rows = read_site_rows(sites_file)?;

    // one crawl per site even when several pairs share it
    let mut by_site: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for row in rows {
        let seeds = by_site.entry(row.site).or_default();
        for page in row.pages {
            if !seeds.contains(&page) {
                seeds.push(page);
            }
        }
    }
    let site_list: Vec<(String, Vec<String>)> = by_site.into_iter().collect();

    let mut crawl_config = ctx.config.crawl.clone();
    if let Some(n) = ov.max_pages {
        crawl_config.max_pages = n;
    }
    if let Some(n) = ov.max_depth {
        crawl_config.max_depth = n;
    }
    if let Some(ms) = ov.delay {
        crawl_config.delay_ms = ms;
    }

    let fetcher = build_fetcher(&ctx.config)?;
    let store = Mutex::new(PageStore::create(pages_dir)?);

    let mut report = CrawlReport {
        sites_crawled: site_list.len(),
        pages_crawled: 0,
        skipped_by_robots: 0,
        fetch_errors: 0,
        pages_dir: pages_dir.display().to_string(),
    };
    for summary in crawl_many(&site_list, &crawl_config, &fetcher, &store) {
        let summary = summary?;
        info!(
            "crawl {}: {} pages, {} errors",
            summary.site,
            summary.pages_fetched,
            summary.errors.len()
        );
        report.pages_crawled += summary.pages_fetched;
        report.skipped_by_robots += summary.skipped_by_robots;
        report.fetch_errors += summary.errors.len();
    }
    Ok(report)
}

#[derive(Debug, Default)]
pub struct ExtractOverrides {
    pub rules: Option<PathBuf>,
}

/// Applies each site's pattern pairs to its crawled pages and upserts the
/// extracted products; new names feed the seed store for the next round.
pub fn extract_stage(
    ctx: &StageCtx,
    ov: &ExtractOverrides,
    sites_file: &Path,
    pages_dir: &Path,
    stores_dir: &Path,
) -> Result<ExtractReport, StageError> {
    let rules_path = configured(
        ov.rules.clone().or_else(|| ctx.config.paths.rules.clone()),
        "rules file",
        "pass --rules or set [paths] rules",
    )?;
    require_file(&rules_path, "rules file")?;
    let rules = RuleSet::load(&rules_path)?;

    require_file(sites_file, "sites file")?;
    let mut by_site: BTreeMap<String, Vec<PatternPair>> = BTreeMap::new();
    for row in read_site_rows(sites_file)? {
        by_site.entry(row.site).or_default().push(row.pair);
    }

    let index = pages_dir.join("index.jsonl");
    if !index.is_file() {
        return Err(StageError::Config(format!(
            "no page index at {}; run the crawl stage first",
            index.display()
        )));
    }
    let pages = PageStore::create(pages_dir)?;
    let rows = pages.rows()?;
    let pages_seen = rows.len();

    // page work is independent; the stores below take the results serially
    let extracted: Vec<Option<(String, String, String, String)>> = rows
        .into_par_iter()
        .map(|row| -> Result<_, StageError> {
            let Some(pairs) = by_site.get(&row.site) else {
                return Ok(None);
            };
            let body = pages.read_body(&row)?;
            let page = CrawledPage {
                url: row.url,
                site: row.site,
                depth: row.depth,
                body,
                charset: row.charset,
                fetched_at: row.fetched_at,
            };
            Ok(extract_products(&page, pairs, &rules)
                .map(|(name, price_text)| (page.url, page.site, name, price_text)))
        })
        .collect::<Result<_, _>>()?;

    fs::create_dir_all(stores_dir).map_err(|e| io_err(stores_dir, e))?;
    let products_file = stores_dir.join("products.jsonl");
    let seeds_file = stores_dir.join("seeds.txt");
    let aliases = AliasTable::new(ctx.config.aliases.clone());
    let mut products = ProductStore::open(&products_file, aliases.clone())?;
    let mut seeds = SeedStore::open(&seeds_file)?;

    // carry the configured seed list into the store so the output is the
    // complete name list for the next discovery round
    let mut report = ExtractReport {
        pages_seen,
        records_extracted: 0,
        price_failures: 0,
        records_upserted: 0,
        inserted: 0,
        updated: 0,
        seeds_imported: 0,
        seeds_added: 0,
        products_total: 0,
        products_file: products_file.display().to_string(),
        seeds_file: seeds_file.display().to_string(),
    };
    if let Some(input_seeds) = &ctx.config.paths.seeds {
        if input_seeds.is_file() && input_seeds != &seeds_file {
            for name in read_seed_lines(input_seeds)? {
                if seeds.add(&name)? {
                    report.seeds_imported += 1;
                }
            }
        }
    }

    for (url, site, name, price_text) in extracted.into_iter().flatten() {
        report.records_extracted += 1;
        let Ok((amount, currency)) = normalize_price(&price_text) else {
            report.price_failures += 1;
            continue;
        };
        let record = ProductRecord {
            name,
            amount,
            currency,
            raw_price: price_text,
            url,
            site,
            extracted_at: chrono::Utc::now(),
        };
        let effect = upsert(record, &mut products, &mut seeds, &aliases)?;
        report.records_upserted += 1;
        match effect.product {
            UpsertKind::Inserted => report.inserted += 1,
            UpsertKind::Updated => report.updated += 1,
        }
        if effect.seed_added {
            report.seeds_added += 1;
        }
    }
    products.compact()?;
    report.products_total = products.len();
    info!(
        "extract: {} records from {} pages -> {}",
        report.records_upserted,
        report.pages_seen,
        products_file.display()
    );
    Ok(report)
}

#[derive(Debug, Default)]
pub struct EvaluateOverrides {
    pub products: Option<PathBuf>,
    pub gold: Option<PathBuf>,
}

/// Scores the product store against gold rows.
pub fn evaluate_stage(
    ctx: &StageCtx,
    ov: &EvaluateOverrides,
    stores_dir: &Path,
) -> Result<EvaluateReport, StageError> {
    let products_file = ov
        .products
        .clone()
        .unwrap_or_else(|| stores_dir.join("products.jsonl"));
    require_file(&products_file, "product store")?;

    let gold_path = configured(
        ov.gold
            .clone()
            .or_else(|| ctx.config.evaluate.as_ref().map(|e| e.gold.clone())),
        "gold file",
        "pass --gold or set [evaluate] gold",
    )?;
    require_file(&gold_path, "gold file")?;

    let aliases = AliasTable::new(ctx.config.aliases.clone());
    let products = ProductStore::open(&products_file, aliases)?;
    let predictions: Vec<Prediction> = products
        .records()
        .into_iter()
        .map(|r| Prediction {
            url: r.url,
            name: r.name,
            price_text: r.raw_price,
        })
        .collect();
    let gold = read_gold(&gold_path)?;
    let scores = evaluate(&predictions, &gold)?;
    Ok(EvaluateReport {
        scores,
        products_file: products_file.display().to_string(),
        gold_file: gold_path.display().to_string(),
    })
}

/// discover, crawl, extract, back to back, under one root directory.
pub fn run_all_stage(ctx: &StageCtx, root: &Path) -> Result<RunAllReport, StageError> {
    let sites_file = root.join("sites.jsonl");
    let pages_dir = root.join("pages");
    let discover = discover_stage(ctx, &DiscoverOverrides::default(), &sites_file)?;
    let crawl = crawl_stage(ctx, &CrawlOverrides::default(), &sites_file, &pages_dir)?;
    let extract = extract_stage(
        ctx,
        &ExtractOverrides::default(),
        &sites_file,
        &pages_dir,
        root,
    )?;
    Ok(RunAllReport {
        sites_identified: discover.sites_identified,
        pages_crawled: crawl.pages_crawled,
        records_upserted: extract.records_upserted,
        seeds_added: extract.seeds_added,
        discover,
        crawl,
        extract,
    })
}
