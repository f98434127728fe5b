//! Stage reports: the single JSON document each subcommand prints.

use serde::Serialize;

use pricepath_core::EvalReport;

/// One identified site in a discover report.
#[derive(Debug, Clone, Serialize)]
pub struct SiteRow {
    pub site: String,
    /// Distinct supporting pages behind the winning pattern pair.
    pub support: usize,
}

#[derive(Debug, Serialize)]
pub struct DiscoverReport {
    pub seeds: usize,
    pub urls_fetched: usize,
    pub fetch_failures: usize,
    pub seeds_skipped: usize,
    pub inductions: usize,
    pub sites_identified: usize,
    pub sites: Vec<SiteRow>,
    pub sites_file: String,
}

#[derive(Debug, Serialize)]
pub struct CrawlReport {
    pub sites_crawled: usize,
    pub pages_crawled: usize,
    pub skipped_by_robots: usize,
    pub fetch_errors: usize,
    pub pages_dir: String,
}

#[derive(Debug, Serialize)]
pub struct ExtractReport {
    /// Rows in the page index, matched or not.
    pub pages_seen: usize,
    /// Pages where a pattern pair resolved to a still-valid price.
    pub records_extracted: usize,
    /// Extractions whose price text did not normalize to an amount.
    pub price_failures: usize,
    pub records_upserted: usize,
    pub inserted: usize,
    pub updated: usize,
    /// Names copied in from the configured seed file.
    pub seeds_imported: usize,
    /// New names the extractions fed back into the seed store.
    pub seeds_added: usize,
    /// Live products after compaction.
    pub products_total: usize,
    pub products_file: String,
    pub seeds_file: String,
}

#[derive(Debug, Serialize)]
pub struct EvaluateReport {
    #[serde(flatten)]
    pub scores: EvalReport,
    pub products_file: String,
    pub gold_file: String,
}

#[derive(Debug, Serialize)]
pub struct RunAllReport {
    pub sites_identified: usize,
    pub pages_crawled: usize,
    pub records_upserted: usize,
    pub seeds_added: usize,
    pub discover: DiscoverReport,
    pub crawl: CrawlReport,
    pub extract: ExtractReport,
}
