//! Pipeline configuration: one TOML file shared by every stage. Relative
//! paths inside the file resolve against the file's own directory, so a
//! config can travel with its corpus.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use pricepath_core::{CrawlConfig, SimilarityMode};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub paths: PathsSection,
    pub discovery: DiscoverySection,
    pub similarity: SimilaritySection,
    pub fetch: FetchSection,
    pub crawl: CrawlConfig,
    pub evaluate: Option<EvaluateSection>,
    /// Product-name aliases: variant name mapped to its canonical name.
    pub aliases: HashMap<String, String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    /// Price classification rules (TOML).
    pub rules: Option<PathBuf>,
    /// Seed product names, one per line.
    pub seeds: Option<PathBuf>,
    /// Saved search results for the fixture provider (JSON).
    pub provider: Option<PathBuf>,
    /// Directory the stage outputs live under.
    pub stores: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscoverySection {
    /// Search results taken per seed.
    pub top_k: usize,
    /// A site is commercial only with strictly more supporting pages.
    pub threshold: usize,
    /// Query shape; `{name}` is replaced by the quoted product name.
    pub template: Option<String>,
    pub provider: ProviderKind,
    /// Search endpoint for the live provider; `{query}` is substituted.
    pub live_endpoint: Option<String>,
}

impl Default for DiscoverySection {
    fn default() -> Self {
        DiscoverySection {
            top_k: 10,
            threshold: 3,
            template: None,
            provider: ProviderKind::Fixture,
            live_endpoint: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// Query results read from a checked-in JSON file.
    Fixture,
    /// Query results scraped from a live search endpoint.
    Live,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilaritySection {
    pub mode: SimilarityMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FetchSection {
    pub mode: FetchMode,
    /// Root of the on-disk page corpus; required when mode is "corpus".
    pub corpus_dir: Option<PathBuf>,
}

impl Default for FetchSection {
    fn default() -> Self {
        FetchSection {
            mode: FetchMode::Http,
            corpus_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchMode {
    /// Pages come from a directory tree laid out as host/path.
    Corpus,
    /// Pages come from the live web.
    Http,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    /// Gold rows: JSON lines of url, gold_name, gold_price_text.
    pub gold: PathBuf,
}

impl PipelineConfig {
    /// Rewrites every relative path in the config against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for path in [
            &mut self.paths.rules,
            &mut self.paths.seeds,
            &mut self.paths.provider,
            &mut self.paths.stores,
            &mut self.fetch.corpus_dir,
        ]
        .into_iter()
        .flatten()
        {
            *path = absolute(base, path);
        }
        if let Some(eval) = &mut self.evaluate {
            eval.gold = absolute(base, &eval.gold);
        }
    }
}

fn absolute(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
        [paths]
        rules = "rules.vi.toml"
        seeds = "seeds.txt"
        provider = "provider.json"
        stores = "out"

        [discovery]
        top_k = 10
        threshold = 3
        provider = "fixture"

        [similarity]
        mode = "tag_and_index"

        [fetch]
        mode = "corpus"
        corpus_dir = "corpus"

        [crawl]
        max_pages = 100
        max_depth = 6
        delay_ms = 10
        timeout_ms = 5000
        user_agent = "pricepath/0.1"
        respect_robots = true

        [evaluate]
        gold = "gold.jsonl"
    "#;

    #[test]
    fn full_config_parses_and_resolves() {
        let mut cfg: PipelineConfig = toml::from_str(FULL).unwrap();
        assert_eq!(cfg.discovery.top_k, 10);
        assert_eq!(cfg.discovery.provider, ProviderKind::Fixture);
        assert_eq!(cfg.similarity.mode, SimilarityMode::TagAndIndex);
        assert_eq!(cfg.fetch.mode, FetchMode::Corpus);
        assert_eq!(cfg.crawl.max_pages, 100);
        assert_eq!(cfg.crawl.delay_ms, 10);

        cfg.resolve_paths(Path::new("/base"));
        assert_eq!(cfg.paths.rules.as_deref(), Some(Path::new("/base/rules.vi.toml")));
        assert_eq!(cfg.paths.stores.as_deref(), Some(Path::new("/base/out")));
        assert_eq!(cfg.fetch.corpus_dir.as_deref(), Some(Path::new("/base/corpus")));
        assert_eq!(
            cfg.evaluate.unwrap().gold.as_path(),
            Path::new("/base/gold.jsonl")
        );
    }

    #[test]
    fn sections_are_optional_with_defaults() {
        let cfg: PipelineConfig = toml::from_str(
            "[paths]\nseeds = \"seeds.txt\"\n\n[fetch]\nmode = \"corpus\"\ncorpus_dir = \"c\"\n",
        )
        .unwrap();
        assert_eq!(cfg.discovery.top_k, 10);
        assert_eq!(cfg.discovery.threshold, 3);
        assert_eq!(cfg.similarity.mode, SimilarityMode::TagAndIndex);
        assert_eq!(cfg.crawl.max_pages, 1000);
        assert!(cfg.evaluate.is_none());
        assert!(cfg.aliases.is_empty());
        assert!(cfg.paths.rules.is_none());
    }

    #[test]
    fn absolute_paths_are_kept() {
        let mut cfg: PipelineConfig =
            toml::from_str("[paths]\nrules = \"/etc/rules.toml\"\n").unwrap();
        cfg.resolve_paths(Path::new("/base"));
        assert_eq!(cfg.paths.rules.as_deref(), Some(Path::new("/etc/rules.toml")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[discovery]\ntopk = 5\n").is_err());
        assert!(toml::from_str::<PipelineConfig>("[mystery]\nx = 1\n").is_err());
    }

    #[test]
    fn aliases_parse_as_a_table() {
        let cfg: PipelineConfig =
            toml::from_str("[aliases]\n\"ibm t61\" = \"lenovo thinkpad t61\"\n").unwrap();
        assert_eq!(cfg.aliases["ibm t61"], "lenovo thinkpad t61");
    }
}
