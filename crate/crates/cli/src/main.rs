//! pricepath: find commercial sites from seed product names, crawl them,
//! and extract (product name, actual price) records.
//!
//! Every subcommand prints one JSON report to standard output and exits
//! non-zero with `"ok": false` and an error kind on failure.

mod config;
mod report;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::ProviderKind;
use stages::{
    crawl_stage, discover_stage, evaluate_stage, extract_stage, run_all_stage, CrawlOverrides,
    DiscoverOverrides, EvaluateOverrides, ExtractOverrides, StageCtx, StageError,
};

#[derive(Parser)]
#[command(
    name = "pricepath",
    version,
    about = "Product name and price extraction pipeline for commercial sites"
)]
struct Cli {
    /// Pipeline config file (TOML); stage flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Stage output location: the sites file for discover, the page
    /// directory for crawl, the stores directory otherwise. Defaults to
    /// the configured stores directory.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Log filter: off, error, warn, info, debug, or trace.
    #[arg(long, global = true, default_value = "warn", value_name = "LEVEL")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search each seed name, induce patterns on the hits, list the sites
    /// whose pages agree often enough.
    Discover {
        /// Seed product names, one per line.
        #[arg(long, value_name = "FILE")]
        seeds: Option<PathBuf>,
        /// Search results taken per seed.
        #[arg(long, value_name = "N")]
        top_k: Option<usize>,
        /// A site needs strictly more supporting pages than this.
        #[arg(long, value_name = "T")]
        threshold: Option<usize>,
        /// Price classification rules (TOML).
        #[arg(long, value_name = "FILE")]
        rules: Option<PathBuf>,
        /// Search backend.
        #[arg(long, value_enum)]
        provider: Option<ProviderKind>,
        /// Saved search results for the fixture provider (JSON).
        #[arg(long, value_name = "FILE")]
        provider_file: Option<PathBuf>,
    },
    /// Crawl every listed site breadth-first from its supporting pages.
    Crawl {
        /// Site list produced by discover.
        #[arg(long, value_name = "FILE")]
        sites: Option<PathBuf>,
        /// Page cap per site.
        #[arg(long, value_name = "N")]
        max_pages: Option<usize>,
        /// Link hops from the seed pages.
        #[arg(long, value_name = "N")]
        max_depth: Option<usize>,
        /// Minimum milliseconds between requests to one host.
        #[arg(long, value_name = "MS")]
        delay: Option<u64>,
    },
    /// Apply each site's patterns to its crawled pages and update the
    /// product and seed stores.
    Extract {
        /// Site list produced by discover.
        #[arg(long, value_name = "FILE")]
        sites: Option<PathBuf>,
        /// Page store directory produced by crawl.
        #[arg(long, value_name = "DIR")]
        pages: Option<PathBuf>,
        /// Price classification rules (TOML).
        #[arg(long, value_name = "FILE")]
        rules: Option<PathBuf>,
    },
    /// Score the product store against a gold list.
    Evaluate {
        /// Product store to score.
        #[arg(long, value_name = "FILE")]
        products: Option<PathBuf>,
        /// Gold rows: JSON lines of url, gold_name, gold_price_text.
        #[arg(long, value_name = "FILE")]
        gold: Option<PathBuf>,
    },
    /// Discover, crawl, and extract in one run.
    RunAll,
}

impl Command {
    fn stage_name(&self) -> &'static str {
        match self {
            Command::Discover { .. } => "discover",
            Command::Crawl { .. } => "crawl",
            Command::Extract { .. } => "extract",
            Command::Evaluate { .. } => "evaluate",
            Command::RunAll => "run-all",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.stage_name();

    match cli.log_level.parse() {
        Ok(filter) => {
            env_logger::Builder::new()
                .filter_level(filter)
                .format_timestamp(None)
                .init();
        }
        Err(_) => {
            let err = StageError::Config(format!("unknown log level `{}`", cli.log_level));
            print_failure(stage, &err);
            return ExitCode::FAILURE;
        }
    }

    match run(&cli) {
        Ok(body) => {
            print_report(stage, true, body);
            ExitCode::SUCCESS
        }
        Err(err) => {
            print_failure(stage, &err);
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<serde_json::Value, StageError> {
    let ctx = StageCtx::prepare(cli.config.as_deref())?;
    let stores = ctx.stores_root();
    match &cli.command {
        Command::Discover {
            seeds,
            top_k,
            threshold,
            rules,
            provider,
            provider_file,
        } => {
            let sites_file = cli
                .out
                .clone()
                .unwrap_or_else(|| stores.join("sites.jsonl"));
            let ov = DiscoverOverrides {
                seeds: seeds.clone(),
                top_k: *top_k,
                threshold: *threshold,
                rules: rules.clone(),
                provider: *provider,
                provider_file: provider_file.clone(),
            };
            to_value(&discover_stage(&ctx, &ov, &sites_file)?)
        }
        Command::Crawl {
            sites,
            max_pages,
            max_depth,
            delay,
        } => {
            let sites_file = sites
                .clone()
                .unwrap_or_else(|| stores.join("sites.jsonl"));
            let pages_dir = cli.out.clone().unwrap_or_else(|| stores.join("pages"));
            let ov = CrawlOverrides {
                max_pages: *max_pages,
                max_depth: *max_depth,
                delay: *delay,
            };
            to_value(&crawl_stage(&ctx, &ov, &sites_file, &pages_dir)?)
        }
        Command::Extract {
            sites,
            pages,
            rules,
        } => {
            let stores_dir = cli.out.clone().unwrap_or(stores);
            let sites_file = sites
                .clone()
                .unwrap_or_else(|| stores_dir.join("sites.jsonl"));
            let pages_dir = pages.clone().unwrap_or_else(|| stores_dir.join("pages"));
            let ov = ExtractOverrides {
                rules: rules.clone(),
            };
            to_value(&extract_stage(&ctx, &ov, &sites_file, &pages_dir, &stores_dir)?)
        }
        Command::Evaluate { products, gold } => {
            let stores_dir = cli.out.clone().unwrap_or(stores);
            let ov = EvaluateOverrides {
                products: products.clone(),
                gold: gold.clone(),
            };
            to_value(&evaluate_stage(&ctx, &ov, &stores_dir)?)
        }
        Command::RunAll => {
            let root = cli.out.clone().unwrap_or(stores);
            to_value(&run_all_stage(&ctx, &root)?)
        }
    }
}

fn to_value<T: Serialize>(body: &T) -> Result<serde_json::Value, StageError> {
    serde_json::to_value(body)
        .map_err(|e| StageError::Config(format!("report does not serialize: {e}")))
}

fn print_report(stage: &str, ok: bool, body: serde_json::Value) {
    let mut doc = serde_json::Map::new();
    doc.insert("stage".to_string(), stage.into());
    doc.insert("ok".to_string(), ok.into());
    if let serde_json::Value::Object(map) = body {
        doc.extend(map);
    }
    // single JSON document on stdout: the stage's whole report
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Object(doc))
            .expect("report JSON prints")
    );
}

fn print_failure(stage: &str, err: &StageError) {
    print_report(
        stage,
        false,
        serde_json::json!({
            "error": { "kind": err.kind(), "message": err.to_string() }
        }),
    );
}
