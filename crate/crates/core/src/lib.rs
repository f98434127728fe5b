//! Core library of the pricepath system.
//!
//! The front end takes seed product names, finds related commercial pages
//! through a pluggable search provider, and induces paired root-to-leaf
//! XPath patterns for the product name and its actual price. Sites whose
//! pages repeatedly yield the same pattern pair are treated as commercial
//! and handed to the back end, which crawls them, applies the patterns,
//! normalizes prices, and maintains product/seed stores.

pub mod crawler;
pub mod discovery;
pub mod dom;
pub mod fetch;
pub mod induction;
pub mod patterns;
pub mod pipeline;
pub mod pricing;
pub mod text;

pub use crawler::{CrawlConfig, CrawlSummary, CrawledPage, PageSink};
pub use discovery::{
    DiscoverOutcome, FixtureProvider, QueryTemplate, SearchProvider, SiteSupport,
};
pub use dom::{DomTree, NodeId, NodePath, PathStep};
pub use fetch::{CorpusFetcher, HttpFetcher, MemoryFetcher, PageFetcher, PoliteFetcher};
pub use induction::InductionResult;
pub use patterns::{PatternPair, PatternRole, SimilarityMode, XpathPattern};
pub use pipeline::eval::EvalReport;
pub use pipeline::store::{ProductStore, SeedStore};
pub use pipeline::{Currency, ProductRecord};
pub use pricing::{PriceCandidate, RuleSet, Verdict};
