//! Test-only support: an instrumented local HTTP server, generated fixture
//! corpora, and a random page generator for oracle-equivalence suites.

pub mod corpus;
pub mod server;
pub mod trees;
