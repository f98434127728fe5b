//! Regenerates the checked-in fixture corpora and the default rule file.
//!
//! Usage: gen_fixtures [REPO_ROOT]
//! Writes fixtures/e2e, fixtures/siteid, and config/rules.vi.toml.

use std::path::PathBuf;

use pricepath_testsupport::corpus;

fn main() -> std::io::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("..")
                .join("..")
        });
    let fixtures = root.join("fixtures");
    corpus::build_e2e_corpus(&fixtures.join("e2e"))?;
    corpus::build_siteid_corpus(&fixtures.join("siteid"))?;

    let config = root.join("config");
    std::fs::create_dir_all(&config)?;
    std::fs::write(config.join("rules.vi.toml"), corpus::DEFAULT_RULES_TOML)?;

    println!("fixtures written under {}", fixtures.display());
    Ok(())
}
