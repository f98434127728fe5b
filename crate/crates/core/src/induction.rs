//! Pattern induction from a single (product name, page) example.
//!
//! Given a seed name and a page known to mention it, locate the leaf holding
//! the name, classify every number on the page, and pick the surviving price
//! candidate whose path shares the longest prefix with the name's path. The
//! output pair of patterns is the page template's extraction rule.

use crate::dom::{DomTree, NodePath};
use crate::fetch::site_key;
use crate::patterns::{similarity_with, PatternPair, PatternRole, SimilarityMode, XpathPattern};
use crate::pricing::{price_candidates, RuleSet, Verdict};
use crate::text::normalize_name;

/// A successful induction: where the name and price live on this page, and
/// what the price said.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InductionResult {
    pub url: String,
    /// Host of `url`, lowercased: the key sites are grouped under.
    pub site: String,
    /// Full text of the selected price leaf, e.g. "VNĐ 540.000".
    pub price_text: String,
    pub pair: PatternPair,
}

/// Path of the first leaf (document order) whose normalized text contains
/// the normalized product name. Containment, not equality: listing titles
/// append qualifiers ("Nokia 1200 black").
pub fn find_name_node(tree: &DomTree, product_name: &str) -> Option<NodePath> {
    let needle = normalize_name(product_name);
    if needle.is_empty() {
        return None;
    }
    tree.leaf_text_nodes()
        .into_iter()
        .find(|(_, text)| normalize_name(text).contains(&needle))
        .map(|(path, _)| path)
}

/// Induces a pattern pair from one page, using the default step comparison.
pub fn induce(
    tree: &DomTree,
    url: &str,
    product_name: &str,
    rules: &RuleSet,
) -> Option<InductionResult> {
    induce_with_mode(tree, url, product_name, rules, SimilarityMode::default())
}

/// Absent when the name is not on the page or no number survives
/// classification. Otherwise the surviving candidate with maximum path
/// overlap against the name leaf wins; ties go to the longer candidate path,
/// then to document order.
pub fn induce_with_mode(
    tree: &DomTree,
    url: &str,
    product_name: &str,
    rules: &RuleSet,
    mode: SimilarityMode,
) -> Option<InductionResult> {
    let name_path = find_name_node(tree, product_name)?;
    let candidates = price_candidates(tree, rules);

    let mut best: Option<(usize, usize)> = None; // (similarity, candidate index)
    for (i, c) in candidates.iter().enumerate() {
        if c.verdict != Verdict::MaybeActual {
            continue;
        }
        let sim = similarity_with(&name_path, &c.path, mode);
        let better = match best {
            None => true,
            Some((best_sim, best_i)) => {
                sim > best_sim
                    || (sim == best_sim && c.path.len() > candidates[best_i].path.len())
            }
        };
        if better {
            best = Some((sim, i));
        }
    }
    let (_, winner) = best?;
    let price = &candidates[winner];

    let pair = PatternPair::new(
        XpathPattern::new(name_path, PatternRole::ProductName),
        XpathPattern::new(price.path.clone(), PatternRole::ActualProductPrice),
    )
    .expect("roles are fixed here");

    Some(InductionResult {
        url: url.to_string(),
        site: site_key(url).unwrap_or_default(),
        price_text: price.raw_text.clone(),
        pair,
    })
}
