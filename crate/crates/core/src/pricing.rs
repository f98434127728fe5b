//! Price-candidate detection and rule-based classification.
//!
//! Detection finds numeric strings in leaf text; classification decides per
//! number whether it looks like the price a buyer pays now, using marker
//! rules around the number and tag rules above it. Markers are configured,
//! not hardcoded: the shipped default covers Vietnamese storefronts, and a
//! different rules file retargets the whole system to another language.

use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{DomTree, NodeId, NodePath};
use crate::text::{head_chars, tail_chars};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("cannot read rules file {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid rules file: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Marker and tag rules driving classification.
///
/// Marker matching is case-insensitive and diacritic-exact, and a marker
/// never matches glued to other letters: suffix "Đ" matches in "540.000đ"
/// but not inside "điện".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    /// Markers that, occurring before a number, mark it as a price.
    pub prefix_markers: Vec<String>,
    /// Markers that, occurring after a number, mark it as a price.
    pub suffix_markers: Vec<String>,
    /// Markers that veto a number near them (old prices, savings amounts).
    pub excluding_markers: Vec<String>,
    /// Element names whose content is never a current price.
    pub excluding_tags: Vec<String>,
}

impl RuleSet {
    /// The default Vietnamese rule set.
    pub fn vietnamese_default() -> Self {
        RuleSet {
            prefix_markers: vec!["Giá".into(), "VNĐ".into()],
            suffix_markers: vec!["VNĐ".into(), "USD".into(), "Đ".into(), "$".into()],
            excluding_markers: vec![
                "Giá cũ".into(),
                "Giá thị trường".into(),
                "Tiết kiệm".into(),
            ],
            excluding_tags: vec!["strike".into(), "s".into()],
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, RuleError> {
        let mut rules: RuleSet = toml::from_str(s)?;
        for tag in &mut rules.excluding_tags {
            *tag = tag.to_lowercase();
        }
        Ok(rules)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RuleError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RuleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn tag_excluded(&self, tag: &str) -> bool {
        self.excluding_tags.iter().any(|t| t == tag)
    }
}

/// How a detected number was judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Passed a prefix/suffix rule and no excluding rule.
    MaybeActual,
    /// An excluding marker sits in the context window.
    ExcludedMarker,
    /// The leaf or an ancestor carries an excluding tag.
    ExcludedTag,
    /// No rule fired.
    NotPrice,
}

/// One detected number with its judgement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceCandidate {
    pub path: NodePath,
    /// Whitespace-normalized text of the whole leaf.
    pub raw_text: String,
    /// The numeric substring of `raw_text` that was judged.
    pub number_text: String,
    pub verdict: Verdict,
}

/// A numeric substring and its byte span within the leaf text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberMatch {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Whole-token shape of a price-like number: either grouped thousands
/// ("12.345.678", "1,299.99") or a plain digit run with an optional
/// two-digit decimal.
static NUMBER_SHAPE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:\d{1,3}(?:[.,]\d{3})+(?:[.,]\d{1,2})?|\d+(?:[.,]\d{1,2})?)$").unwrap()
});

/// Finds every number in `text`, longest-first at each position: a maximal
/// run of digits and separators either matches the grammar as a whole or
/// yields nothing. Phone numbers ("0912.345.678") and version strings
/// ("1.2.3") are runs that fail the shape test, so they produce no match
/// instead of fragments.
pub fn detect_numbers_in(text: &str) -> Vec<NumberMatch> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() && bytes[i] != b'.' && bytes[i] != b',' {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b',')
        {
            i += 1;
        }
        // trim separators hanging off the edges ("...500." -> "500")
        let mut start = run_start;
        let mut end = i;
        while start < end && !bytes[start].is_ascii_digit() {
            start += 1;
        }
        while end > start && !bytes[end - 1].is_ascii_digit() {
            end -= 1;
        }
        if start == end {
            continue;
        }
        let token = &text[start..end];
        if NUMBER_SHAPE.is_match(token) {
            out.push(NumberMatch {
                text: token.to_string(),
                start,
                end,
            });
        }
    }
    out
}

/// Number detection over leaves, order preserved.
pub fn detect_numbers(leaves: &[(NodePath, String)]) -> Vec<(NodePath, String)> {
    let mut out = Vec::new();
    for (path, text) in leaves {
        for m in detect_numbers_in(text) {
            out.push((path.clone(), m.text));
        }
    }
    out
}

fn char_ieq(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

fn marker_matches_at(text: &[char], at: usize, marker: &[char]) -> bool {
    if at + marker.len() > text.len() {
        return false;
    }
    if !text[at..at + marker.len()]
        .iter()
        .zip(marker)
        .all(|(&a, &b)| char_ieq(a, b))
    {
        return false;
    }
    // a marker glued to letters is part of a longer word, not a marker
    if at > 0 && text[at - 1].is_alphabetic() {
        return false;
    }
    let after = at + marker.len();
    if after < text.len() && text[after].is_alphabetic() {
        return false;
    }
    true
}

/// Case-insensitive, word-boundary marker search.
pub(crate) fn contains_marker(text: &str, marker: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    let marker: Vec<char> = marker.chars().collect();
    if marker.is_empty() {
        return false;
    }
    (0..chars.len()).any(|i| marker_matches_at(&chars, i, &marker))
}

/// Char positions of every boundary-valid occurrence of `marker` in `text`.
pub(crate) fn marker_positions(text: &str, marker: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let marker: Vec<char> = marker.chars().collect();
    if marker.is_empty() {
        return Vec::new();
    }
    (0..chars.len())
        .filter(|&i| marker_matches_at(&chars, i, &marker))
        .map(|i| (i, i + marker.len()))
        .collect()
}

/// Context around one number: up to 40 characters before it and after it,
/// spilling into the nearest neighbouring leaf on each side.
struct ContextWindow {
    before: String,
    after: String,
}

const WINDOW_CHARS: usize = 40;

fn window_for(
    leaf_text: &str,
    span: (usize, usize),
    prev_leaf: Option<&str>,
    next_leaf: Option<&str>,
) -> ContextWindow {
    let mut before = String::new();
    if let Some(prev) = prev_leaf {
        before.push_str(prev);
        before.push(' ');
    }
    before.push_str(&leaf_text[..span.0]);

    let mut after = String::from(&leaf_text[span.1..]);
    if let Some(next) = next_leaf {
        after.push(' ');
        after.push_str(next);
    }

    ContextWindow {
        before: tail_chars(&before, WINDOW_CHARS).to_string(),
        after: head_chars(&after, WINDOW_CHARS).to_string(),
    }
}

fn verdict_for(
    tree: &DomTree,
    node: Option<NodeId>,
    window: &ContextWindow,
    rules: &RuleSet,
) -> Verdict {
    // tag exclusion beats everything: struck-through content is dead even
    // when it carries a currency marker
    let mut cur = node;
    while let Some(id) = cur {
        if rules.tag_excluded(tree.tag(id)) {
            return Verdict::ExcludedTag;
        }
        cur = tree.parent(id);
    }
    let in_either = |m: &String| {
        contains_marker(&window.before, m) || contains_marker(&window.after, m)
    };
    if rules.excluding_markers.iter().any(in_either) {
        return Verdict::ExcludedMarker;
    }
    let prefixed = rules
        .prefix_markers
        .iter()
        .any(|m| contains_marker(&window.before, m));
    let suffixed = rules
        .suffix_markers
        .iter()
        .any(|m| contains_marker(&window.after, m));
    if prefixed || suffixed {
        return Verdict::MaybeActual;
    }
    Verdict::NotPrice
}

/// Classifies one detected number. `raw_text` is the leaf's normalized text
/// and `number_text` a substring of it from [`detect_numbers`]; when the
/// number occurs several times in the leaf, the first occurrence is judged.
pub fn classify(
    path: &NodePath,
    raw_text: &str,
    number_text: &str,
    tree: &DomTree,
    rules: &RuleSet,
) -> PriceCandidate {
    let node = tree.resolve(path);
    let span = match raw_text.find(number_text) {
        Some(start) => (start, start + number_text.len()),
        None => {
            return PriceCandidate {
                path: path.clone(),
                raw_text: raw_text.to_string(),
                number_text: number_text.to_string(),
                verdict: Verdict::NotPrice,
            }
        }
    };
    let (prev, next) = match node {
        Some(id) => neighbour_texts(tree, id),
        None => (None, None),
    };
    let window = window_for(raw_text, span, prev.as_deref(), next.as_deref());
    PriceCandidate {
        path: path.clone(),
        raw_text: raw_text.to_string(),
        number_text: number_text.to_string(),
        verdict: verdict_for(tree, node, &window, rules),
    }
}

fn neighbour_texts(tree: &DomTree, id: NodeId) -> (Option<String>, Option<String>) {
    let leaves = tree.leaf_nodes();
    let pos = leaves.iter().position(|(leaf, _)| *leaf == id);
    match pos {
        Some(p) => (
            p.checked_sub(1).map(|i| leaves[i].1.clone()),
            leaves.get(p + 1).map(|(_, t)| t.clone()),
        ),
        None => (None, None),
    }
}

/// Detects and classifies every number on the page, in document order
/// (leaves top to bottom, numbers left to right within a leaf).
pub fn price_candidates(tree: &DomTree, rules: &RuleSet) -> Vec<PriceCandidate> {
    let leaves = tree.leaf_nodes();
    let mut out = Vec::new();
    for (pos, (id, text)) in leaves.iter().enumerate() {
        let numbers = detect_numbers_in(text);
        if numbers.is_empty() {
            continue;
        }
        let prev = pos.checked_sub(1).map(|i| leaves[i].1.as_str());
        let next = leaves.get(pos + 1).map(|(_, t)| t.as_str());
        let path = tree.path_of(*id);
        for m in numbers {
            let window = window_for(text, (m.start, m.end), prev, next);
            out.push(PriceCandidate {
                path: path.clone(),
                raw_text: text.clone(),
                number_text: m.text,
                verdict: verdict_for(tree, Some(*id), &window, rules),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;

    fn texts(matches: &[NumberMatch]) -> Vec<&str> {
        matches.iter().map(|m| m.text.as_str()).collect()
    }

    #[test]
    fn detects_plain_and_grouped_numbers() {
        assert_eq!(texts(&detect_numbers_in("Nokia 1200")), ["1200"]);
        assert_eq!(texts(&detect_numbers_in("VNĐ 590.000")), ["590.000"]);
        assert_eq!(texts(&detect_numbers_in("$1,299.99")), ["1,299.99"]);
        assert_eq!(detect_numbers_in("no digits here"), []);
    }

    #[test]
    fn grouped_number_is_one_match_not_three() {
        let found = detect_numbers_in("12.345.678");
        assert_eq!(texts(&found), ["12.345.678"]);
    }

    #[test]
    fn malformed_runs_yield_nothing() {
        assert_eq!(detect_numbers_in("call 0912.345.678 now"), []);
        assert_eq!(detect_numbers_in("v1.2.3"), []);
    }

    #[test]
    fn edge_separators_are_trimmed() {
        assert_eq!(texts(&detect_numbers_in("khoảng .500, nhé")), ["500"]);
        let m = &detect_numbers_in("x 540.000, y")[0];
        assert_eq!(m.text, "540.000");
        assert_eq!(&"x 540.000, y"[m.start..m.end], "540.000");
    }

    #[test]
    fn two_numbers_in_one_leaf() {
        assert_eq!(
            texts(&detect_numbers_in("1.000.000 - 2.000.000")),
            ["1.000.000", "2.000.000"]
        );
    }

    #[test]
    fn marker_matching_is_case_insensitive_and_bounded() {
        assert!(contains_marker("giá bán", "Giá"));
        assert!(contains_marker("540.000đ", "Đ"));
        assert!(contains_marker("25 USD", "usd"));
        // glued to letters: part of a word, not a marker
        assert!(!contains_marker("điện thoại", "Đ"));
        assert!(!contains_marker("usda", "usd"));
        // diacritic-exact: "Gia" is a different word
        assert!(!contains_marker("gia đình", "Giá"));
    }

    fn demo_tree() -> DomTree {
        parse_html(
            concat!(
                "<html><body>",
                "<div><h1>Nokia 1200</h1></div>",
                "<p>Điện thoại phổ thông bền bỉ</p>",
                "<table>",
                "<tr><td>Giá cũ:</td><td><strike>VNĐ 590.000</strike></td></tr>",
                "<tr><td>Giá bán:</td><td>VNĐ 540.000</td></tr>",
                "<tr><td>Bảo hành chính hãng</td></tr>",
                "<tr><td>Tiết kiệm:</td><td>VNĐ 100.000</td></tr>",
                "</table>",
                "</body></html>"
            )
            .as_bytes(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn demo_page_numbers_in_order() {
        let tree = demo_tree();
        let found = detect_numbers(&tree.leaf_text_nodes());
        let nums: Vec<&str> = found.iter().map(|(_, n)| n.as_str()).collect();
        assert_eq!(nums, ["1200", "590.000", "540.000", "100.000"]);
    }

    #[test]
    fn demo_page_verdicts() {
        let tree = demo_tree();
        let rules = RuleSet::vietnamese_default();
        let candidates = price_candidates(&tree, &rules);
        let verdicts: Vec<(&str, Verdict)> = candidates
            .iter()
            .map(|c| (c.number_text.as_str(), c.verdict))
            .collect();
        assert_eq!(
            verdicts,
            [
                ("1200", Verdict::NotPrice),
                ("590.000", Verdict::ExcludedTag),
                ("540.000", Verdict::MaybeActual),
                ("100.000", Verdict::ExcludedMarker),
            ]
        );
        let actual: Vec<_> = candidates
            .iter()
            .filter(|c| c.verdict == Verdict::MaybeActual)
            .collect();
        assert_eq!(actual.len(), 1);
        assert_eq!(actual[0].raw_text, "VNĐ 540.000");
    }

    #[test]
    fn tag_exclusion_beats_markers() {
        // struck-through content keeps its VNĐ prefix yet is still excluded
        let tree = parse_html(
            b"<html><body><strike>VN\xc4\x90 590.000</strike></body></html>",
            None,
        )
        .unwrap();
        let rules = RuleSet::vietnamese_default();
        let c = &price_candidates(&tree, &rules)[0];
        assert_eq!(c.verdict, Verdict::ExcludedTag);
    }

    #[test]
    fn excluding_marker_beats_prefix_acceptance() {
        let tree = parse_html(
            "<html><body><p>Giá cũ: VNĐ 590.000</p></body></html>".as_bytes(),
            None,
        )
        .unwrap();
        let rules = RuleSet::vietnamese_default();
        let c = &price_candidates(&tree, &rules)[0];
        assert_eq!(c.verdict, Verdict::ExcludedMarker);
    }

    #[test]
    fn ancestor_tag_exclusion() {
        let tree = parse_html(
            b"<html><body><s><span><font>VND 590.000</font></span></s></body></html>",
            None,
        )
        .unwrap();
        let rules = RuleSet::vietnamese_default();
        let c = &price_candidates(&tree, &rules)[0];
        assert_eq!(c.verdict, Verdict::ExcludedTag);
    }

    #[test]
    fn marker_found_across_leaf_boundary() {
        let tree = parse_html(
            "<html><body><td>Giá bán</td><td>540.000</td></body></html>".as_bytes(),
            None,
        )
        .unwrap();
        let rules = RuleSet::vietnamese_default();
        let c = &price_candidates(&tree, &rules)[0];
        assert_eq!(c.verdict, Verdict::MaybeActual);
    }

    #[test]
    fn window_is_limited_to_forty_chars() {
        let filler = "x".repeat(45);
        let html = format!("<html><body><p>Giá {filler} 540.000</p></body></html>");
        let tree = parse_html(html.as_bytes(), None).unwrap();
        let rules = RuleSet::vietnamese_default();
        let c = &price_candidates(&tree, &rules)[0];
        assert_eq!(c.verdict, Verdict::NotPrice);
    }

    #[test]
    fn classify_matches_batch_judgement() {
        let tree = demo_tree();
        let rules = RuleSet::vietnamese_default();
        for c in price_candidates(&tree, &rules) {
            let single = classify(&c.path, &c.raw_text, &c.number_text, &tree, &rules);
            assert_eq!(single, c);
        }
    }

    #[test]
    fn rules_roundtrip_through_toml() {
        let rules = RuleSet::vietnamese_default();
        let text = toml::to_string(&rules).unwrap();
        let back = RuleSet::from_toml_str(&text).unwrap();
        assert_eq!(back, rules);
        assert!(RuleSet::from_toml_str("prefix_markers = [\"Giá\"]").is_err());
    }

    #[test]
    fn excluding_tags_are_case_normalized() {
        let rules = RuleSet::from_toml_str(
            "prefix_markers = [\"Giá\"]\nsuffix_markers = [\"Đ\"]\nexcluding_markers = []\nexcluding_tags = [\"STRIKE\"]",
        )
        .unwrap();
        assert_eq!(rules.excluding_tags, ["strike"]);
    }
}
