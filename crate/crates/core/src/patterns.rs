//! XPath-style extraction patterns and the path-overlap similarity measure.
//!
//! A pattern is a root-to-leaf [`NodePath`] tagged with the role it extracts
//! (product name or actual price). Patterns compare, hash and persist in one
//! canonical text form, e.g.
//! `HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2] -> actual_product_price`.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dom::{DomTree, NodePath};
use crate::text::normalize_ws;

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("invalid pattern text `{0}`")]
    Parse(String),
    #[error("expected role {expected}, got {got}")]
    RoleMismatch {
        expected: PatternRole,
        got: PatternRole,
    },
}

/// What a pattern extracts when applied to a page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternRole {
    ProductName,
    ActualProductPrice,
}

impl fmt::Display for PatternRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternRole::ProductName => "product_name",
            PatternRole::ActualProductPrice => "actual_product_price",
        })
    }
}

impl FromStr for PatternRole {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "product_name" => Ok(PatternRole::ProductName),
            "actual_product_price" => Ok(PatternRole::ActualProductPrice),
            other => Err(PatternError::Parse(other.to_string())),
        }
    }
}

/// Root-to-leaf path plus role. The path is fixed at construction and never
/// empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XpathPattern {
    path: NodePath,
    role: PatternRole,
}

impl XpathPattern {
    /// Panics on an empty path; patterns only come from resolved nodes or
    /// parsed canonical text, both of which guarantee at least the root step.
    pub fn new(path: NodePath, role: PatternRole) -> Self {
        assert!(!path.is_empty(), "pattern path must be non-empty");
        XpathPattern { path, role }
    }

    pub fn path(&self) -> &NodePath {
        &self.path
    }

    pub fn role(&self) -> PatternRole {
        self.role
    }

    /// Canonical text form used for display, storage and support counting.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for XpathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.path, self.role)
    }
}

impl FromStr for XpathPattern {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path_part, role_part) = s
            .rsplit_once("->")
            .ok_or_else(|| PatternError::Parse(s.to_string()))?;
        let role: PatternRole = role_part.parse()?;
        let path: NodePath = path_part
            .trim()
            .parse()
            .map_err(|_| PatternError::Parse(s.to_string()))?;
        Ok(XpathPattern { path, role })
    }
}

impl Serialize for XpathPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for XpathPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The two patterns a page template shares: where the product name lives and
/// where its current price lives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternPair {
    pub name_pattern: XpathPattern,
    pub price_pattern: XpathPattern,
}

impl PatternPair {
    pub fn new(name_pattern: XpathPattern, price_pattern: XpathPattern) -> Result<Self, PatternError> {
        if name_pattern.role() != PatternRole::ProductName {
            return Err(PatternError::RoleMismatch {
                expected: PatternRole::ProductName,
                got: name_pattern.role(),
            });
        }
        if price_pattern.role() != PatternRole::ActualProductPrice {
            return Err(PatternError::RoleMismatch {
                expected: PatternRole::ActualProductPrice,
                got: price_pattern.role(),
            });
        }
        Ok(PatternPair {
            name_pattern,
            price_pattern,
        })
    }

    /// Stable key for grouping: both canonical texts joined by " | ".
    pub fn canonical(&self) -> String {
        format!("{} | {}", self.name_pattern, self.price_pattern)
    }
}

/// How two path steps are considered equal when measuring overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMode {
    /// Steps match on (tag, sibling index). The default: keeps a price in
    /// table row 9 from pairing with a name in row 1.
    #[default]
    TagAndIndex,
    /// Steps match on tag alone.
    TagOnly,
}

/// Length of the longest common prefix of two paths under `mode`.
pub fn similarity_with(a: &NodePath, b: &NodePath, mode: SimilarityMode) -> usize {
    a.steps
        .iter()
        .zip(&b.steps)
        .take_while(|(x, y)| match mode {
            SimilarityMode::TagAndIndex => x == y,
            SimilarityMode::TagOnly => x.tag == y.tag,
        })
        .count()
}

/// Overlap-step count between two paths, comparing (tag, index) pairs.
pub fn similarity(a: &NodePath, b: &NodePath) -> usize {
    similarity_with(a, b, SimilarityMode::TagAndIndex)
}

/// Resolves `pattern` against `tree`; yields the node's whitespace-normalized
/// text when the node exists and has text. Absence models a structural
/// mismatch between the pattern's source template and this page.
pub fn apply_pattern(tree: &DomTree, pattern: &XpathPattern) -> Option<(NodePath, String)> {
    let id = tree.resolve(pattern.path())?;
    let text = normalize_ws(tree.text(id));
    if text.is_empty() {
        return None;
    }
    Some((pattern.path().clone(), text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;

    fn path(s: &str) -> NodePath {
        s.parse().unwrap()
    }

    #[test]
    fn worked_example_overlap_is_five() {
        let a = path("HTML[1] -> BODY[1] -> TABLE[1] -> TR[1] -> TD[1] -> DIV[1]");
        let b = path("HTML[1] -> BODY[1] -> TABLE[1] -> TR[1] -> TD[1] -> DIV[2] -> FONT[1]");
        assert_eq!(similarity(&a, &b), 5);
    }

    #[test]
    fn identity_and_divergence() {
        let p = path("HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2]");
        assert_eq!(similarity(&p, &p), p.len());
        assert_eq!(similarity(&path("HTML[1] -> BODY[1]"), &path("HTML[1] -> HEAD[1]")), 1);
    }

    #[test]
    fn symmetric_and_bounded() {
        let a = path("HTML[1] -> BODY[1] -> DIV[3] -> P[1]");
        let b = path("HTML[1] -> BODY[1] -> DIV[3]");
        assert_eq!(similarity(&a, &b), similarity(&b, &a));
        assert_eq!(similarity(&a, &b), b.len());
    }

    #[test]
    fn index_sensitivity_is_the_default() {
        let a = path("HTML[1] -> BODY[1] -> TABLE[1] -> TR[1] -> TD[1]");
        let b = path("HTML[1] -> BODY[1] -> TABLE[1] -> TR[9] -> TD[1]");
        assert_eq!(similarity(&a, &b), 3);
        assert_eq!(similarity_with(&a, &b, SimilarityMode::TagOnly), 5);
    }

    #[test]
    fn canonical_text_roundtrip() {
        let p = XpathPattern::new(
            path("HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2]"),
            PatternRole::ActualProductPrice,
        );
        let text = p.to_string();
        assert_eq!(
            text,
            "HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2] -> actual_product_price"
        );
        let back: XpathPattern = text.parse().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn pattern_serde_is_the_canonical_string() {
        let p = XpathPattern::new(path("HTML[1] -> BODY[1]"), PatternRole::ProductName);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"HTML[1] -> BODY[1] -> product_name\"");
        let back: XpathPattern = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<XpathPattern>("\"HTML[1] -> nonsense\"").is_err());
    }

    #[test]
    fn pair_roles_are_enforced() {
        let name = XpathPattern::new(path("HTML[1] -> BODY[1] -> H1[1]"), PatternRole::ProductName);
        let price = XpathPattern::new(
            path("HTML[1] -> BODY[1] -> P[1]"),
            PatternRole::ActualProductPrice,
        );
        assert!(PatternPair::new(name.clone(), price.clone()).is_ok());
        assert!(PatternPair::new(price.clone(), price.clone()).is_err());
        assert!(PatternPair::new(name.clone(), name).is_err());
    }

    #[test]
    fn apply_pattern_roundtrips_on_source_and_transfers_to_template_sibling() {
        let page_a = parse_html(
            b"<html><body><table><tr><td>Nokia 1200</td></tr><tr><td>x</td><td>VND 540.000</td></tr></table></body></html>",
            None,
        )
        .unwrap();
        let page_b = parse_html(
            b"<html><body><table><tr><td>Nokia 1202</td></tr><tr><td>x</td><td>VND 630.000</td></tr></table></body></html>",
            None,
        )
        .unwrap();
        let other = parse_html(b"<html><body><div><p>news article</p></div></body></html>", None).unwrap();

        let name = XpathPattern::new(
            path("HTML[1] -> BODY[1] -> TABLE[1] -> TR[1] -> TD[1]"),
            PatternRole::ProductName,
        );
        assert_eq!(
            apply_pattern(&page_a, &name).map(|(_, t)| t).as_deref(),
            Some("Nokia 1200")
        );
        assert_eq!(
            apply_pattern(&page_b, &name).map(|(_, t)| t).as_deref(),
            Some("Nokia 1202")
        );
        assert_eq!(apply_pattern(&other, &name), None);
    }
}
