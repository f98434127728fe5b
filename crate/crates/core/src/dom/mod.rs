//! DOM tree with root-to-node path addressing.
//!
//! HTML is parsed into an arena of elements. Direct text content is folded
//! into its owning element, so `children` always holds elements only. A node
//! is addressed by the sequence of (tag, index) steps from the document root,
//! where `index` is the 1-based position among same-tag siblings.

mod parse;

pub use parse::parse_html;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::text::normalize_ws;

#[derive(Debug, Error)]
pub enum DomError {
    /// The input contained no element content, even after repair.
    #[error("document has no element content")]
    EmptyDocument,
}

#[derive(Debug, Error)]
#[error("invalid path step `{0}`")]
pub struct PathParseError(String);

/// Index of a node inside its [`DomTree`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug)]
pub(crate) struct NodeData {
    pub(crate) tag: String,
    pub(crate) attrs: Vec<(String, String)>,
    pub(crate) parent: Option<NodeId>,
    pub(crate) children: Vec<NodeId>,
    /// Concatenated direct text content, in source order.
    pub(crate) text: String,
}

/// One step of a root-to-node path: element name plus 1-based position
/// among siblings that share the same name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathStep {
    pub tag: String,
    pub index: usize,
}

impl PathStep {
    pub fn new(tag: impl Into<String>, index: usize) -> Self {
        PathStep {
            tag: tag.into().to_lowercase(),
            index,
        }
    }
}

/// Ordered steps from the document root down to one node.
///
/// Resolving a path against the tree it was taken from returns exactly the
/// originating node. The text form prints every index explicitly:
/// `HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NodePath {
    pub steps: Vec<PathStep>,
}

impl NodePath {
    pub fn new(steps: Vec<PathStep>) -> Self {
        NodePath { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{}[{}]", step.tag.to_uppercase(), step.index)?;
        }
        Ok(())
    }
}

impl FromStr for NodePath {
    type Err = PathParseError;

    /// Accepts the canonical form; a step without an explicit index is read
    /// as index 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut steps = Vec::new();
        for part in s.split("->") {
            let part = part.trim();
            if part.is_empty() {
                return Err(PathParseError(part.to_string()));
            }
            let (tag, index) = match part.find('[') {
                Some(open) => {
                    let close = part
                        .rfind(']')
                        .filter(|&c| c > open)
                        .ok_or_else(|| PathParseError(part.to_string()))?;
                    let idx: usize = part[open + 1..close]
                        .parse()
                        .map_err(|_| PathParseError(part.to_string()))?;
                    if idx == 0 {
                        return Err(PathParseError(part.to_string()));
                    }
                    (&part[..open], idx)
                }
                None => (part, 1),
            };
            let tag = tag.trim();
            if tag.is_empty() || tag.contains(char::is_whitespace) {
                return Err(PathParseError(part.to_string()));
            }
            steps.push(PathStep::new(tag, index));
        }
        if steps.is_empty() {
            return Err(PathParseError(s.to_string()));
        }
        Ok(NodePath { steps })
    }
}

/// Parsed HTML document. Immutable once built; cheap to share across threads.
#[derive(Debug)]
pub struct DomTree {
    pub(crate) nodes: Vec<NodeData>,
    pub(crate) root: NodeId,
}

impl DomTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tag(&self, id: NodeId) -> &str {
        &self.nodes[id.0].tag
    }

    /// Raw concatenated direct text of the element (not whitespace-normalized).
    pub fn text(&self, id: NodeId) -> &str {
        &self.nodes[id.0].text
    }

    pub fn attr(&self, id: NodeId, name: &str) -> Option<&str> {
        self.nodes[id.0]
            .attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn attrs(&self, id: NodeId) -> &[(String, String)] {
        &self.nodes[id.0].attrs
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    /// All nodes of the subtree rooted at `id`, in document (pre-) order.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            out.push(cur);
            for &child in self.children(cur).iter().rev() {
                stack.push(child);
            }
        }
        out
    }

    /// Root-to-node path of `id`, with per-tag 1-based sibling indices.
    pub fn path_of(&self, id: NodeId) -> NodePath {
        let mut steps = Vec::new();
        let mut cur = id;
        loop {
            let tag = self.tag(cur).to_string();
            let index = match self.parent(cur) {
                Some(p) => {
                    let mut nth = 0;
                    for &sib in self.children(p) {
                        if self.tag(sib) == tag {
                            nth += 1;
                        }
                        if sib == cur {
                            break;
                        }
                    }
                    nth
                }
                None => 1,
            };
            steps.push(PathStep { tag, index });
            match self.parent(cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
        steps.reverse();
        NodePath { steps }
    }

    /// Walks `path` from the root; `None` when any step fails to match.
    pub fn resolve(&self, path: &NodePath) -> Option<NodeId> {
        let first = path.steps.first()?;
        if first.tag != self.tag(self.root) || first.index != 1 {
            return None;
        }
        let mut cur = self.root;
        for step in &path.steps[1..] {
            let mut nth = 0;
            let mut found = None;
            for &child in self.children(cur) {
                if self.tag(child) == step.tag {
                    nth += 1;
                    if nth == step.index {
                        found = Some(child);
                        break;
                    }
                }
            }
            cur = found?;
        }
        Some(cur)
    }

    /// Elements with non-blank direct text and no element children, in
    /// document order. Text is whitespace-normalized.
    pub fn leaf_text_nodes(&self) -> Vec<(NodePath, String)> {
        let mut out = Vec::new();
        for id in self.descendants(self.root) {
            if !self.children(id).is_empty() {
                continue;
            }
            let text = normalize_ws(self.text(id));
            if text.is_empty() {
                continue;
            }
            out.push((self.path_of(id), text));
        }
        out
    }

    /// Leaf variant keeping the node ids; used where callers need to look
    /// back at tags or attributes.
    pub fn leaf_nodes(&self) -> Vec<(NodeId, String)> {
        let mut out = Vec::new();
        for id in self.descendants(self.root) {
            if !self.children(id).is_empty() {
                continue;
            }
            let text = normalize_ws(self.text(id));
            if text.is_empty() {
                continue;
            }
            out.push((id, text));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let tree = parse_html(b"<html><body><p>hi</p></body></html>", None).unwrap();
        assert_eq!(tree.tag(tree.root()), "html");
        let body = tree.children(tree.root())[0];
        assert_eq!(tree.tag(body), "body");
        let p = tree.children(body)[0];
        assert_eq!(tree.tag(p), "p");
        assert_eq!(tree.text(p), "hi");
    }

    #[test]
    fn unclosed_inline_tags_become_siblings() {
        let tree = parse_html(b"<html><body><b>a<b>b</body></html>", None).unwrap();
        let body = tree.children(tree.root())[0];
        let bs: Vec<_> = tree
            .children(body)
            .iter()
            .filter(|&&c| tree.tag(c) == "b")
            .copied()
            .collect();
        assert_eq!(bs.len(), 2);
        assert_eq!(tree.path_of(bs[0]).steps.last().unwrap().index, 1);
        assert_eq!(tree.path_of(bs[1]).steps.last().unwrap().index, 2);
        assert_eq!(tree.text(bs[0]), "a");
        assert_eq!(tree.text(bs[1]), "b");
    }

    #[test]
    fn strike_leaf_keeps_text() {
        let tree = parse_html(
            "<html><body><table><tr><td><strike>VNĐ 590.000</strike></td></tr></table></body></html>"
                .as_bytes(),
            None,
        )
        .unwrap();
        let leaves = tree.leaf_text_nodes();
        let strike = leaves
            .iter()
            .find(|(p, _)| p.steps.last().unwrap().tag == "strike")
            .expect("strike leaf");
        assert_eq!(strike.1, "VNĐ 590.000");
    }

    #[test]
    fn path_roundtrip_and_out_of_range() {
        let tree = parse_html(
            b"<html><body><table><tr><td>Nokia 1200</td></tr><tr><td>a</td><td>b</td></tr></table></body></html>",
            None,
        )
        .unwrap();
        for id in tree.descendants(tree.root()) {
            let path = tree.path_of(id);
            assert_eq!(tree.resolve(&path), Some(id), "roundtrip for {path}");
        }
        // resolve of root path -> root node
        let root_path = tree.path_of(tree.root());
        assert_eq!(tree.resolve(&root_path), Some(tree.root()));
        // last index beyond sibling count -> absent
        let mut path: NodePath = "HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2]"
            .parse()
            .unwrap();
        assert!(tree.resolve(&path).is_some());
        path.steps.last_mut().unwrap().index = 3;
        assert!(tree.resolve(&path).is_none());
    }

    #[test]
    fn name_leaf_path_matches_worked_example() {
        let tree = parse_html(
            b"<html><body><table><tr><td>Nokia 1200</td></tr><tr><td>x</td><td>VND 540.000</td></tr></table></body></html>",
            None,
        )
        .unwrap();
        let leaves = tree.leaf_text_nodes();
        let (path, text) = &leaves[0];
        assert_eq!(text, "Nokia 1200");
        assert_eq!(
            path.to_string(),
            "HTML[1] -> BODY[1] -> TABLE[1] -> TR[1] -> TD[1]"
        );
    }

    #[test]
    fn empty_elements_yield_no_leaves() {
        let tree = parse_html(b"<html><body><div><span>  </span></div></body></html>", None).unwrap();
        assert!(tree.leaf_text_nodes().is_empty());
    }

    #[test]
    fn path_text_parses_back() {
        let path: NodePath = "HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2]".parse().unwrap();
        assert_eq!(path.steps.len(), 5);
        assert_eq!(path.steps[3], PathStep::new("tr", 2));
        assert_eq!(
            path.to_string(),
            "HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[2]"
        );
        // index defaults to 1 when omitted
        let loose: NodePath = "HTML -> BODY".parse().unwrap();
        assert_eq!(loose.steps[1], PathStep::new("body", 1));
        assert!("HTML[0]".parse::<NodePath>().is_err());
        assert!("".parse::<NodePath>().is_err());
    }
}
