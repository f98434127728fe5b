//! Tolerant HTML parsing.
//!
//! Real listing pages are rarely well-formed, so the tokenizer never fails:
//! unknown constructs are skipped, unclosed elements are closed implicitly,
//! and stray close tags are dropped. Script, style and comment content never
//! reaches the tree. The only error is a document with no element content at
//! all.

use encoding_rs::{Encoding, UTF_8};

use super::{DomError, DomTree, NodeData, NodeId};

/// Elements that never have content or a close tag.
const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Elements whose raw content is dropped entirely.
const SKIPPED_RAW_TEXT: &[&str] = &["script", "style"];

/// Elements whose raw content is kept as text but never parsed as markup.
const KEPT_RAW_TEXT: &[&str] = &["title", "textarea"];

/// Inline and list-ish elements where a repeated open tag implies the
/// previous one ended, e.g. `<b>a<b>b` is two sibling `b` elements.
const SAME_TAG_CLOSES: &[&str] = &[
    "a", "b", "i", "u", "em", "strong", "font", "small", "big", "tt", "s", "strike", "option",
    "li", "p", "tr", "td", "th", "dd", "dt",
];

/// Block-level elements that implicitly terminate an open `<p>`.
const P_CLOSERS: &[&str] = &[
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "footer", "form", "h1",
    "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "nav", "ol", "pre", "section", "table",
    "ul",
];

/// Parses `bytes` into a tree. `declared_encoding` (e.g. from an HTTP
/// Content-Type header) takes precedence over any `<meta charset>` found in
/// the first KiB; both fall back to UTF-8 with replacement.
pub fn parse_html(bytes: &[u8], declared_encoding: Option<&str>) -> Result<DomTree, DomError> {
    let encoding = declared_encoding
        .and_then(|label| Encoding::for_label(label.trim().as_bytes()))
        .or_else(|| sniff_meta_charset(&bytes[..bytes.len().min(1024)]))
        .unwrap_or(UTF_8);
    let (text, _, _) = encoding.decode(bytes);
    build(&text)
}

/// Case-insensitive scan for `charset=LABEL` inside the head of the raw
/// bytes. Good enough for `<meta charset="...">` and the http-equiv form.
fn sniff_meta_charset(head: &[u8]) -> Option<&'static Encoding> {
    let lower: Vec<u8> = head.iter().map(|b| b.to_ascii_lowercase()).collect();
    let needle = b"charset=";
    let mut at = 0;
    while let Some(pos) = find_sub(&lower[at..], needle) {
        let mut start = at + pos + needle.len();
        if start < lower.len() && (lower[start] == b'"' || lower[start] == b'\'') {
            start += 1;
        }
        let mut end = start;
        while end < lower.len() {
            match lower[end] {
                b'"' | b'\'' | b'>' | b';' | b' ' | b'\t' | b'\r' | b'\n' | b'/' => break,
                _ => end += 1,
            }
        }
        if end > start {
            if let Some(enc) = Encoding::for_label(&lower[start..end]) {
                return Some(enc);
            }
        }
        at += pos + needle.len();
    }
    None
}

fn find_sub(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[derive(Debug)]
enum Token {
    Open {
        tag: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    Close(String),
    Text(String),
}

struct Lexer<'a> {
    chars: &'a [char],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(chars: &'a [char]) -> Self {
        Lexer { chars, pos: 0 }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.peek(i).map(|p| p.to_ascii_lowercase()) == Some(c))
    }

    fn skip_until(&mut self, marker: &str) {
        while self.pos < self.chars.len() && !self.starts_with(marker) {
            self.pos += 1;
        }
        if self.pos < self.chars.len() {
            self.pos += marker.chars().count();
        }
    }

    fn next_token(&mut self) -> Option<Token> {
        loop {
            if self.pos >= self.chars.len() {
                return None;
            }
            if self.peek(0) != Some('<') {
                return Some(Token::Text(self.read_text()));
            }
            match self.peek(1) {
                Some('!') => {
                    if self.starts_with("<!--") {
                        self.skip_until("-->");
                    } else if self.starts_with("<![cdata[") {
                        self.skip_until("]]>");
                    } else {
                        // doctype or malformed declaration
                        self.skip_until(">");
                    }
                }
                Some('?') => self.skip_until(">"),
                Some('/') => {
                    self.pos += 2;
                    let name = self.read_name();
                    self.skip_until(">");
                    if !name.is_empty() {
                        return Some(Token::Close(name));
                    }
                }
                Some(c) if c.is_ascii_alphabetic() => return Some(self.read_open_tag()),
                _ => {
                    // lone '<' is literal text
                    return Some(Token::Text(self.read_text()));
                }
            }
        }
    }

    /// Consumes everything up to (and including) `</tag ...>`, returning the
    /// raw content. Entities are left untouched; raw-text elements render
    /// them verbatim anyway.
    fn raw_text_until_close(&mut self, tag: &str) -> String {
        let close = format!("</{tag}");
        let start = self.pos;
        while self.pos < self.chars.len() {
            if self.starts_with(&close) {
                let after = self.pos + close.chars().count();
                let next = self.chars.get(after).copied();
                if matches!(next, Some('>') | Some(' ') | Some('\t') | Some('\n') | Some('\r') | None)
                {
                    let end = self.pos;
                    self.pos = after;
                    self.skip_until(">");
                    return self.chars[start..end].iter().collect();
                }
            }
            self.pos += 1;
        }
        self.chars[start..].iter().collect()
    }

    fn read_text(&mut self) -> String {
        let start = self.pos;
        // first char may be a literal '<' that failed to start a tag
        self.pos += 1;
        while self.pos < self.chars.len() && self.peek(0) != Some('<') {
            self.pos += 1;
        }
        let raw: String = self.chars[start..self.pos].iter().collect();
        decode_entities(&raw)
    }

    fn read_name(&mut self) -> String {
        let mut name = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == ':' {
                name.push(c.to_ascii_lowercase());
                self.pos += 1;
            } else {
                break;
            }
        }
        name
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(0), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn read_open_tag(&mut self) -> Token {
        self.pos += 1; // '<'
        let tag = self.read_name();
        let mut attrs: Vec<(String, String)> = Vec::new();
        let mut self_closing = false;
        loop {
            self.skip_ws();
            match self.peek(0) {
                None => break,
                Some('>') => {
                    self.pos += 1;
                    break;
                }
                Some('/') => {
                    self.pos += 1;
                    if self.peek(0) == Some('>') {
                        self.pos += 1;
                        self_closing = true;
                        break;
                    }
                }
                Some(_) => {
                    let name = self.read_attr_name();
                    if name.is_empty() {
                        // junk character; step over it to guarantee progress
                        self.pos += 1;
                        continue;
                    }
                    self.skip_ws();
                    let value = if self.peek(0) == Some('=') {
                        self.pos += 1;
                        self.skip_ws();
                        self.read_attr_value()
                    } else {
                        String::new()
                    };
                    // first occurrence of an attribute wins
                    if !attrs.iter().any(|(n, _)| *n == name) {
                        attrs.push((name, value));
                    }
                }
            }
        }
        Token::Open {
            tag,
            attrs,
            self_closing,
        }
    }

    fn read_attr_name(&mut self) -> String {
        let mut name = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() || c == '=' || c == '>' || c == '/' {
                break;
            }
            name.push(c.to_ascii_lowercase());
            self.pos += 1;
        }
        name
    }

    fn read_attr_value(&mut self) -> String {
        match self.peek(0) {
            Some(q @ ('"' | '\'')) => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.chars.len() && self.peek(0) != Some(q) {
                    self.pos += 1;
                }
                let raw: String = self.chars[start..self.pos].iter().collect();
                if self.pos < self.chars.len() {
                    self.pos += 1; // closing quote
                }
                decode_entities(&raw)
            }
            _ => {
                let start = self.pos;
                while let Some(c) = self.peek(0) {
                    if c.is_whitespace() || c == '>' {
                        break;
                    }
                    self.pos += 1;
                }
                let raw: String = self.chars[start..self.pos].iter().collect();
                decode_entities(&raw)
            }
        }
    }
}

/// Decodes the handful of named entities that matter for price text plus
/// numeric references. Unknown entities pass through verbatim.
fn decode_entities(input: &str) -> String {
    if !input.contains('&') {
        return input.to_string();
    }
    let chars: Vec<char> = input.chars().collect();
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '&' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        // entity names are short; cap the lookahead
        let end = chars[i + 1..(i + 12).min(chars.len())]
            .iter()
            .position(|&c| c == ';' || c == '&' || c.is_whitespace())
            .map(|off| i + 1 + off)
            .filter(|&j| chars[j] == ';');
        let Some(end) = end else {
            out.push('&');
            i += 1;
            continue;
        };
        let name: String = chars[i + 1..end].iter().collect();
        let decoded = match name.as_str() {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some(' '),
            _ => {
                if let Some(num) = name.strip_prefix('#') {
                    let code = if let Some(hex) = num.strip_prefix(['x', 'X']) {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        num.parse::<u32>().ok()
                    };
                    code.and_then(char::from_u32)
                } else {
                    None
                }
            }
        };
        match decoded {
            Some(c) => {
                out.push(c);
                i = end + 1;
            }
            None => {
                out.push('&');
                i += 1;
            }
        }
    }
    out
}

/// True when an incoming `<incoming>` open tag terminates the currently open
/// `<top>` element.
fn implicitly_closes(top: &str, incoming: &str) -> bool {
    if top == incoming && SAME_TAG_CLOSES.contains(&incoming) {
        return true;
    }
    match incoming {
        "li" => top == "li",
        "td" | "th" => top == "td" || top == "th",
        "tr" => matches!(top, "tr" | "td" | "th"),
        "thead" | "tbody" | "tfoot" => matches!(top, "thead" | "tbody" | "tfoot" | "tr" | "td" | "th"),
        "dd" | "dt" => top == "dd" || top == "dt",
        "h1" | "h2" | "h3" | "h4" | "h5" | "h6" => {
            matches!(top, "h1" | "h2" | "h3" | "h4" | "h5" | "h6") || top == "p"
        }
        _ if P_CLOSERS.contains(&incoming) => top == "p",
        _ => false,
    }
}

struct Builder {
    nodes: Vec<NodeData>,
    /// Open element stack; empty when parsing at document level.
    stack: Vec<NodeId>,
    /// Elements completed directly at document level.
    top_level: Vec<NodeId>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            nodes: Vec::new(),
            stack: Vec::new(),
            top_level: Vec::new(),
        }
    }

    fn tag_of(&self, id: NodeId) -> &str {
        &self.nodes[id.0].tag
    }

    fn open(&mut self, tag: String, attrs: Vec<(String, String)>, self_closing: bool) -> NodeId {
        while let Some(&top) = self.stack.last() {
            if implicitly_closes(self.tag_of(top), &tag) {
                self.stack.pop();
            } else {
                break;
            }
        }
        let parent = self.stack.last().copied();
        let id = NodeId(self.nodes.len());
        self.nodes.push(NodeData {
            tag: tag.clone(),
            attrs,
            parent,
            children: Vec::new(),
            text: String::new(),
        });
        match parent {
            Some(p) => self.nodes[p.0].children.push(id),
            None => self.top_level.push(id),
        }
        if !self_closing && !VOID_ELEMENTS.contains(&tag.as_str()) {
            self.stack.push(id);
        }
        id
    }

    fn close(&mut self, tag: &str) {
        // find the nearest matching open element; a stray close tag with no
        // match is ignored rather than closing anything
        let found = self
            .stack
            .iter()
            .rposition(|&id| self.tag_of(id) == tag);
        if let Some(pos) = found {
            self.stack.truncate(pos);
        }
    }

    fn text(&mut self, s: &str) {
        if let Some(&top) = self.stack.last() {
            self.nodes[top.0].text.push_str(s);
        }
        // text outside any element is dropped
    }
}

fn build(input: &str) -> Result<DomTree, DomError> {
    let chars: Vec<char> = input.chars().collect();
    let mut lexer = Lexer::new(&chars);
    let mut builder = Builder::new();

    while let Some(token) = lexer.next_token() {
        match token {
            Token::Open {
                tag,
                attrs,
                self_closing,
            } => {
                if SKIPPED_RAW_TEXT.contains(&tag.as_str()) {
                    if !self_closing {
                        let _ = lexer.raw_text_until_close(&tag);
                    }
                    continue;
                }
                if KEPT_RAW_TEXT.contains(&tag.as_str()) {
                    let id = builder.open(tag.clone(), attrs, true);
                    if !self_closing {
                        let raw = lexer.raw_text_until_close(&tag);
                        builder.nodes[id.0].text = decode_entities(&raw);
                    }
                    continue;
                }
                builder.open(tag, attrs, self_closing);
            }
            Token::Close(tag) => builder.close(&tag),
            Token::Text(text) => builder.text(&text),
        }
    }

    let Builder {
        mut nodes,
        top_level,
        ..
    } = builder;

    let root = match top_level.len() {
        0 => return Err(DomError::EmptyDocument),
        1 => top_level[0],
        _ => {
            // multiple top-level elements: synthesize a shared root so every
            // node keeps a single-rooted path
            let id = NodeId(nodes.len());
            nodes.push(NodeData {
                tag: "html".to_string(),
                attrs: Vec::new(),
                parent: None,
                children: top_level.clone(),
                text: String::new(),
            });
            for child in top_level {
                nodes[child.0].parent = Some(id);
            }
            id
        }
    };

    Ok(DomTree { nodes, root })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> DomTree {
        parse_html(s.as_bytes(), None).unwrap()
    }

    #[test]
    fn script_style_and_comments_are_dropped() {
        let tree = parse(
            "<html><head><script>var x = '<td>9.999</td>';</script><style>p{}</style></head>\
             <body><!-- 123.456 --><p>ok</p></body></html>",
        );
        let leaves = tree.leaf_text_nodes();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].1, "ok");
    }

    #[test]
    fn void_elements_do_not_nest() {
        let tree = parse("<html><body><img src=x><br><p>after</p></body></html>");
        let body = tree.children(tree.root())[0];
        let tags: Vec<_> = tree.children(body).iter().map(|&c| tree.tag(c)).collect();
        assert_eq!(tags, ["img", "br", "p"]);
    }

    #[test]
    fn table_cells_close_implicitly() {
        let tree = parse("<html><body><table><tr><td>a<td>b<tr><td>c</table></body></html>");
        let leaves = tree.leaf_text_nodes();
        let paths: Vec<String> = leaves.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(
            paths,
            [
                "HTML[1] -> BODY[1] -> TABLE[1] -> TR[1] -> TD[1]",
                "HTML[1] -> BODY[1] -> TABLE[1] -> TR[1] -> TD[2]",
                "HTML[1] -> BODY[1] -> TABLE[1] -> TR[2] -> TD[1]",
            ]
        );
    }

    #[test]
    fn stray_close_tags_are_ignored() {
        let tree = parse("<html><body></div><p>keep</p></span></body></html>");
        assert_eq!(tree.leaf_text_nodes()[0].1, "keep");
    }

    #[test]
    fn entities_decode_in_text_and_attrs() {
        let tree = parse(r#"<html><body><a href="/x?a=1&amp;b=2">5 &lt; 6 &#272;</a></body></html>"#);
        let body = tree.children(tree.root())[0];
        let a = tree.children(body)[0];
        assert_eq!(tree.attr(a, "href"), Some("/x?a=1&b=2"));
        assert_eq!(tree.text(a), "5 < 6 Đ");
    }

    #[test]
    fn meta_charset_sniffing_decodes_windows_1258() {
        // "Giá" in windows-1258: G=0x47 i=0x69 a-acute=0xE1
        let mut bytes =
            b"<html><head><meta charset=\"windows-1258\"></head><body><p>Gi".to_vec();
        bytes.push(0xE1);
        bytes.extend_from_slice(b"</p></body></html>");
        let tree = parse_html(&bytes, None).unwrap();
        assert_eq!(tree.leaf_text_nodes()[0].1, "Giá");
    }

    #[test]
    fn declared_encoding_wins_over_meta() {
        let mut bytes = b"<html><head><meta charset=\"utf-8\"></head><body><p>Gi".to_vec();
        bytes.push(0xE1); // invalid as UTF-8, valid windows-1258
        bytes.extend_from_slice(b"</p></body></html>");
        let tree = parse_html(&bytes, Some("windows-1258")).unwrap();
        assert_eq!(tree.leaf_text_nodes()[0].1, "Giá");
    }

    #[test]
    fn utf8_replacement_on_bad_bytes() {
        let mut bytes = b"<html><body><p>a".to_vec();
        bytes.push(0xFF);
        bytes.extend_from_slice(b"b</p></body></html>");
        let tree = parse_html(&bytes, None).unwrap();
        assert_eq!(tree.leaf_text_nodes()[0].1, "a\u{FFFD}b");
    }

    #[test]
    fn empty_and_markupless_documents_error() {
        assert!(matches!(
            parse_html(b"", None),
            Err(DomError::EmptyDocument)
        ));
        assert!(matches!(
            parse_html(b"   \n\t ", None),
            Err(DomError::EmptyDocument)
        ));
        assert!(matches!(
            parse_html(b"just text, no tags", None),
            Err(DomError::EmptyDocument)
        ));
    }

    #[test]
    fn fragment_without_html_root_is_wrapped() {
        let tree = parse("<div>a</div><div>b</div>");
        assert_eq!(tree.tag(tree.root()), "html");
        assert_eq!(tree.children(tree.root()).len(), 2);
    }

    #[test]
    fn title_is_raw_text() {
        let tree = parse("<html><head><title>a <b> b</title></head><body><p>x</p></body></html>");
        let head = tree.children(tree.root())[0];
        let title = tree.children(head)[0];
        assert_eq!(tree.text(title), "a <b> b");
        assert!(tree.children(title).is_empty());
    }

    #[test]
    fn unclosed_elements_close_at_eof() {
        let tree = parse("<html><body><div><p>deep");
        assert_eq!(tree.leaf_text_nodes()[0].1, "deep");
    }

    #[test]
    fn p_closed_by_block_element() {
        let tree = parse("<html><body><p>one<div>two</div></body></html>");
        let body = tree.children(tree.root())[0];
        let tags: Vec<_> = tree.children(body).iter().map(|&c| tree.tag(c)).collect();
        assert_eq!(tags, ["p", "div"]);
    }
}
