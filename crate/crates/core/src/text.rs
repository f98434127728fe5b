//! Small text helpers shared across modules.

/// Collapses runs of whitespace to a single space and trims the ends.
pub fn normalize_ws(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = true; // leading whitespace is dropped
    for ch in s.chars() {
        if ch.is_whitespace() {
            if !in_ws {
                out.push(' ');
                in_ws = true;
            }
        } else {
            out.push(ch);
            in_ws = false;
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Key form of a product name: whitespace collapse plus case folding.
/// Diacritics are preserved, so "Giá" and "Gia" stay distinct.
pub fn normalize_name(s: &str) -> String {
    normalize_ws(s).to_lowercase()
}

/// Last `n` characters of `s` (not bytes).
pub fn tail_chars(s: &str, n: usize) -> &str {
    let count = s.chars().count();
    if count <= n {
        return s;
    }
    let skip = count - n;
    let (idx, _) = s.char_indices().nth(skip).expect("skip < char count");
    &s[idx..]
}

/// First `n` characters of `s` (not bytes).
pub fn head_chars(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}
