//! Random product-like pages for oracle-equivalence testing.
//!
//! Pages mix one name leaf (usually), price-like leaves in several context
//! shapes (labeled, suffixed, struck-through, excluded by marker), and
//! neutral noise, under randomized container nesting. The generator only
//! guarantees two things: the name phrase appears in at most one leaf, and
//! the node count stays small (well under 200). Everything else, including
//! how the tolerant parser reshapes sloppy nesting, is intentionally free.

use rand::seq::SliceRandom;
use rand::Rng;

pub struct GeneratedPage {
    pub html: String,
    pub name: String,
    /// Whether the name phrase was planted in a leaf.
    pub has_name: bool,
}

const NAMES: [&str; 4] = ["Sản phẩm XQZ", "Nokia 1200", "Máy Alpha", "iPad 2"];

const FILLER: [&str; 6] = [
    "khuyến mãi lớn cuối tuần",
    "giao hàng toàn quốc",
    "bảo hành chính hãng",
    "đổi trả trong bảy ngày",
    "hỗ trợ trả góp",
    "phụ kiện đầy đủ",
];

const WRAPPERS: [&str; 6] = ["div", "ul", "table", "span", "b", "li"];

fn grouped(rng: &mut impl Rng, sep: char) -> String {
    let n: u64 = rng.gen_range(100_000..20_000_000);
    let digits = n.to_string();
    let lead = digits.len() % 3;
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && i % 3 == lead {
            out.push(sep);
        }
        out.push(c);
    }
    out
}

fn number(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..4) {
        0 => grouped(rng, '.'),
        1 => grouped(rng, ','),
        2 => rng.gen_range(10..100_000u32).to_string(),
        _ => format!("{}.{:02}", rng.gen_range(1..2_000u32), rng.gen_range(0..100u32)),
    }
}

fn leaf_unit(rng: &mut impl Rng) -> String {
    let n = number(rng);
    let filler = FILLER.choose(rng).unwrap();
    match rng.gen_range(0..12) {
        0 => format!("<tr><td>Giá bán:</td><td>VNĐ {n}</td></tr>"),
        1 => format!("<p>Giá {n} đ</p>"),
        2 => format!("<span>{n} VNĐ</span>"),
        3 => format!("<li>Giá bán: {n}đ</li>"),
        4 => format!("<p><strike>VNĐ {n}</strike></p>"),
        5 => format!("<tr><td>Giá cũ:</td><td>{n} đ</td></tr>"),
        6 => format!("<p>Tiết kiệm: VNĐ {n}</p>"),
        7 => format!("<s>{n} VNĐ</s>"),
        8 => format!("<li>Mã đơn {n}</li>"),
        9 => "<p>liên hệ 090.123.4567</p>".to_string(),
        _ => format!("<p>{filler}</p>"),
    }
}

fn name_unit(rng: &mut impl Rng, name: &str) -> String {
    match rng.gen_range(0..3) {
        0 => format!("<h1>{name}</h1>"),
        1 => format!("<b>{name} chính hãng</b>"),
        _ => format!("<td>{name}</td>"),
    }
}

fn cluster(rng: &mut impl Rng, units: &[String]) -> String {
    let depth = rng.gen_range(0..=2);
    let mut wrappers = Vec::new();
    for _ in 0..depth {
        wrappers.push(*WRAPPERS.choose(rng).unwrap());
    }
    let mut out = String::new();
    for w in &wrappers {
        out.push_str(&format!("<{w}>"));
    }
    for u in units {
        out.push_str(u);
    }
    for w in wrappers.iter().rev() {
        out.push_str(&format!("</{w}>"));
    }
    out
}

pub fn random_page(rng: &mut impl Rng) -> GeneratedPage {
    let name = NAMES.choose(rng).unwrap().to_string();
    let has_name = rng.gen_bool(0.95);
    let n_units = rng.gen_range(2..=10);
    let mut units: Vec<String> = (0..n_units).map(|_| leaf_unit(rng)).collect();
    if has_name {
        let at = rng.gen_range(0..=units.len());
        units.insert(at, name_unit(rng, &name));
    }

    let mut body = String::new();
    let mut i = 0;
    while i < units.len() {
        let take = rng.gen_range(1..=3).min(units.len() - i);
        body.push_str(&cluster(rng, &units[i..i + take]));
        i += take;
    }

    GeneratedPage {
        html: format!("<html><body>{body}</body></html>"),
        name,
        has_name,
    }
}
