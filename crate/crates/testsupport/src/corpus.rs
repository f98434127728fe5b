//! Fixture corpora: a reference product page, per-site page templates, and
//! generators that write complete offline test corpora (pages, seeds,
//! search-provider results, gold labels, and pipeline config) to disk.
//!
//! Page texture rules the templates obey:
//! - a product's name appears in exactly one leaf element (its heading);
//! - every label ("Giá bán:") lives in its own leaf, never as mixed content;
//! - a digit-free leaf separates an excluded price from the actual price so
//!   exclusion markers stay out of the actual price's context window;
//! - decoy pages (news, index) share no root-to-leaf shape with product
//!   pages, and site-id news articles carry no digits at all.

use std::fs;
use std::io;
use std::path::Path;

/// The reference product page: one heading, a struck-through old price, the
/// actual price, a savings row, and a digit-free separator between the last
/// two.
pub fn demo_product_page() -> String {
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
    .to_string()
}

/// The default Vietnamese rule file, exactly as the core library defines it.
pub const DEFAULT_RULES_TOML: &str = r#"# Price-context rules for Vietnamese commercial pages.
prefix_markers = ["Giá", "VNĐ"]
suffix_markers = ["VNĐ", "USD", "Đ", "$"]
excluding_markers = ["Giá cũ", "Giá thị trường", "Tiết kiệm"]
excluding_tags = ["strike", "s"]
"#;

/// The default search-query shape for a product name.
pub fn default_query(name: &str) -> String {
    format!("\"{name}\" \"vnđ or usd\"")
}

pub fn slugify(name: &str) -> String {
    let mut out = String::new();
    for c in name.to_lowercase().chars() {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}

fn group_digits(n: u64, sep: char) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    let lead = digits.len() % 3;
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && i % 3 == lead {
            out.push(sep);
        }
        out.push(c);
    }
    out
}

fn usd_text(cents: u64) -> String {
    format!("{}.{:02}", cents / 100, cents % 100)
}

/// Table-layout product page (dot-grouped VND). Returns the page and the
/// actual-price leaf text.
pub fn mobifox_product(name: &str, i: usize) -> (String, String) {
    let price = 540_000 + 137_000 * i as u64;
    let old = price + 150_000;
    let price_text = format!("VNĐ {}", group_digits(price, '.'));
    let html = format!(
        concat!(
            "<html><head><title>Mobifox - Chi tiết sản phẩm</title></head><body>\n",
            "<div><h1>{name}</h1></div>\n",
            "<p>Điện thoại phổ thông bền bỉ</p>\n",
            "<table>\n",
            "<tr><td>Giá cũ:</td><td><strike>VNĐ {old}</strike></td></tr>\n",
            "<tr><td>Giá bán:</td><td>{price}</td></tr>\n",
            "<tr><td>Bảo hành chính hãng</td></tr>\n",
            "<tr><td>Tiết kiệm:</td><td>VNĐ {save}</td></tr>\n",
            "</table>\n",
            "<p><a href=\"/\">Trang chủ</a></p>\n",
            "</body></html>\n"
        ),
        name = name,
        old = group_digits(old, '.'),
        price = price_text,
        save = group_digits(150_000, '.'),
    );
    (html, price_text)
}

/// Div-layout product page (comma-grouped VND, old price in `<s>`).
pub fn techgia_product(name: &str, i: usize) -> (String, String) {
    let price = 4_990_000 + 453_000 * i as u64;
    let old = price + 500_000;
    let price_text = format!("{} VNĐ", group_digits(price, ','));
    let html = format!(
        concat!(
            "<html><head><title>Techgia.vn</title></head><body>\n",
            "<div class=\"product\">\n",
            "<h1>{name}</h1>\n",
            "<p>Hàng chính hãng</p>\n",
            "<p><span>Giá cũ:</span> <s>{old} VNĐ</s></p>\n",
            "<p><span>Giá bán:</span> <span>{price}</span></p>\n",
            "<p>Bảo hành chính hãng</p>\n",
            "</div>\n",
            "<p><a href=\"/\">Trang chủ</a></p>\n",
            "</body></html>\n"
        ),
        name = name,
        old = group_digits(old, ','),
        price = price_text,
    );
    (html, price_text)
}

/// List-layout product page (USD, label and price in one leaf).
pub fn usdeal_product(name: &str, i: usize) -> (String, String) {
    let cents = 5_999 + 1_773 * i as u64;
    let old = cents + 2_000;
    let price_text = format!("Giá: ${}", usd_text(cents));
    let html = format!(
        concat!(
            "<html><head><title>USDeal - Hàng xách tay</title></head><body>\n",
            "<h1>{name}</h1>\n",
            "<ul>\n",
            "<li>Giá cũ: ${old}</li>\n",
            "<li>Tình trạng: mới full box</li>\n",
            "<li>{price}</li>\n",
            "<li>Bảo hành quốc tế</li>\n",
            "</ul>\n",
            "<p><a href=\"/\">Trang chủ</a></p>\n",
            "</body></html>\n"
        ),
        name = name,
        old = usd_text(old),
        price = price_text,
    );
    (html, price_text)
}

/// A news article. Headline and body must stay digit-free so articles never
/// produce price candidates.
pub fn news_page(site_title: &str, headline: &str, body: &str) -> String {
    format!(
        concat!(
            "<html><head><title>{site} - Tin tức</title></head><body>\n",
            "<div class=\"article\">\n",
            "<h2>{headline}</h2>\n",
            "<p>{body}</p>\n",
            "<p>Người dùng quan tâm nhiều đến chế độ bảo hành khi mua sắm trực tuyến.</p>\n",
            "</div>\n",
            "<p><a href=\"/\">Trang chủ</a></p>\n",
            "</body></html>\n"
        ),
        site = site_title,
        headline = headline,
        body = body,
    )
}

/// A site index: link lists only, no headings shared with product pages.
pub fn index_page(site_title: &str, sections: &[(&str, Vec<(String, String)>)]) -> String {
    let mut html = format!(
        "<html><head><title>{site_title} - Trang chủ</title></head><body>\n<p>Danh mục</p>\n"
    );
    for (label, links) in sections {
        html.push_str(&format!("<p>{label}</p>\n<ul>\n"));
        for (href, text) in links {
            html.push_str(&format!("<li><a href=\"{href}\">{text}</a></li>\n"));
        }
        html.push_str("</ul>\n");
    }
    html.push_str("</body></html>\n");
    html
}

pub const E2E_SEEDS: [&str; 5] = [
    "Nokia 1200",
    "iPad 2",
    "Nokia E71",
    "Lenovo ThinkPad T61",
    "Canon PowerShot G10",
];

pub const MOBIFOX_EXTRAS: [&str; 7] = [
    "Nokia 6300",
    "Samsung Galaxy Mini",
    "Motorola V3i",
    "LG KP500",
    "Sony Ericsson K750i",
    "HTC Wildfire",
    "BlackBerry 8700",
];

pub const TECHGIA_EXTRAS: [&str; 7] = [
    "Dell Inspiron N4050",
    "HP Pavilion G4",
    "Asus K43E",
    "Acer Aspire 4739",
    "MacBook Pro 13",
    "Toshiba Satellite L745",
    "Sony Vaio EA",
];

pub const USDEAL_EXTRAS: [&str; 7] = [
    "Nikon D90",
    "Canon EOS 550D",
    "Sony Alpha A33",
    "Olympus PEN EPL1",
    "Panasonic Lumix GF2",
    "Fujifilm X100",
    "Pentax KX",
];

const NEWS: [(&str, &str); 5] = [
    (
        "Thị trường điện thoại sôi động dịp cuối năm",
        "Sức mua tăng mạnh ở phân khúc phổ thông, các cửa hàng chuẩn bị thêm hàng.",
    ),
    (
        "Mẹo chọn mua máy ảnh cho người mới",
        "Nên cầm thử máy, kiểm tra ống kính và hỏi kỹ về chế độ bảo hành.",
    ),
    (
        "Xu hướng laptop mỏng nhẹ lên ngôi",
        "Người dùng văn phòng ưu tiên máy nhẹ, pin lâu thay vì cấu hình mạnh.",
    ),
    (
        "Trải nghiệm mua sắm trực tuyến an toàn",
        "Chỉ nên thanh toán qua các kênh chính thức và giữ lại biên nhận.",
    ),
    (
        "Bí quyết bảo quản pin điện thoại",
        "Tránh để máy nóng lâu và không nên sạc qua đêm thường xuyên.",
    ),
];

fn write_file(path: &Path, content: impl AsRef<[u8]>) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)
}

fn gold_line(url: &str, name: &str, price_text: &str) -> String {
    serde_json::json!({
        "url": url,
        "gold_name": name,
        "gold_price_text": price_text,
    })
    .to_string()
}

struct SiteBuild {
    host: &'static str,
    title: &'static str,
    template: fn(&str, usize) -> (String, String),
}

/// Writes the end-to-end corpus: three template-consistent commercial sites
/// (about 60 pages), seed names, fixture search results, gold labels, rules,
/// and a pipeline config. One site carries a robots.txt with a disallowed
/// admin section whose pages are linked from its index; a polite crawl never
/// sees them and they are absent from gold.
pub fn build_e2e_corpus(root: &Path) -> io::Result<()> {
    let corpus = root.join("corpus");
    let sites = [
        SiteBuild {
            host: "www.mobifox.vn",
            title: "Mobifox",
            template: mobifox_product,
        },
        SiteBuild {
            host: "www.techgia.vn",
            title: "Techgia",
            template: techgia_product,
        },
        SiteBuild {
            host: "www.usdeal.vn",
            title: "USDeal",
            template: usdeal_product,
        },
    ];
    let extras = [MOBIFOX_EXTRAS, TECHGIA_EXTRAS, USDEAL_EXTRAS];

    let mut gold = Vec::new();
    let mut provider: serde_json::Map<String, serde_json::Value> = serde_json::Map::new();
    for seed in E2E_SEEDS {
        provider.insert(default_query(&seed.to_lowercase()), Vec::<String>::new().into());
    }

    for (site, extra) in sites.iter().zip(extras.iter()) {
        let names: Vec<&str> = E2E_SEEDS.iter().chain(extra.iter()).copied().collect();
        let mut product_links = Vec::new();
        for (i, name) in names.iter().enumerate() {
            let slug = slugify(name);
            let path = format!("/sp/{slug}.html");
            let url = format!("http://{}{}", site.host, path);
            let (html, price_text) = (site.template)(name, i);
            write_file(&corpus.join(site.host).join(&path[1..]), html)?;
            gold.push(gold_line(&url, name, &price_text));
            product_links.push((path, name.to_string()));
            if i < E2E_SEEDS.len() {
                let query = default_query(&name.to_lowercase());
                provider
                    .get_mut(&query)
                    .expect("seed query pre-registered")
                    .as_array_mut()
                    .unwrap()
                    .push(url.into());
            }
        }

        let mut news_links = Vec::new();
        for (i, (headline, body)) in NEWS.iter().enumerate() {
            let path = format!("/tin/bai-{}.html", i + 1);
            write_file(
                &corpus.join(site.host).join(&path[1..]),
                news_page(site.title, headline, body),
            )?;
            news_links.push((path, headline.to_string()));
        }

        let mut sections = vec![
            ("Sản phẩm", product_links),
            ("Tin tức", news_links),
        ];

        if site.host == "www.mobifox.vn" {
            // robots-protected admin pages: template products, outside gold
            let mut admin_links = Vec::new();
            for (k, name) in ["Nokia 8800 Arte", "Vertu Signature", "Mobiado Grand"]
                .iter()
                .enumerate()
            {
                let path = format!("/admin/sp-{}.html", k + 1);
                let (html, _) = mobifox_product(name, 20 + k);
                write_file(&corpus.join(site.host).join(&path[1..]), html)?;
                admin_links.push((path, name.to_string()));
            }
            sections.push(("Quản trị", admin_links));
            write_file(
                &corpus.join(site.host).join("robots.txt"),
                "User-agent: *\nDisallow: /admin/\n",
            )?;
        }

        write_file(
            &corpus.join(site.host).join("index.html"),
            index_page(site.title, &sections),
        )?;
    }

    let seeds: Vec<String> = E2E_SEEDS.iter().map(|s| s.to_lowercase()).collect();
    write_file(&root.join("seeds.txt"), seeds.join("\n") + "\n")?;
    write_file(
        &root.join("provider.json"),
        serde_json::to_string_pretty(&serde_json::Value::Object(provider)).unwrap() + "\n",
    )?;
    write_file(&root.join("gold.jsonl"), gold.join("\n") + "\n")?;
    write_file(&root.join("rules.vi.toml"), DEFAULT_RULES_TOML)?;
    write_file(
        &root.join("pipeline.toml"),
        concat!(
            "[paths]\n",
            "rules = \"rules.vi.toml\"\n",
            "seeds = \"seeds.txt\"\n",
            "provider = \"provider.json\"\n",
            "stores = \"out\"\n",
            "\n[discovery]\n",
            "top_k = 10\n",
            "threshold = 3\n",
            "provider = \"fixture\"\n",
            "\n[similarity]\n",
            "mode = \"tag_and_index\"\n",
            "\n[fetch]\n",
            "mode = \"corpus\"\n",
            "corpus_dir = \"corpus\"\n",
            "\n[crawl]\n",
            "max_pages = 100\n",
            "max_depth = 6\n",
            "delay_ms = 10\n",
            "timeout_ms = 5000\n",
            "user_agent = \"pricepath/0.1\"\n",
            "respect_robots = true\n",
            "\n[evaluate]\n",
            "gold = \"gold.jsonl\"\n",
        ),
    )?;
    Ok(())
}

pub const SITEID_SEEDS: [&str; 4] = [
    "Nokia 1200",
    "Nokia e71 white steel",
    "Nokia 1202",
    "Nokia 6300 silver",
];

/// Writes the site-identification corpus: four fully supported commercial
/// sites, one site supported by exactly three pages (excluded by the strict
/// threshold), three single-hit shops, and a digit-free news site.
pub fn build_siteid_corpus(root: &Path) -> io::Result<()> {
    let corpus = root.join("corpus");
    let main_sites = [
        "www.123mua.com.vn",
        "www.vatgia.com",
        "www.vinacms.vn",
        "www.chodientu.vn",
    ];
    let singles = ["www.shopalpha.vn", "www.muale.vn", "www.baogia.vn"];

    let product_url = |host: &str, name: &str| -> String {
        format!("http://{}/sp/{}.html", host, slugify(name))
    };
    let write_product = |host: &str, name: &str, i: usize| -> io::Result<()> {
        let (html, _) = if host == "www.vatgia.com" {
            techgia_product(name, i)
        } else {
            mobifox_product(name, i)
        };
        write_file(
            &corpus.join(host).join("sp").join(format!("{}.html", slugify(name))),
            html,
        )
    };

    for (i, seed) in SITEID_SEEDS.iter().enumerate() {
        for host in main_sites {
            write_product(host, seed, i)?;
        }
    }
    // support of exactly three pages: below a strict threshold of 3
    for (i, seed) in SITEID_SEEDS[..3].iter().enumerate() {
        write_product("www.raocat.vn", seed, i)?;
    }
    for host in singles {
        write_product(host, SITEID_SEEDS[0], 0)?;
    }
    for (i, (headline, body)) in NEWS[..2].iter().enumerate() {
        write_file(
            &corpus.join("www.tinmoi.vn").join("tin").join(format!("bai-{}.html", i + 1)),
            news_page("Tin Mới", headline, body),
        )?;
    }

    let article = |i: usize| format!("http://www.tinmoi.vn/tin/bai-{i}.html");
    let mut provider = serde_json::Map::new();
    let mut results = |seed: &str, urls: Vec<String>| {
        provider.insert(
            default_query(&seed.to_lowercase()),
            serde_json::Value::from(urls),
        );
    };
    let main_urls = |seed: &str| -> Vec<String> {
        main_sites.iter().map(|h| product_url(h, seed)).collect()
    };

    // ten results for the first seed: eight commercial pages, two articles
    let mut first = main_urls(SITEID_SEEDS[0]);
    first.push(product_url("www.raocat.vn", SITEID_SEEDS[0]));
    first.push(article(1));
    for host in singles {
        first.push(product_url(host, SITEID_SEEDS[0]));
    }
    first.push(article(2));
    results(SITEID_SEEDS[0], first);

    let mut second = main_urls(SITEID_SEEDS[1]);
    second.push(product_url("www.raocat.vn", SITEID_SEEDS[1]));
    second.push(article(1));
    results(SITEID_SEEDS[1], second);

    let mut third = main_urls(SITEID_SEEDS[2]);
    third.push(product_url("www.raocat.vn", SITEID_SEEDS[2]));
    third.push(article(2));
    results(SITEID_SEEDS[2], third);

    let mut fourth = main_urls(SITEID_SEEDS[3]);
    fourth.push(article(1));
    results(SITEID_SEEDS[3], fourth);

    let seeds: Vec<String> = SITEID_SEEDS.iter().map(|s| s.to_lowercase()).collect();
    write_file(&root.join("seeds.txt"), seeds.join("\n") + "\n")?;
    write_file(
        &root.join("provider.json"),
        serde_json::to_string_pretty(&serde_json::Value::Object(provider)).unwrap() + "\n",
    )?;
    write_file(&root.join("rules.vi.toml"), DEFAULT_RULES_TOML)?;
    write_file(
        &root.join("pipeline.toml"),
        concat!(
            "[paths]\n",
            "rules = \"rules.vi.toml\"\n",
            "seeds = \"seeds.txt\"\n",
            "provider = \"provider.json\"\n",
            "stores = \"out\"\n",
            "\n[discovery]\n",
            "top_k = 10\n",
            "threshold = 3\n",
            "provider = \"fixture\"\n",
            "\n[fetch]\n",
            "mode = \"corpus\"\n",
            "corpus_dir = \"corpus\"\n",
        ),
    )?;
    Ok(())
}
