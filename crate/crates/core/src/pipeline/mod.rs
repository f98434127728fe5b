//! Back-end extraction: apply a site's pattern pair to crawled pages, turn
//! price text into amounts, and keep the product and seed stores fed.

pub mod eval;
pub mod store;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crawler::CrawledPage;
use crate::dom::parse_html;
use crate::patterns::{apply_pattern, PatternPair};
use crate::pricing::{detect_numbers_in, marker_positions, price_candidates, RuleSet, Verdict};
use crate::text::normalize_name;
use store::{AliasTable, ProductStore, SeedStore, StoreError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PriceError {
    /// No number in the text, or the digits overflow.
    #[error("unparseable price text `{0}`")]
    UnparseablePrice(String),
    /// A number without any currency marker nearby.
    #[error("no currency marker in `{0}`")]
    AmbiguousCurrency(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Currency {
    VND,
    USD,
}

/// One extracted product observation.
///
/// `amount` is minor units for USD (cents) and whole dong for VND, which has
/// no minor unit in practice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub name: String,
    pub amount: u64,
    pub currency: Currency,
    /// The price leaf's text as extracted, e.g. "VNĐ 540.000".
    pub raw_price: String,
    pub url: String,
    pub site: String,
    pub extracted_at: DateTime<Utc>,
}

/// Applies pattern pairs in order; the first pair where both patterns
/// resolve and the price leaf still classifies as an actual price wins.
/// News and forum pages fail structurally and yield nothing.
pub fn extract_products(
    page: &CrawledPage,
    pairs: &[PatternPair],
    rules: &RuleSet,
) -> Option<(String, String)> {
    let tree = parse_html(&page.body, page.charset.as_deref()).ok()?;
    let candidates = price_candidates(&tree, rules);
    for pair in pairs {
        let Some((_, name_text)) = apply_pattern(&tree, &pair.name_pattern) else {
            continue;
        };
        let Some((price_path, price_text)) = apply_pattern(&tree, &pair.price_pattern) else {
            continue;
        };
        let still_actual = candidates
            .iter()
            .any(|c| c.verdict == Verdict::MaybeActual && c.path == price_path);
        if still_actual {
            return Some((name_text, price_text));
        }
    }
    None
}

const CURRENCY_MARKERS: &[(&str, Currency)] = &[
    ("VNĐ", Currency::VND),
    ("Đ", Currency::VND),
    ("USD", Currency::USD),
    ("$", Currency::USD),
];

/// Parses a price string into (amount, currency).
///
/// The first number in the text is the price; its currency comes from the
/// nearest marker, preferring the preceding one on a distance tie. VND
/// treats every "." and "," as a thousands separator. USD treats a final
/// separator followed by exactly two digits as the decimal point and counts
/// in cents.
pub fn normalize_price(price_text: &str) -> Result<(u64, Currency), PriceError> {
    let number = detect_numbers_in(price_text)
        .into_iter()
        .next()
        .ok_or_else(|| PriceError::UnparseablePrice(price_text.to_string()))?;

    let num_start = price_text[..number.start].chars().count();
    let num_end = num_start + number.text.chars().count();

    let mut nearest: Option<(usize, bool, Currency)> = None; // (distance, follows, currency)
    for (marker, currency) in CURRENCY_MARKERS {
        for (m_start, m_end) in marker_positions(price_text, marker) {
            let key = if m_end <= num_start {
                (num_start - m_end, false, *currency)
            } else if m_start >= num_end {
                (m_start - num_end, true, *currency)
            } else {
                continue;
            };
            let closer = match nearest {
                None => true,
                Some((d, follows, _)) => key.0 < d || (key.0 == d && follows && !key.1),
            };
            if closer {
                nearest = Some(key);
            }
        }
    }
    let (_, _, currency) =
        nearest.ok_or_else(|| PriceError::AmbiguousCurrency(price_text.to_string()))?;

    let amount = match currency {
        Currency::VND => digits_value(&number.text)
            .ok_or_else(|| PriceError::UnparseablePrice(price_text.to_string()))?,
        Currency::USD => usd_cents(&number.text)
            .ok_or_else(|| PriceError::UnparseablePrice(price_text.to_string()))?,
    };
    Ok((amount, currency))
}

fn digits_value(number: &str) -> Option<u64> {
    let mut value: u64 = 0;
    for c in number.chars() {
        if let Some(d) = c.to_digit(10) {
            value = value.checked_mul(10)?.checked_add(d as u64)?;
        }
    }
    Some(value)
}

fn usd_cents(number: &str) -> Option<u64> {
    let last_sep = number.rfind(['.', ',']);
    match last_sep {
        Some(pos) if number.len() - pos - 1 == 2 => {
            let whole = digits_value(&number[..pos])?;
            let cents = digits_value(&number[pos + 1..])?;
            whole.checked_mul(100)?.checked_add(cents)
        }
        _ => digits_value(number)?.checked_mul(100),
    }
}

/// Canonical VND rendering: "VNĐ " + dot-grouped digits, the inverse of
/// [`normalize_price`] for VND amounts.
pub fn format_vnd(amount: u64) -> String {
    let digits = amount.to_string();
    let mut grouped = String::with_capacity(digits.len() + digits.len() / 3);
    let lead = digits.len() % 3;
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && i % 3 == lead % 3 {
            grouped.push('.');
        }
        grouped.push(c);
    }
    format!("VNĐ {grouped}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsertKind {
    Inserted,
    Updated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpsertEffect {
    pub product: UpsertKind,
    pub seed_added: bool,
}

/// Stores one observation and feeds its name back into the seed store.
/// The seed side is how the system's name list keeps growing run over run.
pub fn upsert(
    record: ProductRecord,
    products: &mut ProductStore,
    seeds: &mut SeedStore,
    aliases: &AliasTable,
) -> Result<UpsertEffect, StoreError> {
    let name_key = aliases.canonical(&normalize_name(&record.name));
    let product = products.upsert(record, &name_key)?;
    let seed_added = seeds.add(&name_key)?;
    Ok(UpsertEffect {
        product,
        seed_added,
    })
}
