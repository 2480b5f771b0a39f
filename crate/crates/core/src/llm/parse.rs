use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plausible monthly rents. Numbers outside are skipped during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceWindow {
    pub min: f64,
    pub max: f64,
}

impl Default for PriceWindow {
    fn default() -> Self {
        Self { min: 100.0, max: 1e6 }
    }
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?").unwrap());

/// First number in `response` that falls inside `window`. Thousands
/// separators are accepted.
pub fn parse_price(response: &str, window: PriceWindow) -> Result<f64> {
    NUMBER
        .find_iter(response)
        .filter_map(|m| m.as_str().replace(',', "").parse::<f64>().ok())
        .find(|v| v.is_finite() && *v >= window.min && *v <= window.max)
        .ok_or_else(|| Error::Extraction {
            raw: response.to_string(),
        })
}

/// `v` with comma-grouped thousands, e.g. `8,500` or `12,345.5`.
pub fn group_thousands(v: f64) -> String {
    let s = format!("{v}");
    let (int, frac) = s.split_once('.').map_or((s.as_str(), None), |(i, f)| (i, Some(f)));
    let (sign, digits) = int.strip_prefix('-').map_or(("", int), |d| ("-", d));
    let mut grouped = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}
