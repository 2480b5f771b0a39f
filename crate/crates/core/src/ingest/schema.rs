//! Feature schema: which columns become which design-matrix columns.
//!
//! The JSON form is
//!
//! ```json
//! {
//!   "target": "rent",
//!   "truthy": ["1", "yes", "true", "有"],
//!   "features": [
//!     {"name": "sqmeters", "kind": "numeric"},
//!     {"name": "loft", "kind": "boolean"},
//!     {"name": "total-ssvalue", "kind": "ordinal",
//!      "amenities": ["ac", "heat"],
//!      "bins": [{"min": 0, "max": 3, "rank": 1}, {"min": 3, "max": 8, "rank": 2, "max_inclusive": true}]},
//!     {"name": "district", "kind": "categorical", "categories": ["Xuhui", "Pudong"]}
//!   ]
//! }
//! ```
//!
//! `column` may name a source column that differs from `name`. An ordinal
//! entry with `amenities` is derived by counting truthy amenity cells;
//! without it the source cell is parsed as the count.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Boolean,
    Ordinal,
    Categorical,
}

/// `[min, max)` (or `[min, max]` when `max_inclusive`) mapped to `rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBin {
    pub min: f64,
    pub max: f64,
    pub rank: i64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub max_inclusive: bool,
}

impl RankBin {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && (v < self.max || (self.max_inclusive && v == self.max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<RankBin>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amenities: Option<Vec<String>>,
}

impl FeatureEntry {
    pub fn source_column(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }

    /// Raw columns this entry reads.
    pub fn source_columns(&self) -> Vec<&str> {
        match &self.amenities {
            Some(a) if self.kind == FeatureKind::Ordinal => a.iter().map(String::as_str).collect(),
            _ => vec![self.source_column()],
        }
    }

    fn numeric(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
            column: None,
            categories: None,
            bins: None,
            amenities: None,
        }
    }
}

pub const DEFAULT_TRUTHY: [&str; 4] = ["1", "yes", "true", "有"];

pub const SHANGHAI_DISTRICTS: [&str; 14] = [
    "Baoshan",
    "Changning",
    "Hongkou",
    "Huangpu",
    "Jiading",
    "Jing'an",
    "Minhang",
    "Pudong",
    "Putuo",
    "Qingpu",
    "Songjiang",
    "Xuhui",
    "Yangpu",
    "Zhabei",
];

pub const DEFAULT_AMENITIES: [&str; 8] = [
    "ac",
    "heat",
    "balcony",
    "wifi",
    "outdoorspace",
    "bathtub",
    "floorheating",
    "oven",
];

pub fn default_amenity_bins() -> Vec<RankBin> {
    vec![
        RankBin {
            min: 0.0,
            max: 3.0,
            rank: 1,
            max_inclusive: false,
        },
        RankBin {
            min: 3.0,
            max: 6.0,
            rank: 2,
            max_inclusive: false,
        },
        RankBin {
            min: 6.0,
            max: 8.0,
            rank: 3,
            max_inclusive: true,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub target: String,
    #[serde(default = "default_truthy")]
    pub truthy: Vec<String>,
    pub features: Vec<FeatureEntry>,
}

fn default_truthy() -> Vec<String> {
    DEFAULT_TRUTHY.iter().map(|s| s.to_string()).collect()
}

impl Default for FeatureSchema {
    /// The lane-house attribute list: eight room and facility features
    /// followed by a full 14-way district indicator block.
    fn default() -> Self {
        let mut features = vec![
            FeatureEntry::numeric("bedrooms"),
            FeatureEntry::numeric("living-dining"),
            FeatureEntry::numeric("bathrooms"),
            FeatureEntry {
                kind: FeatureKind::Boolean,
                ..FeatureEntry::numeric("loft")
            },
            FeatureEntry::numeric("sqmeters"),
            FeatureEntry::numeric("building-type"),
            FeatureEntry::numeric("use-type-en"),
        ];
        features.push(FeatureEntry {
            kind: FeatureKind::Ordinal,
            bins: Some(default_amenity_bins()),
            amenities: Some(DEFAULT_AMENITIES.iter().map(|s| s.to_string()).collect()),
            ..FeatureEntry::numeric("total-ssvalue")
        });
        features.push(FeatureEntry {
            kind: FeatureKind::Categorical,
            categories: Some(SHANGHAI_DISTRICTS.iter().map(|s| s.to_string()).collect()),
            ..FeatureEntry::numeric("district")
        });
        Self {
            target: "rent".into(),
            truthy: default_truthy(),
            features,
        }
    }
}

impl FeatureSchema {
    pub fn from_json(src: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(src)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&src)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for e in &self.features {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", e.name)));
            }
            if e.name == self.target || e.source_column() == self.target {
                return Err(Error::Schema(format!(
                    "target `{}` must not appear among features",
                    self.target
                )));
            }
            match e.kind {
                FeatureKind::Categorical => {
                    let cats = e
                        .categories
                        .as_ref()
                        .filter(|c| !c.is_empty())
                        .ok_or_else(|| Error::Schema(format!("categorical `{}` needs categories", e.name)))?;
                    let mut seen = HashSet::new();
                    for c in cats {
                        if c.is_empty() || !seen.insert(c) {
                            return Err(Error::Schema(format!(
                                "categories of `{}` must be unique and non-empty",
                                e.name
                            )));
                        }
                    }
                }
                FeatureKind::Ordinal => {
                    let bins = e
                        .bins
                        .as_ref()
                        .ok_or_else(|| Error::Schema(format!("ordinal `{}` needs bins", e.name)))?;
                    validate_bins(&e.name, bins)?;
                }
                FeatureKind::Numeric | FeatureKind::Boolean => {}
            }
        }
        Ok(())
    }

    /// Every raw column the schema reads, target included, first-use order.
    pub fn required_columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |c: &str| {
            if !out.iter().any(|o| o == c) {
                out.push(c.to_string());
            }
        };
        push(&self.target);
        for e in &self.features {
            for c in e.source_columns() {
                push(c);
            }
        }
        out
    }

    pub fn entry(&self, name: &str) -> Option<&FeatureEntry> {
        self.features.iter().find(|e| e.name == name)
    }

    pub fn is_truthy(&self, cell: &str) -> bool {
        is_truthy(cell, &self.truthy)
    }
}

pub fn is_truthy(cell: &str, truthy: &[String]) -> bool {
    let c = cell.trim();
    truthy.iter().any(|t| t.eq_ignore_ascii_case(c))
}

fn validate_bins(name: &str, bins: &[RankBin]) -> Result<()> {
    if bins.is_empty() {
        return Err(Error::Schema(format!("ordinal `{name}` has no bins")));
    }
    for (i, b) in bins.iter().enumerate() {
        if !(b.min.is_finite() && b.max.is_finite()) || b.max < b.min {
            return Err(Error::Schema(format!("bin {i} of `{name}` is empty or unbounded")));
        }
        if b.max == b.min && !b.max_inclusive {
            return Err(Error::Schema(format!("bin {i} of `{name}` is empty")));
        }
        if let Some(next) = bins.get(i + 1) {
            if b.max_inclusive || b.max != next.min {
                return Err(Error::Schema(format!(
                    "bins {i} and {} of `{name}` overlap or leave a gap",
                    i + 1
                )));
            }
            if next.rank < b.rank {
                return Err(Error::Schema(format!("ranks of `{name}` must be non-decreasing")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_is_valid_and_round_trips() {
        let s = FeatureSchema::default();
        s.validate().unwrap();
        let back = FeatureSchema::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        let cols = s.required_columns();
        assert_eq!(cols[0], "rent");
        assert!(cols.contains(&"oven".to_string()));
        assert!(!cols.contains(&"total-ssvalue".to_string()));
    }

    #[test]
    fn rejects_target_as_feature() {
        let src = r#"{"target":"rent","features":[{"name":"rent","kind":"numeric"}]}"#;
        assert!(matches!(FeatureSchema::from_json(src), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_duplicate_categories() {
        let src = r#"{"target":"y","features":[{"name":"d","kind":"categorical","categories":["a","a"]}]}"#;
        assert!(FeatureSchema::from_json(src).is_err());
        let src = r#"{"target":"y","features":[{"name":"d","kind":"categorical","categories":[]}]}"#;
        assert!(FeatureSchema::from_json(src).is_err());
    }

    #[test]
    fn rejects_overlapping_bins() {
        let src = r#"{"target":"y","features":[{"name":"o","kind":"ordinal",
            "bins":[{"min":0,"max":4,"rank":1},{"min":3,"max":6,"rank":2}]}]}"#;
        assert!(FeatureSchema::from_json(src).is_err());
        let src = r#"{"target":"y","features":[{"name":"o","kind":"ordinal",
            "bins":[{"min":0,"max":3,"rank":1,"max_inclusive":true},{"min":3,"max":6,"rank":2}]}]}"#;
        assert!(FeatureSchema::from_json(src).is_err());
    }

    #[test]
    fn truthiness_is_case_and_space_insensitive() {
        let s = FeatureSchema::default();
        assert!(s.is_truthy(" Yes "));
        assert!(s.is_truthy("有"));
        assert!(!s.is_truthy("0"));
        assert!(!s.is_truthy(""));
    }
}
