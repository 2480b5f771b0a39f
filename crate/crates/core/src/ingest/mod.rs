//! Loading, cleaning and encoding the raw rental table.

mod encode;
mod schema;
mod table;

pub(crate) use encode::parse_number;
pub use encode::{build_design_matrix, compute_total_ssvalue, one_hot_encode, rank_ordinal, DesignMatrix};
pub use schema::{
    default_amenity_bins, is_truthy, FeatureEntry, FeatureKind, FeatureSchema, RankBin, DEFAULT_AMENITIES,
    DEFAULT_TRUTHY, SHANGHAI_DISTRICTS,
};
pub use table::{dedup, drop_missing, load_csv, RawRecord, RawTable};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Row counts after each cleaning stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub loaded: usize,
    pub after_drop_missing: usize,
    pub after_dedup: usize,
}

/// `drop_missing` then `dedup`. `required` defaults to every column the
/// schema reads.
pub fn clean(raw: &RawTable, schema: &FeatureSchema, required: Option<&[String]>) -> Result<(RawTable, StageCounts)> {
    let default_required;
    let required = match required {
        Some(r) => r,
        None => {
            default_required = schema.required_columns();
            &default_required
        }
    };
    let kept = drop_missing(raw, required)?;
    let after_drop_missing = kept.len();
    let deduped = dedup(&kept);
    let counts = StageCounts {
        loaded: raw.len(),
        after_drop_missing,
        after_dedup: deduped.len(),
    };
    Ok((deduped, counts))
}
