//! Seeded synthetic rental tables in the raw column layout the default schema
//! reads. Useful for demos, tests and benchmarks when the real listing file
//! is not at hand.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{RawTable, DEFAULT_AMENITIES, SHANGHAI_DISTRICTS};
use crate::rng::{domain, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Distinct listings before any rows are blanked or repeated.
    pub rows: usize,
    pub seed: u64,
    /// Listings that get one required cell blanked.
    pub missing: usize,
    /// Extra exact copies of complete listings, appended at the end.
    pub duplicates: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rows: 200,
            seed: 0,
            missing: 0,
            duplicates: 0,
        }
    }
}

pub const SYNTH_COLUMNS: [&str; 17] = [
    "rent",
    "district",
    "bedrooms",
    "living-dining",
    "bathrooms",
    "loft",
    "sqmeters",
    "building-type",
    "use-type-en",
    "ac",
    "heat",
    "balcony",
    "wifi",
    "outdoorspace",
    "bathtub",
    "floorheating",
    "oven",
];

/// Monthly rent per square meter, by district.
const DISTRICT_RATE: [f64; 14] = [
    70.0, 120.0, 105.0, 150.0, 60.0, 160.0, 85.0, 110.0, 95.0, 55.0, 58.0, 155.0, 100.0, 98.0,
];

pub fn synthesize(spec: &SynthSpec) -> Result<RawTable> {
    let mut rng = stream(spec.seed, &[domain::SYNTH]);
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(spec.rows + spec.duplicates);
    for _ in 0..spec.rows {
        let d = rng.random_range(0..SHANGHAI_DISTRICTS.len());
        let bedrooms = rng.random_range(1..=4u32);
        let living = rng.random_range(0..=2u32);
        let bathrooms = rng.random_range(1..=bedrooms.min(3));
        let loft = rng.random_bool(0.3);
        let sqm = (rng.random_range(18.0..40.0) * f64::from(bedrooms) * 10.0).round() / 10.0;
        let building = rng.random_range(1..=3u32);
        let use_type = rng.random_range(1..=2u32);
        let amenities: Vec<bool> = (0..DEFAULT_AMENITIES.len()).map(|_| rng.random_bool(0.55)).collect();
        let count = amenities.iter().filter(|&&a| a).count() as f64;
        let noise: f64 = rng.random_range(-0.12..0.12);
        let rent = (DISTRICT_RATE[d] * sqm
            + 900.0 * f64::from(bathrooms)
            + 350.0 * count
            + if loft { 600.0 } else { 0.0 }
            + 400.0 * f64::from(building))
            * (1.0 + noise);
        let mut row = vec![
            format!("{}", rent.round().max(500.0)),
            SHANGHAI_DISTRICTS[d].to_string(),
            bedrooms.to_string(),
            living.to_string(),
            bathrooms.to_string(),
            if loft { "1" } else { "0" }.to_string(),
            format!("{sqm}"),
            building.to_string(),
            use_type.to_string(),
        ];
        row.extend(amenities.iter().map(|&a| if a { "1" } else { "0" }.to_string()));
        rows.push(row);
    }

    let missing = spec.missing.min(spec.rows);
    let mut order: Vec<usize> = (0..spec.rows).collect();
    for i in 0..missing {
        let j = rng.random_range(i..spec.rows);
        order.swap(i, j);
    }
    for &r in &order[..missing] {
        let c = rng.random_range(0..SYNTH_COLUMNS.len());
        rows[r][c].clear();
    }
    let complete = &order[missing..];
    if !complete.is_empty() {
        for _ in 0..spec.duplicates {
            let src = complete[rng.random_range(0..complete.len())];
            rows.push(rows[src].clone());
        }
    }
    RawTable::new(SYNTH_COLUMNS.iter().map(|c| c.to_string()).collect(), rows)
}
