use serde::{Deserialize, Serialize};

use super::listing::{Field, Listing};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    /// Position in the training listings.
    pub index: usize,
    pub distance: f64,
    pub same_location: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSet {
    pub k: usize,
    pub exemplars: Vec<Exemplar>,
    /// Set when `k` exceeded the number of training listings.
    pub truncated: bool,
}

/// Per-field range over the training listings, zero for non-numeric fields.
fn numeric_ranges(train: &[Listing]) -> Vec<f64> {
    let Some(first) = train.first() else {
        return Vec::new();
    };
    let width = first.fields().len();
    let mut lo = vec![f64::INFINITY; width];
    let mut hi = vec![f64::NEG_INFINITY; width];
    for l in train {
        for (j, f) in l.fields().into_iter().enumerate() {
            if let Field::Numeric(v) = f {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
    }
    lo.iter()
        .zip(&hi)
        .map(|(a, b)| if b > a { b - a } else { 0.0 })
        .collect()
}

/// Weighted mean of per-field dissimilarities: 0/1 mismatch for categorical
/// and flag fields, range-scaled absolute difference for numeric ones.
pub fn gower_distance(a: &Listing, b: &Listing, ranges: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (fa, fb)) in a.fields().into_iter().zip(b.fields()).enumerate() {
        let d = match (fa, fb) {
            (Field::Numeric(x), Field::Numeric(y)) => {
                if ranges[j] > 0.0 {
                    ((x - y).abs() / ranges[j]).min(1.0)
                } else {
                    0.0
                }
            }
            (x, y) => f64::from(u8::from(x != y)),
        };
        num += weights[j] * d;
        den += weights[j];
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// The `k` nearest training listings. Listings from the query's location come
/// first, then ascending distance, then training order.
pub fn select_shots(query: &Listing, train: &[Listing], k: usize, weights: Option<&[f64]>) -> Result<ShotSet> {
    let width = query.fields().len();
    let uniform = vec![1.0; width];
    let weights = weights.unwrap_or(&uniform);
    if weights.len() != width {
        return Err(Error::DimensionMismatch(format!(
            "{} shot weights for {width} fields",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter(
            "shot weights must be non-negative with a positive sum".into(),
        ));
    }
    if let Some(l) = train.iter().find(|l| l.fields().len() != width) {
        return Err(Error::DimensionMismatch(format!(
            "training listing {} has a different amenity set",
            l.row
        )));
    }
    if k == 0 {
        return Ok(ShotSet {
            k,
            exemplars: Vec::new(),
            truncated: false,
        });
    }

    let ranges = numeric_ranges(train);
    let mut ranked: Vec<Exemplar> = train
        .iter()
        .enumerate()
        .map(|(index, l)| Exemplar {
            index,
            distance: gower_distance(query, l, &ranges, weights),
            same_location: l.location == query.location,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.same_location
            .cmp(&a.same_location)
            .then(a.distance.total_cmp(&b.distance))
            .then(a.index.cmp(&b.index))
    });
    let truncated = k > train.len();
    ranked.truncate(k);
    Ok(ShotSet {
        k,
        exemplars: ranked,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn listing(row: usize, location: &str, area: f64, rent: f64) -> Listing {
        Listing {
            row,
            location: location.into(),
            house_type: "lane house".into(),
            area,
            bedrooms: 1.0,
            living_rooms: 1.0,
            bathrooms: 1.0,
            amenity_flags: vec![true, false],
            amenities: vec!["air conditioner".into()],
            rent,
        }
    }

    #[test]
    fn zero_shot_is_empty() {
        let train = [listing(0, "Xuhui", 40.0, 5000.0)];
        let s = select_shots(&train[0], &train, 0, None).unwrap();
        assert!(s.exemplars.is_empty() && !s.truncated);
    }

    #[test]
    fn self_match_comes_first() {
        let train: Vec<Listing> = (0..6)
            .map(|i| listing(i, "Xuhui", 30.0 + 7.0 * i as f64, 5000.0))
            .collect();
        let s = select_shots(&train[3], &train, 3, None).unwrap();
        assert_eq!(s.exemplars[0].index, 3);
        assert_eq!(s.exemplars[0].distance, 0.0);
    }

    #[test]
    fn same_location_beats_numeric_distance() {
        // Fields: house_type, area, bedrooms, living, bathrooms, 2 flags -> 7.
        // Area range over train is 100 - 10 = 90.
        let train = vec![
            listing(0, "Pudong", 50.0, 1.0),
            listing(1, "Xuhui", 100.0, 2.0),
            listing(2, "Pudong", 10.0, 3.0),
        ];
        let query = listing(9, "Xuhui", 50.0, 0.0);
        let s = select_shots(&query, &train, 3, None).unwrap();
        let order: Vec<usize> = s.exemplars.iter().map(|e| e.index).collect();
        assert_eq!(order, vec![1, 0, 2]);
        let d: Vec<f64> = s.exemplars.iter().map(|e| e.distance).collect();
        assert_eq!(d, vec![(50.0 / 90.0) / 7.0, 0.0, (40.0 / 90.0) / 7.0]);
    }

    #[test]
    fn ties_keep_training_order_and_k_truncates() {
        let train: Vec<Listing> = (0..4).map(|i| listing(i, "Jingan", 40.0, 1.0)).collect();
        let s = select_shots(&train[2], &train, 9, None).unwrap();
        assert!(s.truncated);
        let order: Vec<usize> = s.exemplars.iter().map(|e| e.index).collect();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn weights_checked() {
        let train = [listing(0, "a", 1.0, 1.0)];
        assert!(select_shots(&train[0], &train, 1, Some(&[1.0])).is_err());
        assert!(select_shots(&train[0], &train, 1, Some(&[0.0; 7])).is_err());
        let w = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(select_shots(&train[0], &train, 1, Some(&w)).is_ok());
    }
}
