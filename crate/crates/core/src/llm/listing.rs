use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{is_truthy, parse_number, FeatureSchema, RawTable};

/// Which raw columns feed the prompt, and how amenities are named in text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptColumns {
    pub location: String,
    pub house_type: String,
    /// Text for the house type. `{}` is replaced by the raw cell.
    pub house_type_format: String,
    pub area: String,
    pub bedrooms: String,
    pub living_rooms: String,
    pub bathrooms: String,
    /// Column name to the label used in prompt text.
    pub amenities: IndexMap<String, String>,
}

impl Default for PromptColumns {
    fn default() -> Self {
        let amenities = [
            ("ac", "air conditioner"),
            ("heat", "heat"),
            ("balcony", "balcony"),
            ("wifi", "wifi"),
            ("outdoorspace", "outdoor space"),
            ("bathtub", "bathtub"),
            ("floorheating", "floor heating"),
            ("oven", "oven"),
        ];
        Self {
            location: "district".into(),
            house_type: "building-type".into(),
            house_type_format: "lane house (building type {})".into(),
            area: "sqmeters".into(),
            bedrooms: "bedrooms".into(),
            living_rooms: "living-dining".into(),
            bathrooms: "bathrooms".into(),
            amenities: amenities.iter().map(|(c, l)| (c.to_string(), l.to_string())).collect(),
        }
    }
}

/// One rental as the prompt sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Listing {
    /// Row position in the table it came from.
    pub row: usize,
    pub location: String,
    pub house_type: String,
    pub area: f64,
    pub bedrooms: f64,
    pub living_rooms: f64,
    pub bathrooms: f64,
    /// Presence flags in `PromptColumns::amenities` order.
    pub amenity_flags: Vec<bool>,
    /// Labels of the amenities present.
    pub amenities: Vec<String>,
    pub rent: f64,
}

/// A distance field value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field<'a> {
    Numeric(f64),
    Categorical(&'a str),
    Flag(bool),
}

impl Listing {
    /// Fields compared by shot selection, in [`field_names`] order.
    pub fn fields(&self) -> Vec<Field<'_>> {
        let mut f = vec![
            Field::Categorical(&self.house_type),
            Field::Numeric(self.area),
            Field::Numeric(self.bedrooms),
            Field::Numeric(self.living_rooms),
            Field::Numeric(self.bathrooms),
        ];
        f.extend(self.amenity_flags.iter().map(|&b| Field::Flag(b)));
        f
    }
}

pub fn field_names(cols: &PromptColumns) -> Vec<String> {
    let mut names = vec![
        "house_type".to_string(),
        "area".into(),
        "bedrooms".into(),
        "living_rooms".into(),
        "bathrooms".into(),
    ];
    names.extend(cols.amenities.keys().cloned());
    names
}

pub fn listings_from_table(t: &RawTable, schema: &FeatureSchema, cols: &PromptColumns) -> Result<Vec<Listing>> {
    let numeric = [
        t.column_index(&cols.area)?,
        t.column_index(&cols.bedrooms)?,
        t.column_index(&cols.living_rooms)?,
        t.column_index(&cols.bathrooms)?,
        t.column_index(&schema.target)?,
    ];
    let names = [
        &cols.area,
        &cols.bedrooms,
        &cols.living_rooms,
        &cols.bathrooms,
        &schema.target,
    ];
    let location = t.column_index(&cols.location)?;
    let house_type = t.column_index(&cols.house_type)?;
    let amenity_idx: Vec<usize> = cols
        .amenities
        .keys()
        .map(|c| t.column_index(c))
        .collect::<Result<_>>()?;
    let labels: Vec<&String> = cols.amenities.values().collect();

    t.rows()
        .iter()
        .enumerate()
        .map(|(r, cells)| {
            let mut v = [0.0; 5];
            for (slot, (&c, name)) in v.iter_mut().zip(numeric.iter().zip(names)) {
                *slot = parse_number(&cells[c], r, name)?;
            }
            let flags: Vec<bool> = amenity_idx
                .iter()
                .map(|&c| is_truthy(&cells[c], &schema.truthy))
                .collect();
            Ok(Listing {
                row: r,
                location: cells[location].trim().to_string(),
                house_type: cols.house_type_format.replace("{}", cells[house_type].trim()),
                area: v[0],
                bedrooms: v[1],
                living_rooms: v[2],
                bathrooms: v[3],
                amenities: flags
                    .iter()
                    .zip(&labels)
                    .filter(|(f, _)| **f)
                    .map(|(_, l)| l.to_string())
                    .collect(),
                amenity_flags: flags,
                rent: v[4],
            })
        })
        .collect()
}
