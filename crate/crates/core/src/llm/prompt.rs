//! Prompt text. Each template renders the query as location, type and area,
//! features, instruction and statistics, with any exemplars ahead of it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::listing::Listing;
use crate::error::{Error, Result};

pub const DEFAULT_INSTRUCTION: &str = "Predict the house price based on the above information.";

pub const SQUARE_FEET_PER_SQUARE_METER: f64 = 10.7639;

pub const TEMPLATE_IDS: [&str; 4] = ["default", "square-feet", "reordered", "terse"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Upward,
    Downward,
    #[default]
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsBlock {
    pub min_price: f64,
    pub max_price: f64,
    /// Lower-middle element for an even count.
    pub median_price: f64,
    pub trend: Trend,
}

/// Lower-middle median: element `(n − 1) / 2` of the sorted values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

pub fn compute_statistics(train_rents: &[f64]) -> Result<StatsBlock> {
    let median_price =
        lower_median(train_rents).ok_or_else(|| Error::Empty("statistics need at least one rent".into()))?;
    Ok(StatsBlock {
        min_price: train_rents.iter().copied().fold(f64::INFINITY, f64::min),
        max_price: train_rents.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median_price,
        trend: Trend::Unspecified,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub query: Listing,
    pub instruction: String,
    pub statistics: StatsBlock,
    /// Exemplars, nearest first.
    pub shots: Vec<Listing>,
    pub template_id: String,
}

fn list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn features_sentence(l: &Listing) -> String {
    let rooms = format!(
        "It includes {} bedrooms, {} living rooms, {} bathrooms",
        l.bedrooms, l.living_rooms, l.bathrooms
    );
    if l.amenities.is_empty() {
        format!("{rooms}, and no listed amenities.")
    } else {
        format!("{rooms}, and features such as {}.", l.amenities.join(", "))
    }
}

fn area_sentence(l: &Listing, square_feet: bool) -> String {
    if square_feet {
        let area = (l.area * SQUARE_FEET_PER_SQUARE_METER).round();
        format!(
            "The property is a {}, with an area of {area} square feet.",
            l.house_type
        )
    } else {
        format!(
            "The property is a {}, with an area of {} square meters.",
            l.house_type, l.area
        )
    }
}

fn statistics_sentence(s: &StatsBlock) -> String {
    let mut out = format!(
        "The training data includes houses with prices ranging from {} to {}, with a median price of {}.",
        s.min_price, s.max_price, s.median_price
    );
    match s.trend {
        Trend::Upward => out.push_str(" The market trend is upward."),
        Trend::Downward => out.push_str(" The market trend is downward."),
        Trend::Unspecified => {}
    }
    out
}

fn describe(l: &Listing, template: &str) -> String {
    let location = format!("The house is located in {}.", l.location);
    match template {
        "default" => format!("{location}\n{}\n{}", area_sentence(l, false), features_sentence(l)),
        "square-feet" => format!("{location}\n{}\n{}", area_sentence(l, true), features_sentence(l)),
        "reordered" => format!("{}\n{}\n{location}", features_sentence(l), area_sentence(l, false)),
        _ => format!(
            "Location: {}. Type: {}. Area: {} m2. Rooms: {} bed, {} living, {} bath. Amenities: {}.",
            l.location,
            l.house_type,
            l.area,
            l.bedrooms,
            l.living_rooms,
            l.bathrooms,
            if l.amenities.is_empty() {
                "none".to_string()
            } else {
                list(&l.amenities)
            }
        ),
    }
}

fn check(spec: &PromptSpec) -> Result<()> {
    if !TEMPLATE_IDS.contains(&spec.template_id.as_str()) {
        return Err(Error::Config(format!("unknown prompt template {:?}", spec.template_id)));
    }
    if spec.instruction.trim().is_empty() {
        return Err(Error::Config("prompt instruction is empty".into()));
    }
    for l in std::iter::once(&spec.query).chain(&spec.shots) {
        if l.location.trim().is_empty() || l.house_type.trim().is_empty() {
            return Err(Error::Config(format!(
                "listing {} lacks a location or house type",
                l.row
            )));
        }
        if ![l.area, l.bedrooms, l.living_rooms, l.bathrooms, l.rent]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite(format!("listing {}", l.row)));
        }
    }
    Ok(())
}

pub fn build_prompt(spec: &PromptSpec) -> Result<String> {
    check(spec)?;
    let t = spec.template_id.as_str();
    let mut out = String::new();
    if !spec.shots.is_empty() {
        out.push_str(match t {
            "terse" => "Comparable listings:\n\n",
            _ => "Here are similar houses and their actual monthly rents.\n\n",
        });
        for (i, shot) in spec.shots.iter().enumerate() {
            let _ = match t {
                "terse" => writeln!(out, "{}. {}\nRent: {}\n", i + 1, describe(shot, t), shot.rent),
                _ => writeln!(
                    out,
                    "Example {}:\n{}\nActual rent: {}\n",
                    i + 1,
                    describe(shot, t),
                    shot.rent
                ),
            };
        }
        out.push_str(match t {
            "terse" => "Target listing:\n",
            _ => "Now consider the following house.\n",
        });
    }
    let stats = statistics_sentence(&spec.statistics);
    match t {
        "reordered" => {
            let _ = write!(out, "{stats}\n{}\n{}\n", describe(&spec.query, t), spec.instruction);
        }
        _ => {
            let _ = write!(out, "{}\n{}\n{stats}\n", describe(&spec.query, t), spec.instruction);
        }
    }
    Ok(out)
}
