use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::schema::{is_truthy, FeatureKind, FeatureSchema, RankBin};
use super::table::{RawRecord, RawTable};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Numeric design matrix plus target, the input to every regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    /// Column ranges of each one-hot group, keyed by source feature.
    #[serde(default)]
    pub one_hot_groups: Vec<(String, Range<usize>)>,
}

impl DesignMatrix {
    pub fn new(x: Matrix, y: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} targets",
                x.rows(),
                y.len()
            )));
        }
        if x.cols() != feature_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns but {} feature names",
                x.cols(),
                feature_names.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target vector".into()));
        }
        Ok(Self {
            x,
            y,
            feature_names,
            one_hot_groups: Vec::new(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            one_hot_groups: self.one_hot_groups.clone(),
        }
    }

    /// CSV with the feature columns followed by the target column.
    pub fn write_csv<W: std::io::Write>(&self, writer: W, target_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        header.push(target_name.to_string());
        w.write_record(&header)?;
        for (row, y) in self.x.row_iter().zip(&self.y) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv): the last column is the target.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let t = RawTable::from_reader(reader)?;
        let cols = t.column_order().len();
        if cols < 2 {
            return Err(Error::DimensionMismatch(
                "design csv needs features and a target".into(),
            ));
        }
        let names = t.column_order()[..cols - 1].to_vec();
        let mut data = Vec::with_capacity(t.len() * (cols - 1));
        let mut y = Vec::with_capacity(t.len());
        for (r, row) in t.rows().iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let v = parse_number(cell, r, &t.column_order()[c])?;
                if c + 1 == cols {
                    y.push(v);
                } else {
                    data.push(v);
                }
            }
        }
        let x = Matrix::new(t.len(), cols - 1, data)?;
        let mut d = Self::new(x, y, names)?;
        d.one_hot_groups = infer_groups(&d.feature_names);
        Ok(d)
    }
}

/// Groups of columns named `<feature>-<category>` are treated as one-hot.
fn infer_groups(names: &[String]) -> Vec<(String, Range<usize>)> {
    let mut groups: Vec<(String, Range<usize>)> = Vec::new();
    let mut i = 0;
    while i < names.len() {
        if let Some((prefix, _)) = names[i].split_once('-') {
            let start = i;
            let mut end = i + 1;
            while end < names.len() && names[end].split_once('-').is_some_and(|(p, _)| p == prefix) {
                end += 1;
            }
            if end - start > 1 {
                groups.push((prefix.to_string(), start..end));
                i = end;
                continue;
            }
        }
        i += 1;
    }
    groups
}

pub(crate) fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::ParseNumber {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::ParseNumber {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        });
    }
    Ok(v)
}

/// Number of amenity cells that read as truthy.
pub fn compute_total_ssvalue(record: &RawRecord<'_>, amenity_columns: &[String], truthy: &[String]) -> Result<usize> {
    let mut count = 0;
    for c in amenity_columns {
        if is_truthy(record.get(c)?, truthy) {
            count += 1;
        }
    }
    Ok(count)
}

pub fn rank_ordinal(count: f64, bins: &[RankBin]) -> Result<i64> {
    bins.iter()
        .find(|b| b.contains(count))
        .map(|b| b.rank)
        .ok_or(Error::OrdinalOutOfRange(count))
}

pub fn one_hot_encode(value: &str, categories: &[String]) -> Result<Vec<f64>> {
    let pos = categories
        .iter()
        .position(|c| c == value)
        .ok_or_else(|| Error::UnseenCategory {
            column: String::new(),
            value: value.to_string(),
        })?;
    let mut v = vec![0.0; categories.len()];
    v[pos] = 1.0;
    Ok(v)
}

/// Encode a cleaned table. Categorical features expand in category order to
/// columns named `<feature>-<category>`.
pub fn build_design_matrix(t: &RawTable, schema: &FeatureSchema) -> Result<DesignMatrix> {
    schema.validate()?;
    let target_idx = t.column_index(&schema.target)?;
    for e in &schema.features {
        for c in e.source_columns() {
            t.column_index(c)?;
        }
    }

    let mut names = Vec::new();
    let mut groups = Vec::new();
    for e in &schema.features {
        match e.kind {
            FeatureKind::Categorical => {
                let cats = e.categories.as_deref().unwrap_or_default();
                let start = names.len();
                names.extend(cats.iter().map(|c| format!("{}-{c}", e.name)));
                groups.push((e.name.clone(), start..names.len()));
            }
            _ => names.push(e.name.clone()),
        }
    }

    let p = names.len();
    let mut data = Vec::with_capacity(t.len() * p);
    let mut y = Vec::with_capacity(t.len());
    for (r, rec) in t.records().enumerate() {
        y.push(parse_number(&rec.cells()[target_idx], r, &schema.target)?);
        for e in &schema.features {
            match e.kind {
                FeatureKind::Numeric => data.push(parse_number(rec.get(e.source_column())?, r, e.source_column())?),
                FeatureKind::Boolean => data.push(if schema.is_truthy(rec.get(e.source_column())?) {
                    1.0
                } else {
                    0.0
                }),
                FeatureKind::Ordinal => {
                    let count = match &e.amenities {
                        Some(a) => compute_total_ssvalue(&rec, a, &schema.truthy)? as f64,
                        None => parse_number(rec.get(e.source_column())?, r, e.source_column())?,
                    };
                    let bins = e.bins.as_deref().unwrap_or_default();
                    data.push(rank_ordinal(count, bins)? as f64);
                }
                FeatureKind::Categorical => {
                    let cell = rec.get(e.source_column())?.trim();
                    let cats = e.categories.as_deref().unwrap_or_default();
                    let enc = one_hot_encode(cell, cats).map_err(|_| Error::UnseenCategory {
                        column: format!("{} (row {r})", e.source_column()),
                        value: cell.to_string(),
                    })?;
                    data.extend(enc);
                }
            }
        }
    }
    let x = Matrix::new(t.len(), p, data)?;
    let mut d = DesignMatrix::new(x, y, names)?;
    d.one_hot_groups = groups;
    Ok(d)
}
