use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{ModelFamily, ModelSpec, ParamSet};
use super::metrics::{mae, mse, r_squared};
use crate::error::{Error, Result};
use crate::ingest::DesignMatrix;
use crate::rng::{domain, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scoring {
    #[default]
    Mse,
    Mae,
    R2,
}

impl Scoring {
    pub fn score(self, y: &[f64], yhat: &[f64]) -> Result<f64> {
        match self {
            Self::Mse => mse(y, yhat),
            Self::Mae => mae(y, yhat),
            Self::R2 => r_squared(y, yhat),
        }
    }

    /// Whether `a` beats `b`. Equal scores never beat.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Self::R2 => a > b,
            Self::Mse | Self::Mae => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub family: ModelFamily,
    /// Values per parameter. Points are enumerated with the last key varying
    /// fastest.
    #[serde(default)]
    pub grid: IndexMap<String, Vec<f64>>,
    /// Fixed parameters shared by every point.
    #[serde(default)]
    pub base: ParamSet,
    #[serde(default = "five")]
    pub folds: usize,
    #[serde(default)]
    pub scoring: Scoring,
    #[serde(default)]
    pub seed: u64,
}

fn five() -> usize {
    5
}

impl GridSpec {
    pub fn new(family: ModelFamily) -> Self {
        Self {
            family,
            grid: IndexMap::new(),
            base: ParamSet::new(),
            folds: 5,
            scoring: Scoring::Mse,
            seed: 0,
        }
    }

    pub fn points(&self) -> Vec<ParamSet> {
        let mut points = vec![self.base.clone()];
        for (name, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        if self.family.is_tunable() && self.grid.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{} needs a non-empty grid",
                self.family
            )));
        }
        if let Some((k, _)) = self.grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::InvalidParameter(format!("grid entry {k:?} has no values")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub params: ParamSet,
    pub mean_score: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvTable {
    pub family: ModelFamily,
    pub scoring: Scoring,
    pub folds: usize,
    pub rows: Vec<CvRow>,
    pub best_index: usize,
}

impl CvTable {
    pub fn best(&self) -> &CvRow {
        &self.rows[self.best_index]
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("| params | mean {:?} |", self.scoring).to_lowercase();
        for f in 0..self.folds {
            out.push_str(&format!(" fold {} |", f + 1));
        }
        out.push('\n');
        out.push_str(&"| --- ".repeat(self.folds + 2));
        out.push_str("|\n");
        for (i, row) in self.rows.iter().enumerate() {
            let params = row
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(", ");
            let mean = super::format_sci(row.mean_score);
            let mean = if i == self.best_index {
                format!("**{mean}**")
            } else {
                mean
            };
            out.push_str(&format!("| {params} | {mean} |"));
            for s in &row.fold_scores {
                out.push_str(&format!(" {} |", super::format_sci(*s)));
            }
            out.push('\n');
        }
        out
    }
}

/// Seeded fold membership: a shuffled order cut into `k` contiguous runs whose
/// sizes differ by at most one.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || n < k {
        return Err(Error::InvalidParameter(format!("cannot cut {n} rows into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, &[domain::FOLDS]));
    Ok((0..k).map(|f| order[f * n / k..(f + 1) * n / k].to_vec()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_params: ParamSet,
    pub best_score: f64,
    pub cv_table: CvTable,
}

pub fn grid_search(d: &DesignMatrix, spec: &GridSpec) -> Result<GridResult> {
    spec.validate()?;
    let points = spec.points();
    let models: Vec<ModelSpec> = points
        .iter()
        .map(|p| ModelSpec::resolve(spec.family, p, spec.seed))
        .collect::<Result<_>>()?;
    let folds = fold_indices(d.n_rows(), spec.folds, spec.seed)?;
    let splits: Vec<(DesignMatrix, DesignMatrix)> = folds
        .iter()
        .enumerate()
        .map(|(f, held)| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect();
            (d.select_rows(&train), d.select_rows(held))
        })
        .collect();

    let k = folds.len();
    let scores: Vec<f64> = (0..models.len() * k)
        .into_par_iter()
        .map(|job| {
            let (train, held) = &splits[job % k];
            let fitted = models[job / k].fit(train)?;
            spec.scoring.score(&held.y, &fitted.predict(&held.x)?)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<CvRow> = points
        .into_iter()
        .zip(scores.chunks(k))
        .map(|(params, fold_scores)| {
            let mut sum = 0.0;
            for s in fold_scores {
                sum += s;
            }
            CvRow {
                params,
                mean_score: sum / k as f64,
                fold_scores: fold_scores.to_vec(),
            }
        })
        .collect();
    let mut best_index = 0;
    for (i, row) in rows.iter().enumerate().skip(1) {
        if spec.scoring.better(row.mean_score, rows[best_index].mean_score) {
            best_index = i;
        }
    }
    Ok(GridResult {
        best_params: rows[best_index].params.clone(),
        best_score: rows[best_index].mean_score,
        cv_table: CvTable {
            family: spec.family,
            scoring: spec.scoring,
            folds: k,
            rows,
            best_index,
        },
    })
}
