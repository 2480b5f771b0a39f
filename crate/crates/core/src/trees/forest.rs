use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_tree_with, route, TreeNode, TreeParams};
use crate::error::{Error, Result};
use crate::ingest::DesignMatrix;
use crate::numerics::Matrix;
use crate::rng::{domain, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub n_estimators: usize,
    /// Share of features offered at each split, rounded up.
    pub feature_fraction: f64,
    pub seed: u64,
    /// Draw a bootstrap sample per tree. Off means every tree sees all rows.
    #[serde(default = "yes")]
    pub bootstrap: bool,
}

fn yes() -> bool {
    true
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            tree: TreeParams {
                max_depth: 10,
                min_samples_leaf: 5,
                min_samples_split: 10,
            },
            n_estimators: 100,
            feature_fraction: 1.0 / 3.0,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be at least 1".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "feature_fraction must lie in (0, 1], got {}",
                self.feature_fraction
            )));
        }
        Ok(())
    }

    /// `⌈feature_fraction · p⌉`, at least one.
    pub fn features_per_split(&self, p: usize) -> usize {
        ((self.feature_fraction * p as f64).ceil() as usize).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<TreeNode>,
    pub params: ForestParams,
    /// Rows left out of each tree's bootstrap sample.
    pub oob_indices: Vec<Vec<usize>>,
    pub n_features: usize,
}

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    forest: Forest,
}

impl Forest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ForestDocument {
            format: "lanehouse.forest".into(),
            version: 1,
            forest: self.clone(),
        })?)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let doc: ForestDocument = serde_json::from_str(src)?;
        if doc.format != "lanehouse.forest" || doc.version != 1 {
            return Err(Error::Config(format!(
                "unsupported forest document {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc.forest)
    }

    /// Total squared-error reduction credited to each feature.
    pub fn split_gain_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_features];
        for t in &self.trees {
            t.accumulate_gain(&mut totals);
        }
        totals
    }

    pub fn predict_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.row_iter().map(|r| predict_forest(self, r)).collect()
    }
}

/// Partial Fisher-Yates draw of `m` of `0..p`, returned sorted.
fn sample_features(p: usize, m: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..m {
        let j = rng.random_range(i..p);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    idx
}

/// Bagged trees. Tree `b` draws its bootstrap rows from stream `(seed, b)` and
/// the candidate features of node `k` from stream `(seed, b, k)`, so the fit
/// is identical however the trees are scheduled.
pub fn fit_forest(train: &DesignMatrix, params: &ForestParams) -> Result<Forest> {
    params.validate()?;
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::Empty("forest needs at least one training row".into()));
    }
    let p = train.n_features();
    let m = params.features_per_split(p);

    let fitted: Vec<(TreeNode, Vec<usize>)> = (0..params.n_estimators)
        .into_par_iter()
        .map(|b| {
            let b = b as u64;
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = stream(params.seed, &[domain::BOOTSTRAP, b]);
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut drawn = vec![false; n];
            rows.iter().for_each(|&r| drawn[r] = true);
            let oob = (0..n).filter(|&r| !drawn[r]).collect();
            let seed = params.seed;
            let mut sampler = move |node: usize| {
                if m >= p {
                    (0..p).collect()
                } else {
                    let mut rng = stream(seed, &[domain::FEATURES, b, node as u64]);
                    sample_features(p, m, &mut rng)
                }
            };
            fit_tree_with(train, params.tree, rows, &mut sampler).map(|t| (t, oob))
        })
        .collect::<Result<_>>()?;

    let (trees, oob_indices) = fitted.into_iter().unzip();
    Ok(Forest {
        trees,
        params: params.clone(),
        oob_indices,
        n_features: p,
    })
}

/// Mean of the tree predictions, summed left to right in tree order.
pub fn predict_forest(f: &Forest, x: &[f64]) -> Result<f64> {
    if x.len() < f.n_features {
        return Err(Error::DimensionMismatch(format!(
            "forest expects {} features, row has {}",
            f.n_features,
            x.len()
        )));
    }
    let mut sum = 0.0;
    for t in &f.trees {
        sum += route(t, x);
    }
    Ok(sum / f.trees.len() as f64)
}
