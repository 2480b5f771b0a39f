use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DesignMatrix;
use crate::models::{fit_lasso, fit_mlr, fit_ridge, predict_linear, FitConfig, LinearModel};
use crate::numerics::Matrix;
use crate::trees::{fit_forest, fit_tree, predict_tree_rows, Forest, ForestParams, TreeNode, TreeParams};

/// Named hyperparameters. Flags (`standardize`, `bootstrap`) are 0 or 1.
pub type ParamSet = IndexMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Mlr,
    Ridge,
    Lasso,
    Tree,
    Forest,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [Self::Mlr, Self::Ridge, Self::Lasso, Self::Tree, Self::Forest];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mlr => "mlr",
            Self::Ridge => "ridge",
            Self::Lasso => "lasso",
            Self::Tree => "tree",
            Self::Forest => "forest",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Self::Mlr => &[],
            Self::Ridge => &["lambda", "standardize"],
            Self::Lasso => &["lambda", "standardize", "tolerance", "max_iterations"],
            Self::Tree => &["max_depth", "min_samples_leaf", "min_samples_split"],
            Self::Forest => &[
                "n_estimators",
                "max_depth",
                "min_samples_leaf",
                "min_samples_split",
                "feature_fraction",
                "bootstrap",
                "seed",
            ],
        }
    }

    pub fn is_tunable(self) -> bool {
        self != Self::Mlr
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model family {s:?}")))
    }
}

/// A family plus fully resolved hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Mlr,
    Ridge(FitConfig),
    Lasso(FitConfig),
    Tree(TreeParams),
    Forest(ForestParams),
}

fn count(name: &str, v: f64) -> Result<usize> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be a non-negative integer, got {v}"
        )))
    }
}

fn flag(name: &str, v: f64) -> Result<bool> {
    if v == 0.0 {
        Ok(false)
    } else if v == 1.0 {
        Ok(true)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be 0 or 1, got {v}")))
    }
}

impl ModelSpec {
    /// Resolves `params` over the family defaults. `seed` seeds the forest
    /// unless `params` carries its own.
    pub fn resolve(family: ModelFamily, params: &ParamSet, seed: u64) -> Result<Self> {
        let known = family.parameter_names();
        if let Some(bad) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!("{family} has no parameter {bad:?}")));
        }
        let spec = match family {
            ModelFamily::Mlr => Self::Mlr,
            ModelFamily::Ridge | ModelFamily::Lasso => {
                let mut cfg = FitConfig::default();
                for (k, &v) in params {
                    match k.as_str() {
                        "lambda" => cfg.lambda = v,
                        "standardize" => cfg.standardize = flag(k, v)?,
                        "tolerance" => cfg.tolerance = v,
                        "max_iterations" => cfg.max_iterations = count(k, v)?,
                        _ => unreachable!(),
                    }
                }
                cfg.validate()?;
                if family == ModelFamily::Ridge {
                    Self::Ridge(cfg)
                } else {
                    Self::Lasso(cfg)
                }
            }
            ModelFamily::Tree => {
                let mut t = TreeParams::default();
                apply_tree(&mut t, params)?;
                t.validate()?;
                Self::Tree(t)
            }
            ModelFamily::Forest => {
                let mut f = ForestParams {
                    seed,
                    ..Default::default()
                };
                apply_tree(&mut f.tree, params)?;
                for (k, &v) in params {
                    match k.as_str() {
                        "n_estimators" => f.n_estimators = count(k, v)?,
                        "feature_fraction" => f.feature_fraction = v,
                        "bootstrap" => f.bootstrap = flag(k, v)?,
                        "seed" => f.seed = count(k, v)? as u64,
                        _ => {}
                    }
                }
                f.validate()?;
                Self::Forest(f)
            }
        };
        Ok(spec)
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            Self::Mlr => ModelFamily::Mlr,
            Self::Ridge(_) => ModelFamily::Ridge,
            Self::Lasso(_) => ModelFamily::Lasso,
            Self::Tree(_) => ModelFamily::Tree,
            Self::Forest(_) => ModelFamily::Forest,
        }
    }

    pub fn fit(&self, train: &DesignMatrix) -> Result<FittedModel> {
        Ok(match self {
            Self::Mlr => FittedModel::Linear(fit_mlr(train)?),
            Self::Ridge(cfg) => FittedModel::Linear(fit_ridge(train, cfg)?),
            Self::Lasso(cfg) => FittedModel::Linear(fit_lasso(train, cfg)?),
            Self::Tree(p) => FittedModel::Tree(fit_tree(train, *p, None, None)?),
            Self::Forest(p) => FittedModel::Forest(fit_forest(train, p)?),
        })
    }
}

fn apply_tree(t: &mut TreeParams, params: &ParamSet) -> Result<()> {
    for (k, &v) in params {
        match k.as_str() {
            "max_depth" => t.max_depth = count(k, v)?,
            "min_samples_leaf" => t.min_samples_leaf = count(k, v)?,
            "min_samples_split" => t.min_samples_split = count(k, v)?,
            _ => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearModel),
    Tree(TreeNode),
    Forest(Forest),
}

impl FittedModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            Self::Linear(m) => predict_linear(m, x),
            Self::Tree(t) => predict_tree_rows(t, x),
            Self::Forest(f) => f.predict_rows(x),
        }
    }

    /// Fit-time notes worth surfacing in a report.
    pub fn warnings(&self) -> Vec<String> {
        match self {
            Self::Linear(m) if !m.converged => {
                vec![format!("lasso did not converge after {} sweeps", m.iterations)]
            }
            _ => Vec::new(),
        }
    }
}
