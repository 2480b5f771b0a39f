//! Linear regressors sharing one fit/predict contract.
//!
//! Penalized objectives are written without a `1/2n` factor:
//! ridge minimizes `Σ r_i² + λ Σ β_j²`, lasso minimizes `Σ r_i² + λ Σ |β_j|`,
//! both over standardized features when `standardize` is on. The intercept is
//! never penalized. Fitted coefficients are always stored in raw feature units.

mod lasso;

pub use lasso::{fit_lasso, fit_lasso_traced, lambda_max, lasso_objective, LassoTrace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DesignMatrix;
use crate::numerics::{solve_least_squares, solve_ridge, Matrix};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Per-feature centering and scaling used at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Columns with zero spread; their coefficient is pinned at 0.
    pub constant: Vec<bool>,
}

impl Standardization {
    pub fn fit(x: &Matrix, scale: bool) -> Self {
        let (n, p) = (x.rows(), x.cols());
        let mut mean = vec![0.0; p];
        for row in x.row_iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; p];
        for row in x.row_iter() {
            for j in 0..p {
                let d = row[j] - mean[j];
                var[j] += d * d;
            }
        }
        let mut scales = vec![1.0; p];
        let mut constant = vec![false; p];
        for j in 0..p {
            let sd = (var[j] / n as f64).sqrt();
            if sd <= 1e-12 * (1.0 + mean[j].abs()) {
                constant[j] = true;
            } else if scale {
                scales[j] = sd;
            }
        }
        Self {
            mean,
            scale: scales,
            constant,
        }
    }

    /// `(x − mean) / scale`, with constant columns set to zero.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        x.map_columns(|c, v| {
            if self.constant[c] {
                0.0
            } else {
                (v - self.mean[c]) / self.scale[c]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub standardize: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tolerance: 1e-10,
            max_iterations: 100_000,
            standardize: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// `ŷ = intercept + Σ_j coefficients_j · x_j` in raw feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_names: Vec<String>,
    pub standardization: Option<Standardization>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    model: LinearModel,
}

impl LinearModel {
    /// Coefficients in the standardized space the penalty acted on.
    pub fn standardized_coefficients(&self) -> Vec<f64> {
        match &self.standardization {
            Some(s) => self.coefficients.iter().zip(&s.scale).map(|(b, sc)| b * sc).collect(),
            None => self.coefficients.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            format: "lanehouse.linear-model".into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(src)?;
        if doc.format != "lanehouse.linear-model" || doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc.model)
    }

    fn from_standardized(
        names: &[String],
        std: Standardization,
        beta: &[f64],
        intercept_std: f64,
        keep_standardization: bool,
    ) -> Self {
        let mut coefficients = vec![0.0; beta.len()];
        let mut intercept = intercept_std;
        for j in 0..beta.len() {
            if std.constant[j] {
                continue;
            }
            coefficients[j] = beta[j] / std.scale[j];
            intercept -= coefficients[j] * std.mean[j];
        }
        Self {
            intercept,
            coefficients,
            feature_names: names.to_vec(),
            standardization: keep_standardization.then_some(std),
            converged: true,
            iterations: 1,
        }
    }
}

fn check_train(train: &DesignMatrix, min_rows: usize) -> Result<()> {
    if train.n_rows() < min_rows || train.n_features() == 0 {
        return Err(Error::Empty(format!(
            "linear fit needs at least {min_rows} rows and one feature, got {}x{}",
            train.n_rows(),
            train.n_features()
        )));
    }
    Ok(())
}

/// Ordinary least squares with an intercept; minimum-norm under collinearity.
pub fn fit_mlr(train: &DesignMatrix) -> Result<LinearModel> {
    check_train(train, 2)?;
    let design = train.x.with_ones_column();
    let beta = solve_least_squares(&design, &train.y)?;
    let p = train.n_features();
    Ok(LinearModel {
        intercept: beta[p],
        coefficients: beta[..p].to_vec(),
        feature_names: train.feature_names.clone(),
        standardization: None,
        converged: true,
        iterations: 1,
    })
}

pub fn fit_ridge(train: &DesignMatrix, cfg: &FitConfig) -> Result<LinearModel> {
    cfg.validate()?;
    check_train(train, 1)?;
    let p = train.n_features();
    if cfg.standardize {
        let std = Standardization::fit(&train.x, true);
        let design = std.apply(&train.x).with_ones_column();
        let beta = solve_ridge(&design, &train.y, cfg.lambda, Some(p))?;
        Ok(LinearModel::from_standardized(
            &train.feature_names,
            std,
            &beta[..p],
            beta[p],
            true,
        ))
    } else {
        let design = train.x.with_ones_column();
        let beta = solve_ridge(&design, &train.y, cfg.lambda, Some(p))?;
        Ok(LinearModel {
            intercept: beta[p],
            coefficients: beta[..p].to_vec(),
            feature_names: train.feature_names.clone(),
            standardization: None,
            converged: true,
            iterations: 1,
        })
    }
}

pub fn predict_linear(m: &LinearModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != m.coefficients.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} features, input has {} columns",
            m.coefficients.len(),
            x.cols()
        )));
    }
    Ok(x.row_iter()
        .map(|row| m.intercept + row.iter().zip(&m.coefficients).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}
