//! Cyclic coordinate descent for the lasso.
//!
//! Works on centered (and, when `standardize` is set, unit-variance) columns so
//! the unpenalized intercept drops out. For column `z_j` and partial residual
//! `r₋ⱼ`, the exact coordinate minimizer of `‖r₋ⱼ − z_j b‖² + λ|b|` is
//! `S(z_jᵀ r₋ⱼ, λ/2) / ‖z_j‖²`. At the optimum, `z_jᵀ r = (λ/2)·sign(β_j)` for
//! active coordinates and `|z_jᵀ r| ≤ λ/2` otherwise.

use super::{check_train, FitConfig, LinearModel, Standardization};
use crate::error::Result;
use crate::ingest::DesignMatrix;
use crate::numerics::soft_threshold;

/// Objective value after every completed sweep.
#[derive(Debug, Clone, Default)]
pub struct LassoTrace {
    pub objectives: Vec<f64>,
}

struct Centered {
    std: Standardization,
    columns: Vec<Vec<f64>>,
    col_sq: Vec<f64>,
    y_mean: f64,
    yc: Vec<f64>,
}

fn center(train: &DesignMatrix, standardize: bool) -> Centered {
    let std = Standardization::fit(&train.x, standardize);
    let z = std.apply(&train.x);
    let p = z.cols();
    let columns: Vec<Vec<f64>> = (0..p).map(|j| z.column(j)).collect();
    let col_sq = columns.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let y_mean = train.y.iter().sum::<f64>() / train.n_rows() as f64;
    let yc = train.y.iter().map(|v| v - y_mean).collect();
    Centered {
        std,
        columns,
        col_sq,
        y_mean,
        yc,
    }
}

/// Smallest `λ` at which every coefficient is zero: `2·max_j |z_jᵀ(y − ȳ)|`.
pub fn lambda_max(train: &DesignMatrix, standardize: bool) -> f64 {
    let c = center(train, standardize);
    c.columns
        .iter()
        .map(|col| col.iter().zip(&c.yc).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max)
        * 2.0
}

/// `Σ r_i² + λ Σ |β_j|` for standardized coefficients `beta`.
pub fn lasso_objective(residuals: &[f64], beta: &[f64], lambda: f64) -> f64 {
    residuals.iter().map(|r| r * r).sum::<f64>() + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

pub fn fit_lasso(train: &DesignMatrix, cfg: &FitConfig) -> Result<LinearModel> {
    descend(train, cfg, None)
}

/// Like [`fit_lasso`], also returning the per-sweep objective.
///
/// Stops once the largest coordinate move in a sweep is below
/// `tolerance · max(1, ‖β‖∞)` (standardized units). Hitting
/// `max_iterations` returns the current iterate with `converged = false`.
pub fn fit_lasso_traced(train: &DesignMatrix, cfg: &FitConfig) -> Result<(LinearModel, LassoTrace)> {
    let mut trace = LassoTrace::default();
    let model = descend(train, cfg, Some(&mut trace))?;
    Ok((model, trace))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coordinate descent on the Gram matrix `G = ZᵀZ`. `corr` holds `Zᵀr` for
/// the current residual `r`, rebuilt from `Zᵀy − Gβ` at the start of each sweep.
fn descend(train: &DesignMatrix, cfg: &FitConfig, mut trace: Option<&mut LassoTrace>) -> Result<LinearModel> {
    cfg.validate()?;
    check_train(train, 1)?;
    let c = center(train, cfg.standardize);
    let p = c.columns.len();
    let half = cfg.lambda / 2.0;
    let gram: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    if i == j {
                        c.col_sq[i]
                    } else {
                        dot(&c.columns[i], &c.columns[j])
                    }
                })
                .collect()
        })
        .collect();
    let zty: Vec<f64> = c.columns.iter().map(|col| dot(col, &c.yc)).collect();

    let mut beta = vec![0.0; p];
    let mut corr = zty.clone();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < cfg.max_iterations {
        sweeps += 1;
        for (j, cj) in corr.iter_mut().enumerate() {
            *cj = zty[j] - dot(&gram[j], &beta);
        }
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let sq = c.col_sq[j];
            if sq == 0.0 {
                continue;
            }
            let old = beta[j];
            let new = soft_threshold(corr[j] + sq * old, half) / sq;
            if new != old {
                let delta = new - old;
                for (ck, g) in corr.iter_mut().zip(&gram[j]) {
                    *ck -= g * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            let mut resid = c.yc.clone();
            for (col, &b) in c.columns.iter().zip(&beta) {
                if b != 0.0 {
                    for (r, a) in resid.iter_mut().zip(col) {
                        *r -= a * b;
                    }
                }
            }
            t.objectives.push(lasso_objective(&resid, &beta, cfg.lambda));
        }
        let scale = beta.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        if max_change <= cfg.tolerance * scale {
            converged = true;
            break;
        }
    }

    let mut model = LinearModel::from_standardized(&train.feature_names, c.std, &beta, c.y_mean, true);
    model.converged = converged;
    model.iterations = sweeps;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::{fit_mlr, predict_linear};
    use super::*;
    use crate::numerics::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_design(seed: u64, n: usize, p: usize) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = Matrix::new(n, p, data).unwrap();
        let truth: Vec<f64> = (0..p)
            .map(|j| if j % 2 == 0 { 1.5 * j as f64 - 1.0 } else { 0.0 })
            .collect();
        let y = x
            .mul_vec(&truth)
            .unwrap()
            .iter()
            .map(|v| v + 3.0 + rng.random_range(-0.5..0.5))
            .collect();
        DesignMatrix::new(x, y, (0..p).map(|j| format!("f{j}")).collect()).unwrap()
    }

    #[test]
    fn zero_penalty_matches_mlr() {
        let d = random_design(1, 40, 4);
        let mlr = fit_mlr(&d).unwrap();
        let cfg = FitConfig {
            lambda: 0.0,
            ..Default::default()
        };
        let m = fit_lasso(&d, &cfg).unwrap();
        assert!(m.converged);
        for (a, b) in m.coefficients.iter().zip(&mlr.coefficients) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
        assert!((m.intercept - mlr.intercept).abs() <= 1e-6 * (1.0 + mlr.intercept.abs()));
    }

    #[test]
    fn null_threshold_zeroes_everything() {
        let d = random_design(2, 30, 5);
        let lmax = lambda_max(&d, true);
        for factor in [1.0, 2.0] {
            let m = fit_lasso(
                &d,
                &FitConfig {
                    lambda: lmax * factor,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(m.coefficients.iter().all(|&b| b == 0.0), "{:?}", m.coefficients);
            let mean = d.y.iter().sum::<f64>() / d.n_rows() as f64;
            assert!((m.intercept - mean).abs() < 1e-9);
        }
        let below = fit_lasso(
            &d,
            &FitConfig {
                lambda: lmax * 0.9,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(below.coefficients.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn objective_never_increases() {
        let d = random_design(3, 50, 6);
        let lmax = lambda_max(&d, true);
        for f in [0.01, 0.1, 0.5] {
            let (_, trace) = fit_lasso_traced(
                &d,
                &FitConfig {
                    lambda: lmax * f,
                    ..Default::default()
                },
            )
            .unwrap();
            for w in trace.objectives.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn sparsity_is_monotone_in_lambda() {
        let d = random_design(4, 60, 8);
        let lmax = lambda_max(&d, true);
        let mut last = usize::MAX;
        for k in 0..12 {
            let lambda = lmax * 10f64.powf(-3.0 + 0.25 * k as f64);
            let m = fit_lasso(
                &d,
                &FitConfig {
                    lambda,
                    ..Default::default()
                },
            )
            .unwrap();
            let nnz = m.coefficients.iter().filter(|&&b| b != 0.0).count();
            assert!(nnz <= last, "nnz rose from {last} to {nnz} at λ={lambda}");
            last = nnz;
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let d = random_design(5, 40, 5);
        let cfg = FitConfig {
            lambda: 1e-3,
            max_iterations: 1,
            tolerance: 1e-300,
            ..Default::default()
        };
        let m = fit_lasso(&d, &cfg).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 1);
        assert!(predict_linear(&m, &d.x).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn constant_column_gets_zero_coefficient() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 4.0]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64 + 1.0).collect();
        let d = DesignMatrix::new(x, y, vec!["a".into(), "c".into()]).unwrap();
        let m = fit_lasso(
            &d,
            &FitConfig {
                lambda: 0.1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.coefficients[1], 0.0);
        assert!(m.standardization.as_ref().unwrap().scale.iter().all(|&s| s > 0.0));
    }
}
