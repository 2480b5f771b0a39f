use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum after sorting ascending, reduced pairwise. The result depends only on
/// the multiset of inputs.
pub fn ordered_pairwise_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    pairwise(&values)
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise(&v[..mid]) + pairwise(&v[mid..])
    }
}

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} targets vs {} predictions",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Empty("metrics need at least one pair".into()));
    }
    if y.iter().chain(yhat).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric input".into()));
    }
    Ok(())
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sq = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).collect();
    Ok(ordered_pairwise_sum(sq) / y.len() as f64)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let abs = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).collect();
    Ok(ordered_pairwise_sum(abs) / y.len() as f64)
}

pub fn mean(y: &[f64]) -> f64 {
    ordered_pairwise_sum(y.to_vec()) / y.len() as f64
}

/// `1 − SSE/SST` around the mean of `y`. Undefined when `y` is constant.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    if y.len() < 2 {
        return Err(Error::UndefinedRSquared);
    }
    let ybar = mean(y);
    let sst = ordered_pairwise_sum(y.iter().map(|v| (v - ybar) * (v - ybar)).collect());
    if sst == 0.0 {
        return Err(Error::UndefinedRSquared);
    }
    let sse = ordered_pairwise_sum(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).collect());
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub mae: f64,
    pub r_squared: f64,
    pub n: usize,
    pub residuals: Vec<f64>,
}

impl MetricsReport {
    pub fn evaluate(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Self {
            mse: mse(y, yhat)?,
            mae: mae(y, yhat)?,
            r_squared: r_squared(y, yhat)?,
            n: y.len(),
            residuals: y.iter().zip(yhat).map(|(a, b)| a - b).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_values() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(mae(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.5);
        assert_eq!(mae(&[2.0, 5.0], &[2.0, 5.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(mse(&[1.0], &[]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(mae(&[], &[]), Err(Error::Empty(_))));
        assert!(matches!(
            r_squared(&[3.0, 3.0], &[1.0, 2.0]),
            Err(Error::UndefinedRSquared)
        ));
        assert!(matches!(r_squared(&[3.0], &[3.0]), Err(Error::UndefinedRSquared)));
    }

    #[test]
    fn report_stores_residuals() {
        let r = MetricsReport::evaluate(&[1.0, 2.0, 4.0], &[1.5, 2.0, 3.0]).unwrap();
        assert_eq!(r.residuals, vec![-0.5, 0.0, 1.0]);
        assert_eq!(r.mse, (0.25 + 1.0) / 3.0);
        assert_eq!(r.n, 3);
    }

    proptest! {
        #[test]
        fn jensen_and_dual_formula(pairs in proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 2..40)) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let yhat: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let m = mse(&y, &yhat).unwrap();
            prop_assert!(mae(&y, &yhat).unwrap() <= m.sqrt() * (1.0 + 1e-12));
            let ybar = mean(&y);
            let base = mse(&y, &vec![ybar; y.len()]).unwrap();
            prop_assume!(base > 0.0);
            let dual = 1.0 - m / base;
            prop_assert!((r_squared(&y, &yhat).unwrap() - dual).abs() <= 1e-12 * (1.0 + dual.abs()));
        }

        #[test]
        fn permutation_invariant(pairs in proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 2..40), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(f64, f64)]| (v.iter().map(|p| p.0).collect::<Vec<_>>(), v.iter().map(|p| p.1).collect::<Vec<_>>());
            let (y1, h1) = split(&pairs);
            let (y2, h2) = split(&shuffled);
            prop_assert_eq!(mse(&y1, &h1).unwrap().to_bits(), mse(&y2, &h2).unwrap().to_bits());
            prop_assert_eq!(mae(&y1, &h1).unwrap().to_bits(), mae(&y2, &h2).unwrap().to_bits());
            if let (Ok(a), Ok(b)) = (r_squared(&y1, &h1), r_squared(&y2, &h2)) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
