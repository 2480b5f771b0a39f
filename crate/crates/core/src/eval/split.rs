use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DesignMatrix;
use crate::rng::{domain, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub shuffled: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
            shuffled: true,
        }
    }
}

/// `round(test_fraction · n)`, halves rounded up.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    (test_fraction * n as f64 + 0.5).floor() as usize
}

/// Row indices of the train and test sides. The test side is the tail of the
/// (optionally shuffled) index order.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must lie in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let k = test_size(n, spec.test_fraction);
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "split of {n} rows at {} leaves an empty side",
            spec.test_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if spec.shuffled {
        order.shuffle(&mut stream(spec.seed, &[domain::SPLIT]));
    }
    let test = order.split_off(n - k);
    Ok((order, test))
}

pub fn train_test_split(d: &DesignMatrix, spec: &SplitSpec) -> Result<(DesignMatrix, DesignMatrix)> {
    let (train, test) = split_indices(d.n_rows(), spec)?;
    Ok((d.select_rows(&train), d.select_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn four_to_one_sizes() {
        assert_eq!(test_size(2549, 0.2), 510);
        let (tr, te) = split_indices(2549, &SplitSpec::default()).unwrap();
        assert_eq!((tr.len(), te.len()), (2039, 510));
    }

    #[test]
    fn round_half_up() {
        assert_eq!(test_size(5, 0.5), 3);
        assert_eq!(test_size(7, 0.5), 4);
    }

    #[test]
    fn unshuffled_tail() {
        let spec = SplitSpec {
            shuffled: false,
            ..Default::default()
        };
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        let d = DesignMatrix::new(x, vec![0.0, 1.0, 2.0, 3.0, 4.0], vec!["a".into()]).unwrap();
        let (train, test) = train_test_split(&d, &spec).unwrap();
        assert_eq!(test.y, vec![4.0]);
        assert_eq!(train.y, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn partition_and_determinism() {
        let spec = SplitSpec {
            seed: 11,
            ..Default::default()
        };
        let (a_tr, a_te) = split_indices(100, &spec).unwrap();
        let (b_tr, b_te) = split_indices(100, &spec).unwrap();
        assert_eq!((&a_tr, &a_te), (&b_tr, &b_te));
        let mut all: Vec<usize> = a_tr.iter().chain(&a_te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_sizes() {
        assert!(split_indices(
            2,
            &SplitSpec {
                test_fraction: 0.1,
                ..Default::default()
            }
        )
        .is_err());
        assert!(split_indices(
            10,
            &SplitSpec {
                test_fraction: 1.0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(split_indices(1, &SplitSpec::default()).is_err());
    }
}
