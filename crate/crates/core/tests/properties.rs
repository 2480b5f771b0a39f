use lanehouse::models::{fit_lasso, fit_mlr, lambda_max, predict_linear};
use lanehouse::trees::{fit_forest, fit_tree, ForestParams, TreeParams};
use lanehouse::{DesignMatrix, FitConfig, Matrix};
use proptest::prelude::*;

fn instance(max_p: usize) -> impl Strategy<Value = DesignMatrix> {
    (1..=max_p, 8usize..30).prop_flat_map(|(p, n)| {
        (
            proptest::collection::vec(-5.0f64..5.0, n * p),
            proptest::collection::vec(-50.0f64..50.0, n),
        )
            .prop_map(move |(x, y)| {
                let names = (0..p).map(|j| format!("f{j}")).collect();
                DesignMatrix::new(Matrix::new(n, p, x).unwrap(), y, names).unwrap()
            })
    })
}

/// Integer-valued features so ties between rows are common.
fn tied_instance() -> impl Strategy<Value = (DesignMatrix, Vec<usize>)> {
    (1usize..4, 6usize..40).prop_flat_map(|(p, n)| {
        (
            proptest::collection::vec(0u8..5, n * p),
            proptest::collection::vec(0u8..10, n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(x, y, perm)| {
                let x = x.into_iter().map(f64::from).collect();
                let y = y.into_iter().map(f64::from).collect();
                let names = (0..p).map(|j| format!("f{j}")).collect();
                (
                    DesignMatrix::new(Matrix::new(n, p, x).unwrap(), y, names).unwrap(),
                    perm,
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_prediction_is_affine(d in instance(4), a in -2.0f64..2.0) {
        let m = fit_mlr(&d).unwrap();
        let n = d.n_rows();
        let shifted: Vec<f64> = d.x.as_slice().iter().rev().copied().collect();
        let x2 = Matrix::new(n, d.n_features(), shifted).unwrap();
        let mix: Vec<f64> = d.x.as_slice().iter().zip(x2.as_slice()).map(|(u, v)| a * u + (1.0 - a) * v).collect();
        let xm = Matrix::new(n, d.n_features(), mix).unwrap();
        let (p1, p2, pm) = (
            predict_linear(&m, &d.x).unwrap(),
            predict_linear(&m, &x2).unwrap(),
            predict_linear(&m, &xm).unwrap(),
        );
        for i in 0..n {
            let want = a * p1[i] + (1.0 - a) * p2[i];
            prop_assert!((pm[i] - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn lasso_kkt_holds(d in instance(5), frac in 0.01f64..1.2) {
        let lambda = frac * lambda_max(&d, true);
        prop_assume!(lambda > 0.0);
        let m = fit_lasso(&d, &FitConfig { lambda, ..Default::default() }).unwrap();
        prop_assert!(m.converged);
        let std = m.standardization.clone().unwrap();
        let pred = predict_linear(&m, &d.x).unwrap();
        let beta = m.standardized_coefficients();
        let half = lambda / 2.0;
        for j in 0..d.n_features() {
            if std.constant[j] {
                continue;
            }
            let g: f64 = (0..d.n_rows())
                .map(|i| (d.x.get(i, j) - std.mean[j]) / std.scale[j] * (d.y[i] - pred[i]))
                .sum();
            if beta[j] != 0.0 {
                prop_assert!((g - half * beta[j].signum()).abs() <= 1e-4 * half, "active {j}: {g} vs {half}");
            } else {
                prop_assert!(g.abs() <= half * (1.0 + 1e-4), "inactive {j}: {g} vs {half}");
            }
        }
    }

    #[test]
    fn tree_ignores_row_order((d, perm) in tied_instance(), depth in 1usize..6, leaf in 1usize..4) {
        let params = TreeParams { max_depth: depth, min_samples_leaf: leaf, min_samples_split: 2 };
        let permuted = d.select_rows(&perm);
        prop_assert_eq!(fit_tree(&d, params, None, None).unwrap(), fit_tree(&permuted, params, None, None).unwrap());
    }
}

#[test]
fn forest_does_not_depend_on_thread_count() {
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|i| vec![(i % 9) as f64, (i * 7 % 13) as f64, (i % 4) as f64])
        .collect();
    let y = rows.iter().map(|r| r[0] * 3.0 - r[1] + r[2] * r[0]).collect();
    let d = DesignMatrix::new(
        Matrix::from_rows(&rows).unwrap(),
        y,
        vec!["a".into(), "b".into(), "c".into()],
    )
    .unwrap();
    let params = ForestParams {
        n_estimators: 12,
        seed: 9,
        ..Default::default()
    };
    let fit_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit_forest(&d, &params).unwrap())
    };
    assert_eq!(fit_with(1), fit_with(4));
}
