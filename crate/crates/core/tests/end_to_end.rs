use lanehouse::eval::{compare_models, grid_search, GridSpec, ModelConfig, ModelFamily, ParamSet, SplitSpec};
use lanehouse::ingest::{build_design_matrix, clean, FeatureSchema};
use lanehouse::llm::{
    evaluate_llm_run, listings_from_table, lower_median, predict_llm, LlmConfig, MockClient, PromptColumns,
};
use lanehouse::synth::{synthesize, SynthSpec};

fn table() -> lanehouse::RawTable {
    let raw = synthesize(&SynthSpec {
        rows: 150,
        seed: 2,
        missing: 2,
        duplicates: 3,
    })
    .unwrap();
    clean(&raw, &FeatureSchema::default(), None).unwrap().0
}

#[test]
fn five_families_score_on_one_split() {
    let d = build_design_matrix(&table(), &FeatureSchema::default()).unwrap();
    let mut forest = ParamSet::new();
    forest.insert("n_estimators".into(), 15.0);
    let configs: Vec<ModelConfig> = [
        ("MLR", ModelFamily::Mlr, ParamSet::new()),
        ("Ridge", ModelFamily::Ridge, ParamSet::new()),
        ("Lasso", ModelFamily::Lasso, ParamSet::new()),
        ("DT", ModelFamily::Tree, ParamSet::new()),
        ("RF", ModelFamily::Forest, forest),
    ]
    .into_iter()
    .map(|(label, family, params)| ModelConfig {
        label: label.into(),
        family,
        params,
    })
    .collect();
    let split = SplitSpec {
        seed: 4,
        ..Default::default()
    };
    let t = compare_models(&d, &split, &configs, 4).unwrap();
    assert_eq!((t.n_train, t.n_test), (118, 30));
    for row in &t.rows {
        let r2 = row.metrics.expect("every family scores").r_squared;
        let floor = if matches!(row.family, ModelFamily::Tree | ModelFamily::Forest) {
            0.0
        } else {
            0.7
        };
        assert!(r2 > floor, "{}", t.to_markdown());
    }
    assert_eq!(t, compare_models(&d, &split, &configs, 4).unwrap());
}

#[test]
fn tuned_ridge_beats_heavy_shrinkage() {
    let d = build_design_matrix(&table(), &FeatureSchema::default()).unwrap();
    let mut spec = GridSpec::new(ModelFamily::Ridge);
    spec.grid.insert("lambda".into(), vec![1e9, 1.0]);
    let r = grid_search(&d, &spec).unwrap();
    assert_eq!(r.best_params["lambda"], 1.0);
    assert_eq!(r.cv_table.rows.len(), 2);
}

#[test]
fn zero_shot_mock_answers_the_training_median() {
    let t = table();
    let listings = listings_from_table(&t, &FeatureSchema::default(), &PromptColumns::default()).unwrap();
    let (train, queries) = listings.split_at(120);
    let run = predict_llm(queries, train, 0, &LlmConfig::default(), &MockClient).unwrap();
    let median = lower_median(&train.iter().map(|l| l.rent).collect::<Vec<_>>()).unwrap();
    assert!(run.predictions().iter().all(|p| *p == Some(median)));
    let ev = evaluate_llm_run(&run.predictions(), &run.truths()).unwrap();
    assert_eq!(ev.coverage, 1.0);
}
