//! Integration tests for the experiment runners on synthetic data.

use flowlens::data::SyntheticSpec;
use flowlens::experiments::{
    prepare, run, run_all, run_with, DatasetSource, ExperimentName, ExperimentSpec,
    OVERHEAD_REPEATS,
};
use flowlens::explain::{mask_topk, sensitivity, OcclusionBaseline, OcclusionConfig};
use flowlens::models::{accuracy, train, ModelKind, TrainConfig};
use flowlens::{Error, Task};

fn synthetic(n: usize, informative: usize, noise: usize, seed: u64) -> DatasetSource {
    DatasetSource::Synthetic(SyntheticSpec::new(n, informative, noise, 0, seed))
}

fn majority_rate(y: &[usize]) -> f64 {
    let mut counts = std::collections::BTreeMap::new();
    for &v in y {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    *counts.values().max().unwrap() as f64 / y.len() as f64
}

#[test]
fn selected_sensitivity_sweeps_only_kept_groups() {
    let ds = synthetic(6_000, 2, 6, 42);
    let mut spec = ExperimentSpec::new(ExperimentName::SelectedSensitivity, Task::Binary, ds, 42);
    spec.models = vec![ModelKind::LogisticRegression, ModelKind::DecisionTree];
    let result = run(&spec).unwrap();

    let outcome = result.selection.as_ref().expect("selection recorded");
    let mut kept = outcome.selection.kept_names();
    kept.sort();
    assert_eq!(kept, vec!["flow_ttl".to_string(), "sig_1".to_string()]);

    for run in &result.models {
        let rep = run.sensitivity.as_ref().unwrap();
        let mut swept: Vec<String> = rep.ranking.iter().map(|e| e.group.clone()).collect();
        swept.sort();
        assert_eq!(swept, kept);
    }
}

#[test]
fn masking_both_groups_of_a_two_group_dataset_removes_all_signal() {
    let ds = synthetic(6_000, 2, 0, 42);
    let mut spec = ExperimentSpec::new(ExperimentName::Top2Masking, Task::Binary, ds, 42);
    spec.models = vec![
        ModelKind::LogisticRegression,
        ModelKind::DecisionTree,
        ModelKind::Knn,
    ];
    // The zero baseline sends every masked row to the all-low corner, whose
    // class is the majority one; the training mean can sit exactly on a
    // tree threshold and flip arbitrarily.
    spec.occlusion.baseline = OcclusionBaseline::Zero;
    let prepared = prepare(&spec.dataset, spec.seed, spec.split_ratio).unwrap();
    let result = run_with(&spec, &prepared).unwrap();
    let majority = majority_rate(&prepared.y_test(Task::Binary));
    for run in &result.models {
        let mask = run.masking.as_ref().unwrap();
        assert_eq!(mask.masked_groups.len(), 2);
        assert!(
            (mask.accuracy_after - majority).abs() <= 0.03,
            "{}: post-mask accuracy {} vs majority rate {majority}",
            run.kind,
            mask.accuracy_after
        );
    }
}

#[test]
fn masking_rejects_datasets_with_one_group() {
    let ds = synthetic(500, 1, 0, 3);
    let spec = ExperimentSpec::new(ExperimentName::Top2Masking, Task::Binary, ds, 3);
    assert!(matches!(
        run(&spec),
        Err(Error::TooFewGroups { needed: 2, .. })
    ));
}

/// Comparable form of a result: the serialized document minus wall-clock
/// fields.
fn stable_json(result: &flowlens::experiments::ExperimentResult) -> String {
    let value = serde_json::to_value(result).unwrap();
    let (stable, _) = flowlens::report::json::split_volatile(value);
    flowlens::report::json::canonical(&stable)
}

#[test]
fn masking_ranking_is_deterministic_across_runs() {
    let ds = synthetic(2_000, 2, 3, 9);
    let mut spec = ExperimentSpec::new(ExperimentName::Top2Masking, Task::Binary, ds, 9);
    spec.models = vec![ModelKind::DecisionTree, ModelKind::Knn, ModelKind::LinearSvm];
    let a = run(&spec).unwrap();
    let b = run(&spec).unwrap();
    assert_eq!(stable_json(&a), stable_json(&b));
}

#[test]
fn removing_a_noise_group_barely_moves_accuracy() {
    // Trained to convergence rather than to the 90% target: the stop-at-
    // target rule quantizes accuracy by whole epochs, which would swamp the
    // sub-point effect being measured here.
    let ds = synthetic(6_000, 2, 4, 42);
    let prepared = prepare(&ds, 42, 0.8).unwrap();
    let reduced = flowlens::experiments::Prepared::from_table(
        prepared.table.drop_groups(&["noise_0".to_string()]).unwrap(),
        prepared.split.clone(),
    );
    let y_train = prepared.y_train(Task::Binary);
    let y_test = prepared.y_test(Task::Binary);

    for kind in ModelKind::ALL {
        let mut cfg = TrainConfig::new(kind, 42);
        cfg.target_accuracy = 1.01;
        cfg.min_improvement = -1.0;
        cfg.max_epochs = cfg.max_epochs.min(100);
        // A smaller step keeps the SGD noise ball below the tolerance.
        cfg.learning_rate = 0.02;
        let evaluate = |p: &flowlens::experiments::Prepared| {
            let model = train(p.x_train().view(), &y_train, 2, &cfg).unwrap();
            accuracy(&model.predict(p.x_test().view()).unwrap(), &y_test, 2)
                .unwrap()
                .accuracy
        };
        let before = evaluate(&prepared);
        let after = evaluate(&reduced);
        assert!(
            (after - before).abs() < 0.01,
            "{kind}: accuracy moved {:.4} after removing a noise group",
            after - before
        );
    }
}

#[test]
fn overhead_report_keeps_raw_repeats_and_positive_times() {
    let ds = synthetic(2_000, 2, 3, 11);
    let mut spec = ExperimentSpec::new(ExperimentName::Overhead, Task::Binary, ds, 11);
    spec.models = vec![
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::Knn,
    ];
    let result = run(&spec).unwrap();
    let overhead = result.overhead.as_ref().expect("overhead report");
    assert_eq!(overhead.timing_mode, "serial");
    assert_eq!(overhead.entries.len(), 3);
    for e in &overhead.entries {
        assert_eq!(e.train_repeat_secs.len(), OVERHEAD_REPEATS);
        assert_eq!(e.predict_repeat_secs.len(), OVERHEAD_REPEATS);
        assert!(e.median_train_secs > 0.0);
        assert!(e.median_predict_per_1k_secs > 0.0);
        assert!(e.train_repeat_secs.contains(&e.median_train_secs));
    }
    let dt = overhead.entries.iter().find(|e| e.kind == ModelKind::DecisionTree).unwrap();
    let rf = overhead.entries.iter().find(|e| e.kind == ModelKind::RandomForest).unwrap();
    assert!(
        rf.median_train_secs > dt.median_train_secs,
        "forest {} vs tree {}",
        rf.median_train_secs,
        dt.median_train_secs
    );
}

#[test]
fn knn_prediction_time_grows_with_test_size() {
    let ds = synthetic(3_000, 2, 4, 13);
    let prepared = prepare(&ds, 13, 0.8).unwrap();
    let x_train = prepared.x_train();
    let y_train = prepared.y_train(Task::Binary);
    let model = train(
        x_train.view(),
        &y_train,
        2,
        &TrainConfig::new(ModelKind::Knn, 13),
    )
    .unwrap();

    let x_test = prepared.x_test();
    let half = x_test.nrows() / 2;
    let small = x_test.slice(ndarray::s![..half, ..]);

    let time = |x: ndarray::ArrayView2<f64>| {
        let mut secs = Vec::new();
        for _ in 0..3 {
            let t = std::time::Instant::now();
            model.predict_serial(x).unwrap();
            secs.push(t.elapsed().as_secs_f64());
        }
        secs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        secs[1]
    };
    let t_small = time(small);
    let t_full = time(x_test.view());
    assert!(
        t_full >= 1.2 * t_small,
        "2x rows took {t_full}s vs {t_small}s"
    );
}

#[test]
fn run_all_produces_ten_results_in_documented_order() {
    let ds = synthetic(4_000, 2, 2, 7);
    let results = run_all(&ds, 7).unwrap();
    assert_eq!(results.len(), 10);
    let mut expected = Vec::new();
    for name in ExperimentName::ALL {
        for task in Task::ALL {
            expected.push((name, task));
        }
    }
    let got: Vec<(ExperimentName, Task)> = results
        .iter()
        .map(|r| (r.spec.name, r.spec.task))
        .collect();
    assert_eq!(got, expected);
    for r in &results {
        assert_eq!(r.models.len(), 7);
    }
}

#[test]
fn missing_dataset_path_fails_with_the_path_in_the_error() {
    let ds = DatasetSource::Csv {
        path: "/no/such/flows.csv".into(),
        schema: None,
        max_rows: None,
    };
    let err = run_all(&ds, 1).unwrap_err();
    assert!(err.to_string().contains("/no/such/flows.csv"), "{err}");
}

#[test]
fn occluding_the_only_informative_feature_floors_any_strong_model() {
    let ds = synthetic(10_000, 1, 6, 42);
    let prepared = prepare(&ds, 42, 0.8).unwrap();
    let x_train = prepared.x_train();
    let y_train = prepared.y_train(Task::Binary);
    let x_test = prepared.x_test();
    let y_test = prepared.y_test(Task::Binary);
    let majority = majority_rate(&y_test);
    let cfg = OcclusionConfig::default();

    for kind in [
        ModelKind::LogisticRegression,
        ModelKind::RandomForest,
        ModelKind::Knn,
    ] {
        let model = train(
            x_train.view(),
            &y_train,
            2,
            &TrainConfig::new(kind, 42),
        )
        .unwrap();
        let rep = sensitivity(
            &model,
            &prepared.table,
            x_test.view(),
            &y_test,
            &cfg,
            &prepared.stats,
        )
        .unwrap();
        assert!(rep.baseline_accuracy >= 0.9, "{kind} is a strong model");
        let occluded = rep.entry("flow_ttl").unwrap().occluded_accuracy;
        assert!(
            (occluded - majority).abs() <= 0.03,
            "{kind}: occluded accuracy {occluded} vs majority rate {majority}"
        );
    }
}

#[test]
fn knn_noise_occlusions_stay_within_two_points() {
    let ds = synthetic(10_000, 1, 10, 42);
    let prepared = prepare(&ds, 42, 0.8).unwrap();
    let x_test = prepared.x_test();
    assert!(x_test.nrows() >= 2_000);
    let y_test = prepared.y_test(Task::Binary);
    let model = train(
        prepared.x_train().view(),
        &prepared.y_train(Task::Binary),
        2,
        &TrainConfig::new(ModelKind::Knn, 42),
    )
    .unwrap();
    let rep = sensitivity(
        &model,
        &prepared.table,
        x_test.view(),
        &y_test,
        &OcclusionConfig::default(),
        &prepared.stats,
    )
    .unwrap();
    for entry in rep.ranking.iter().filter(|e| e.group.starts_with("noise_")) {
        assert!(
            entry.degradation.abs() < 0.02,
            "{}: |degradation| {}",
            entry.group,
            entry.degradation
        );
    }
}

#[test]
fn masking_every_group_with_zero_baseline_gives_a_constant_prediction() {
    let ds = synthetic(4_000, 2, 3, 21);
    let prepared = prepare(&ds, 21, 0.8).unwrap();
    let x_test = prepared.x_test();
    let y_test = prepared.y_test(Task::Binary);
    let model = train(
        prepared.x_train().view(),
        &prepared.y_train(Task::Binary),
        2,
        &TrainConfig::new(ModelKind::DecisionTree, 21),
    )
    .unwrap();
    let cfg = OcclusionConfig {
        baseline: OcclusionBaseline::Zero,
        ..OcclusionConfig::default()
    };
    let base = sensitivity(
        &model,
        &prepared.table,
        x_test.view(),
        &y_test,
        &cfg,
        &prepared.stats,
    )
    .unwrap();
    let k = prepared.table.feature_groups().len();
    let mask = mask_topk(
        &model,
        &prepared.table,
        x_test.view(),
        &y_test,
        &base,
        k,
        &cfg,
        &prepared.stats,
    )
    .unwrap();

    // Every row collapses to the all-zero input, so predictions are one
    // constant class and accuracy equals that class's prevalence.
    let zero_row = ndarray::Array2::zeros((1, prepared.table.n_features()));
    let constant_class = model.predict(zero_row.view()).unwrap()[0];
    let prevalence =
        y_test.iter().filter(|&&v| v == constant_class).count() as f64 / y_test.len() as f64;
    assert_eq!(mask.accuracy_after, prevalence);
}

#[test]
fn permute_baseline_reports_are_reproducible_per_seed() {
    let ds = synthetic(2_000, 2, 2, 5);
    let prepared = prepare(&ds, 5, 0.8).unwrap();
    let x_test = prepared.x_test();
    let y_test = prepared.y_test(Task::Binary);
    let model = train(
        prepared.x_train().view(),
        &prepared.y_train(Task::Binary),
        2,
        &TrainConfig::new(ModelKind::RandomForest, 5),
    )
    .unwrap();
    let cfg = OcclusionConfig {
        baseline: OcclusionBaseline::Permute,
        permute_seed: 9,
        groups: None,
    };
    let a = sensitivity(&model, &prepared.table, x_test.view(), &y_test, &cfg, &prepared.stats)
        .unwrap();
    let b = sensitivity(&model, &prepared.table, x_test.view(), &y_test, &cfg, &prepared.stats)
        .unwrap();
    assert_eq!(a, b);
    let other = OcclusionConfig {
        permute_seed: 10,
        ..cfg
    };
    let c = sensitivity(
        &model,
        &prepared.table,
        x_test.view(),
        &y_test,
        &other,
        &prepared.stats,
    )
    .unwrap();
    assert_ne!(a, c);
}

#[test]
fn accuracy_metrics_confusion_sums_to_test_rows() {
    let ds = synthetic(1_000, 2, 1, 2);
    let prepared = prepare(&ds, 2, 0.8).unwrap();
    let y_test = prepared.y_test(Task::Multiclass);
    let model = train(
        prepared.x_train().view(),
        &prepared.y_train(Task::Multiclass),
        prepared.table.class_count(Task::Multiclass),
        &TrainConfig::new(ModelKind::DecisionTree, 2),
    )
    .unwrap();
    let pred = model.predict(prepared.x_test().view()).unwrap();
    let m = accuracy(&pred, &y_test, model.class_count).unwrap();
    let total: usize = m.confusion.iter().flatten().sum();
    assert_eq!(total, y_test.len());
    let trace: usize = (0..model.class_count).map(|i| m.confusion[i][i]).sum();
    assert!((m.accuracy - trace as f64 / total as f64).abs() < 1e-12);
}
