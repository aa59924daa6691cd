use slipforge_core::baselines::{CosineScorer, DtwScorer, RandomScorer};
use slipforge_core::calibration::{calibrate, GaConfig, ReferenceSet};
use slipforge_core::datastore::{
    load_document, load_manifest, load_model, save_document, save_manifest, save_model, Ledger, MatchFilter, NewMatch,
    Verdict, CALIBRATION_FORMAT,
};
use slipforge_core::evaluation::{evaluate_topk, rank_candidates, OracleScorer, DEFAULT_KS};
use slipforge_core::features::EdgeVector;
use slipforge_core::matcher::{train, EmbeddingModel, MatcherScorer, TrainConfig};
use slipforge_core::physics::{generate_dataset, PhysicsParams};
use slipforge_core::Error;

#[test]
fn generate_train_rank_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let params = PhysicsParams::default();

    let train_path = dir.path().join("train.jsonl");
    save_manifest(&train_path, &generate_dataset(&params, 400, 0, 1).unwrap()).unwrap();
    let test_path = dir.path().join("test.jsonl");
    save_manifest(&test_path, &generate_dataset(&params, 30, 20, 2).unwrap()).unwrap();

    let config = TrainConfig { epochs: 8, ..TrainConfig::default() };
    let model = train(&EmbeddingModel::with_default_shape(3), &load_manifest(&train_path).unwrap(), &config).unwrap();
    let model_path = dir.path().join("model.jsonl");
    save_model(&model_path, &model).unwrap();
    let model = load_model(&model_path).unwrap();
    assert_eq!(model.training.loss_history.len(), 8);

    let test = load_manifest(&test_path).unwrap();
    let matcher = MatcherScorer::new(model).unwrap();
    let learned = evaluate_topk(&test, &matcher, &DEFAULT_KS).unwrap();
    let random = evaluate_topk(&test, &RandomScorer::new(0), &DEFAULT_KS).unwrap();
    let oracle = evaluate_topk(&test, &OracleScorer::new(&test), &DEFAULT_KS).unwrap();
    for r in [&learned, &random, &oracle] {
        assert_eq!(r.targets, 60);
        assert_eq!((r.upper_pool, r.lower_pool), (40, 40));
        assert!(r.accuracy.windows(2).all(|w| w[0] <= w[1]));
    }
    assert_eq!(oracle.accuracy_at(1), Some(100.0));
    assert!(learned.accuracy_at(5).unwrap() > random.accuracy_at(5).unwrap());
    for scorer in [&CosineScorer as &dyn slipforge_core::evaluation::Scorer, &DtwScorer] {
        let r = evaluate_topk(&test, scorer, &[10]).unwrap();
        assert!(r.accuracy[0] > 25.0, "{r}");
    }

    let target = test.fragment("P00000-U").unwrap();
    let pool: Vec<_> = test.fragments_in(target.group.opposite()).cloned().collect();
    let ranked = rank_candidates(target, &pool, &matcher, Some("P00000-L")).unwrap();
    assert_eq!(ranked.entries.len(), 40);
    let shown = ranked.rank_of_truth.unwrap();

    let ledger = Ledger::open(dir.path().join("ledger.jsonl")).unwrap();
    let rec = ledger
        .append(NewMatch {
            target_id: target.id.clone(),
            candidate_id: "P00000-L".into(),
            verdict: Verdict::Confirmed,
            method: "wisepanda".into(),
            rank_shown: Some(shown),
            confidence_shown: Some(ranked.entries[shown - 1].score),
            note: "clean join".into(),
        })
        .unwrap();
    let listed = ledger.list(&MatchFilter::target("P00000-U")).unwrap().records;
    assert_eq!(listed, vec![rec]);
}

#[test]
fn same_group_ranking_is_a_protocol_error() {
    let test = generate_dataset(&PhysicsParams::default(), 3, 0, 2).unwrap();
    let target = test.fragment("P00000-U").unwrap();
    let pool: Vec<_> = test.fragments_in(target.group).cloned().collect();
    let err = rank_candidates(target, &pool, &CosineScorer, None).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)));
    assert_eq!(err.code(), "group_protocol");
}

#[test]
fn calibration_result_roundtrips() {
    let reference = ReferenceSet::synthetic(&PhysicsParams::default(), 60, 5).unwrap();
    let config = GaConfig { pop_size: 6, generations: 2, m_samples: 60, ..GaConfig::default() };
    let result = calibrate(&reference, &PhysicsParams::default(), &config).unwrap();
    assert_eq!(result.history.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.jsonl");
    save_document(&path, CALIBRATION_FORMAT, &result).unwrap();
    assert_eq!(load_document::<slipforge_core::calibration::CalibrationResult>(&path, CALIBRATION_FORMAT).unwrap(), result);
}

#[test]
fn reference_set_from_manifest_uses_every_edge() {
    let m = generate_dataset(&PhysicsParams::default(), 5, 3, 8).unwrap();
    let r = ReferenceSet::from_manifest(&m).unwrap();
    assert_eq!(r.edges.len(), 13);
    assert!(r.edges.iter().all(|e: &EdgeVector| e.values.len() == 64));
}
