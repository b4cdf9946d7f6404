use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triage_core::augment::SynonymLexicon;
use triage_core::corpus::CleanEmail;
use triage_core::eval::split::split_labeled;
use triage_core::eval::synth::{generate_corpus, SynthSpec};
use triage_core::labeling::Categories;
use triage_core::models::mlp::TrainConfig;
use triage_core::models::Classifier;
use triage_core::pipeline::{prepare_nn_samples, train_nn_classifier, train_tree_classifier};
use triage_core::textprep::TextPipeline;
use triage_core::TriageError;

fn models() -> (Classifier, Classifier) {
    let cats = Categories::default_helpdesk();
    let text = TextPipeline::default();
    let data = generate_corpus(&SynthSpec::helpdesk(2)).unwrap().ground_truth().unwrap();
    let (train, _) = split_labeled(&data, 0.8, 2).unwrap();
    let samples = prepare_nn_samples(&train, &cats, &text, &SynonymLexicon::helpdesk(), None).unwrap();
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let nn = train_nn_classifier(&samples, &cats, &text, &cfg, true).unwrap();
    let tree = train_tree_classifier(&train, &cats, None).unwrap();
    (Classifier::Mlp(nn), Classifier::Tree(tree))
}

fn random_emails(n: usize) -> Vec<CleanEmail> {
    let words = [
        "wifi", "password", "blackboard", "adobe", "reset", "module", "laptop", "install", "the", "slow", "portal",
        "appsanywhere", "login", "expired", "signal", "course",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..12);
            let text: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..words.len())]).collect();
            CleanEmail::new(format!("r{i}"), &text.join(" ")).unwrap()
        })
        .collect()
}

#[test]
fn round_trip_preserves_predictions_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (nn, tree) = models();
    for (name, model) in [("nn.json", nn), ("tree.json", tree)] {
        let path = dir.path().join(name);
        model.save(&path).unwrap();
        let back = Classifier::load(&path).unwrap();
        assert_eq!(back, model);
        for email in random_emails(100) {
            let (a, b) = (model.classify(&email).unwrap(), back.classify(&email).unwrap());
            assert_eq!(a.category, b.category);
            assert_eq!(a.confidence.to_bits(), b.confidence.to_bits());
        }
    }
}

#[test]
fn wrong_version_and_corrupt_fields_are_rejected() {
    let (nn, tree) = models();
    let mut v: serde_json::Value = serde_json::from_str(&nn.to_json().unwrap()).unwrap();
    v["format_version"] = 2.into();
    assert!(matches!(Classifier::from_json(&v.to_string()), Err(TriageError::Version { .. })));

    let mut v: serde_json::Value = serde_json::from_str(&nn.to_json().unwrap()).unwrap();
    v["vocab"] = serde_json::json!(["only"]);
    let err = Classifier::from_json(&v.to_string()).unwrap_err();
    assert!(matches!(err, TriageError::Artifact(_)), "{err}");

    let mut v: serde_json::Value = serde_json::from_str(&tree.to_json().unwrap()).unwrap();
    v["feature_names"] = serde_json::json!([]);
    assert!(matches!(Classifier::from_json(&v.to_string()), Err(TriageError::Artifact(_))));

    assert!(Classifier::from_json("{}").is_err());
    assert!(Classifier::from_json("not json").is_err());
}
