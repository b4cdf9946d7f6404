use triage_core::augment::SynonymLexicon;
use triage_core::autoreply::{compose_reply, ReplyTemplates, ThresholdPolicy, SNIPPET_MARKER};
use triage_core::corpus::{clean_all, filter_incoming};
use triage_core::eval::metrics::report;
use triage_core::eval::split::split_labeled;
use triage_core::eval::synth::{generate_corpus, SynthSpec};
use triage_core::labeling::{build_labeled_corpus, Categories};
use triage_core::models::mlp::TrainConfig;
use triage_core::models::Classifier;
use triage_core::pipeline::{evaluate, prepare_nn_samples, train_nn_classifier, train_tree_classifier};
use triage_core::augment::AugmentConfig;
use triage_core::textprep::TextPipeline;

#[test]
fn keyword_labels_through_training_and_replies() {
    let cats = Categories::default_helpdesk();
    let text = TextPipeline::default();
    let raw = generate_corpus(&SynthSpec::helpdesk(9)).unwrap().emails;
    let (clean, rejected) = clean_all(&filter_incoming(&raw));
    assert!(rejected.is_empty());
    let labeled = build_labeled_corpus(&clean, &cats).unwrap();
    let (train, test) = split_labeled(&labeled.emails, 0.8, 9).unwrap();

    let tree = Classifier::Tree(train_tree_classifier(&train, &cats, None).unwrap());
    let tree_eval = evaluate(&tree, &test).unwrap();
    assert!(tree_eval.report.accuracy > 0.9, "{}", tree_eval.report.to_text());
    assert_eq!(report(&tree_eval.confusion).unwrap(), tree_eval.report);

    let aug = AugmentConfig { seed: 9, ..AugmentConfig::default() };
    let samples = prepare_nn_samples(&train, &cats, &text, &SynonymLexicon::helpdesk(), Some(&aug)).unwrap();
    assert_eq!(samples.len(), 1000);
    let cfg = TrainConfig { epochs: 20, seed: 9, ..TrainConfig::default() };
    let nn = Classifier::Mlp(train_nn_classifier(&samples, &cats, &text, &cfg, false).unwrap());
    let nn_eval = evaluate(&nn, &test).unwrap();
    assert_eq!(nn_eval.confusion.total(), test.len());
    assert!(nn_eval.report.accuracy > 0.6, "{}", nn_eval.report.to_text());

    let templates = ReplyTemplates::helpdesk();
    let policy = ThresholdPolicy::default();
    for e in &test {
        let d = compose_reply(&e.email, &nn, &templates, &policy).unwrap();
        assert!(!d.rendered.contains(SNIPPET_MARKER));
        assert_eq!(d.tailored, d.confidence >= 0.75);
    }
}
