//! Training and evaluation over labeled emails.

use serde::{Deserialize, Serialize};

use crate::augment::{rebalance, AugmentConfig, SynonymLexicon, TokenSample};
use crate::error::{Result, TriageError};
use crate::eval::metrics::{confusion, report, ConfusionMatrix, EvalReport};
use crate::features::{bow_vector, build_vocabulary, keyword_vector, FeatureVector, MinMaxScaler};
use crate::labeling::{Categories, LabeledEmail};
use crate::models::mlp::{self, TrainConfig};
use crate::models::tree::train_tree;
use crate::models::{Classifier, MlpClassifier, TreeClassifier};
use crate::textprep::TextPipeline;

pub fn token_samples(data: &[LabeledEmail], text: &TextPipeline) -> Vec<TokenSample> {
    data.iter()
        .map(|e| TokenSample {
            id: e.email.id().to_string(),
            category: e.category.clone(),
            tokens: text.preprocess(e.email.text()),
            source: None,
        })
        .collect()
}

/// Preprocesses `train` and, when `augment` is set, rebalances it.
pub fn prepare_nn_samples(
    train: &[LabeledEmail],
    categories: &Categories,
    text: &TextPipeline,
    lexicon: &SynonymLexicon,
    augment: Option<&AugmentConfig>,
) -> Result<Vec<TokenSample>> {
    let samples = token_samples(train, text);
    match augment {
        Some(cfg) => rebalance(&samples, categories, cfg, lexicon),
        None => Ok(samples),
    }
}

/// Fits vocabulary, optional scaler and network on preprocessed samples.
pub fn train_nn_classifier(
    samples: &[TokenSample],
    categories: &Categories,
    text: &TextPipeline,
    config: &TrainConfig,
    scale: bool,
) -> Result<MlpClassifier> {
    let vocab = build_vocabulary(samples.iter().map(|s| &s.tokens))?;
    let mut xs: Vec<FeatureVector> = samples.iter().map(|s| bow_vector(&s.tokens, &vocab)).collect();
    let ys = samples
        .iter()
        .map(|s| categories.require_index(&s.category))
        .collect::<Result<Vec<_>>>()?;
    let scaler = if scale {
        let s = MinMaxScaler::fit(&xs)?;
        xs = xs.iter().map(|x| s.transform(x)).collect::<Result<_>>()?;
        Some(s)
    } else {
        None
    };
    let trained = mlp::train(&xs, &ys, categories.len(), config)?;
    Ok(MlpClassifier {
        categories: categories.clone(),
        pipeline: text.clone(),
        vocab,
        scaler,
        network: trained.network,
        train_config: *config,
        history: trained.history,
    })
}

pub fn train_tree_classifier(
    train: &[LabeledEmail],
    categories: &Categories,
    max_depth: Option<usize>,
) -> Result<TreeClassifier> {
    let xs: Vec<FeatureVector> = train.iter().map(|e| keyword_vector(&e.email, categories)).collect();
    let ys = train
        .iter()
        .map(|e| categories.require_index(&e.category))
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeClassifier {
        categories: categories.clone(),
        tree: train_tree(&xs, &ys, categories.len(), max_depth)?,
        max_depth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub report: EvalReport,
}

pub fn evaluate(model: &Classifier, test: &[LabeledEmail]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(TriageError::EmptyCorpus);
    }
    let truth: Vec<&str> = test.iter().map(|e| e.category.as_str()).collect();
    let predicted = test
        .iter()
        .map(|e| model.classify(&e.email).map(|p| p.category))
        .collect::<Result<Vec<_>>>()?;
    let predicted: Vec<&str> = predicted.iter().map(String::as_str).collect();
    let cm = confusion(&truth, &predicted, &model.categories().names())?;
    let report = report(&cm)?;
    Ok(Evaluation { confusion: cm, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CleanEmail;

    fn labeled(id: &str, text: &str, cat: &str) -> LabeledEmail {
        LabeledEmail {
            email: CleanEmail::new(id, text).unwrap(),
            category: cat.into(),
        }
    }

    fn toy() -> Vec<LabeledEmail> {
        let rows = [
            ("adobe photoshop crashes", "adobe"),
            ("adobe acrobat licence", "adobe"),
            ("appsanywhere solidworks player", "appsanywhere"),
            ("cloudpaging launch fails", "appsanywhere"),
            ("blackboard module missing", "blackboard"),
            ("blackboard submission error", "blackboard"),
            ("forgot my password", "password"),
            ("mfa code not arriving", "password"),
            ("eduroam keeps dropping", "wifi"),
            ("wifi slow in halls", "wifi"),
        ];
        rows.iter()
            .enumerate()
            .map(|(i, (t, c))| labeled(&format!("e{i}"), t, c))
            .collect()
    }

    #[test]
    fn tree_fits_keyword_labels() {
        let cats = Categories::default_helpdesk();
        let data = toy();
        let tree = Classifier::Tree(train_tree_classifier(&data, &cats, None).unwrap());
        let ev = evaluate(&tree, &data).unwrap();
        assert_eq!(ev.report.accuracy, 1.0);
        assert_eq!(ev.confusion.total(), 10);
    }

    #[test]
    fn nn_trains_and_evaluates() {
        let cats = Categories::default_helpdesk();
        let text = TextPipeline::default();
        let data = toy();
        let samples = prepare_nn_samples(&data, &cats, &text, &SynonymLexicon::helpdesk(), Some(&AugmentConfig {
            target_per_class: 6,
            ..AugmentConfig::default()
        }))
        .unwrap();
        assert_eq!(samples.len(), 30);
        let cfg = TrainConfig {
            epochs: 80,
            dropout_rate: 0.0,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let model = train_nn_classifier(&samples, &cats, &text, &cfg, false).unwrap();
        assert_eq!(model.history.len(), 80);
        let ev = evaluate(&Classifier::Mlp(model), &data).unwrap();
        assert!(ev.report.accuracy >= 0.9, "{}", ev.report.to_text());
        assert!(evaluate(&Classifier::Tree(train_tree_classifier(&data, &cats, None).unwrap()), &[]).is_err());
    }
}
