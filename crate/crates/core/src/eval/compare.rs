//! Three-way comparison on one shared split: network without
//! augmentation, network with augmentation, and the keyword tree.

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, SynonymLexicon};
use crate::error::Result;
use crate::eval::split::split_labeled;
use crate::eval::synth::{generate_corpus, SynthSpec};
use crate::labeling::{Categories, LabeledEmail};
use crate::models::mlp::TrainConfig;
use crate::models::Classifier;
use crate::pipeline::{evaluate, prepare_nn_samples, train_nn_classifier, train_tree_classifier, Evaluation};
use crate::rng::{derive_seed, stage};
use crate::textprep::TextPipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub train_ratio: f64,
    pub seed: u64,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub tree_max_depth: Option<usize>,
    pub scale: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            train_ratio: 0.8,
            seed: 0,
            train: TrainConfig::default(),
            augment: AugmentConfig::default(),
            tree_max_depth: None,
            scale: false,
        }
    }
}

impl CompareConfig {
    /// Stage seeds derived from `self.seed`.
    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, stage::SPLIT)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, stage::TRAIN),
            ..self.train
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            seed: derive_seed(self.seed, stage::AUGMENT),
            ..self.augment
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub train_size: usize,
    pub test_size: usize,
    pub nn: Evaluation,
    pub nn_augmented: Evaluation,
    pub tree: Evaluation,
}

impl Comparison {
    pub fn runs(&self) -> [(&'static str, &Evaluation); 3] {
        [
            ("nn", &self.nn),
            ("nn+aug", &self.nn_augmented),
            ("tree", &self.tree),
        ]
    }

    /// One line per run: accuracy and macro averages.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<8} {:>9} {:>9} {:>9} {:>9}\n",
            "model", "accuracy", "macro-p", "macro-r", "macro-f1"
        );
        for (name, ev) in self.runs() {
            let r = &ev.report;
            out.push_str(&format!(
                "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
                name, r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1
            ));
        }
        out
    }
}

pub fn compare_runs(
    corpus: &[LabeledEmail],
    categories: &Categories,
    text: &TextPipeline,
    lexicon: &SynonymLexicon,
    config: &CompareConfig,
) -> Result<Comparison> {
    let (train, test) = split_labeled(corpus, config.train_ratio, config.split_seed())?;
    let train_cfg = config.train_config();
    let aug_cfg = config.augment_config();

    let plain = prepare_nn_samples(&train, categories, text, lexicon, None)?;
    let nn = train_nn_classifier(&plain, categories, text, &train_cfg, config.scale)?;
    let augmented = prepare_nn_samples(&train, categories, text, lexicon, Some(&aug_cfg))?;
    let nn_aug = train_nn_classifier(&augmented, categories, text, &train_cfg, config.scale)?;
    let tree = train_tree_classifier(&train, categories, config.tree_max_depth)?;

    Ok(Comparison {
        train_size: train.len(),
        test_size: test.len(),
        nn: evaluate(&Classifier::Mlp(nn), &test)?,
        nn_augmented: evaluate(&Classifier::Mlp(nn_aug), &test)?,
        tree: evaluate(&Classifier::Tree(tree), &test)?,
    })
}

/// Generates a corpus from `spec` and runs [`compare_runs`] against the
/// generated labels rather than keyword labels. Keyword labels are a
/// function of the tree's own features, so they cannot show how either
/// model copes with emails whose keywords are missing or misleading.
pub fn synthetic_comparison(
    spec: &SynthSpec,
    categories: &Categories,
    text: &TextPipeline,
    lexicon: &SynonymLexicon,
    config: &CompareConfig,
) -> Result<Comparison> {
    let labeled = generate_corpus(spec)?.ground_truth()?;
    compare_runs(&labeled, categories, text, lexicon, config)
}

/// Median of `values`; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}
