//! The two trained classifiers and their on-disk artifact.

pub mod mlp;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::CleanEmail;
use crate::error::{Result, TriageError};
use crate::features::{bow_vector, keyword_vector, FeatureVector, MinMaxScaler, Vocabulary};
use crate::labeling::{Categories, CategorySpec};
use crate::textprep::TextPipeline;

use mlp::{EpochStats, Network, TrainConfig};
use tree::DecisionTree;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub category: String,
    #[serde(skip)]
    pub index: usize,
    pub confidence: f64,
}

/// Bag-of-words network with everything needed to featurize raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub categories: Categories,
    pub pipeline: TextPipeline,
    pub vocab: Vocabulary,
    pub scaler: Option<MinMaxScaler>,
    pub network: Network,
    pub train_config: TrainConfig,
    pub history: Vec<EpochStats>,
}

impl MlpClassifier {
    pub fn features(&self, email: &CleanEmail) -> Result<FeatureVector> {
        let bow = bow_vector(&self.pipeline.preprocess(email.text()), &self.vocab);
        match &self.scaler {
            Some(s) => s.transform(&bow),
            None => Ok(bow),
        }
    }

    pub fn predict_proba(&self, email: &CleanEmail) -> Result<Vec<f64>> {
        self.network.predict_proba(&self.features(email)?)
    }
}

/// Decision tree over binary keyword-presence vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeClassifier {
    pub categories: Categories,
    pub tree: DecisionTree,
    pub max_depth: Option<usize>,
}

impl TreeClassifier {
    pub fn features(&self, email: &CleanEmail) -> FeatureVector {
        keyword_vector(email, &self.categories)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlp,
    Tree,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Tree => "tree",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Mlp(MlpClassifier),
    Tree(TreeClassifier),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Mlp(_) => ModelKind::Mlp,
            Classifier::Tree(_) => ModelKind::Tree,
        }
    }

    pub fn categories(&self) -> &Categories {
        match self {
            Classifier::Mlp(m) => &m.categories,
            Classifier::Tree(t) => &t.categories,
        }
    }

    pub fn classify(&self, email: &CleanEmail) -> Result<Prediction> {
        let (index, confidence) = match self {
            Classifier::Mlp(m) => m.network.predict(&m.features(email)?)?,
            Classifier::Tree(t) => t.tree.predict(&t.features(email))?,
        };
        Ok(Prediction {
            category: self.categories().specs()[index].name.clone(),
            index,
            confidence,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let value = match self {
            Classifier::Mlp(m) => serde_json::to_value(MlpArtifact {
                format_version: FORMAT_VERSION,
                model_kind: ModelKind::Mlp,
                categories: m.categories.specs().to_vec(),
                vocab: m.vocab.clone(),
                preprocessing: m.pipeline.clone(),
                scaling: m.scaler.clone(),
                parameters: m.network.clone(),
                train_config: m.train_config,
                metrics: MlpMetrics {
                    history: m.history.clone(),
                },
            })?,
            Classifier::Tree(t) => serde_json::to_value(TreeArtifact {
                format_version: FORMAT_VERSION,
                model_kind: ModelKind::Tree,
                categories: t.categories.specs().to_vec(),
                feature_names: t.categories.feature_names(),
                parameters: t.tree.clone(),
                train_config: TreeTrainConfig {
                    max_depth: t.max_depth,
                },
                metrics: TreeMetrics {
                    depth: t.tree.depth(),
                    leaves: t.tree.leaves(),
                },
            })?,
        };
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(s).map_err(|e| TriageError::Artifact(e.to_string()))?;
        let version = value
            .get("format_version")
            .ok_or_else(|| TriageError::Artifact("missing field `format_version`".into()))?;
        if version.as_u64() != Some(FORMAT_VERSION as u64) {
            return Err(TriageError::Version {
                found: version.to_string(),
                expected: FORMAT_VERSION,
            });
        }
        let kind = value
            .get("model_kind")
            .ok_or_else(|| TriageError::Artifact("missing field `model_kind`".into()))?;
        let kind: ModelKind = serde_json::from_value(kind.clone())
            .map_err(|e| TriageError::Artifact(format!("model_kind: {e}")))?;
        let corrupt = |e: serde_json::Error| TriageError::Artifact(e.to_string());
        match kind {
            ModelKind::Mlp => {
                let a: MlpArtifact = serde_json::from_value(value).map_err(corrupt)?;
                let categories = Categories::new(a.categories)
                    .map_err(|e| TriageError::Artifact(format!("categories: {e}")))?;
                a.parameters.params.check_shapes()?;
                if a.parameters.inputs() != a.vocab.len() {
                    return Err(TriageError::Artifact(format!(
                        "parameters: network expects {} inputs but vocab has {} terms",
                        a.parameters.inputs(),
                        a.vocab.len()
                    )));
                }
                if a.parameters.classes() != categories.len() {
                    return Err(TriageError::Artifact(
                        "parameters: output size does not match categories".into(),
                    ));
                }
                if a.scaling.as_ref().is_some_and(|s| s.dim() != a.vocab.len()) {
                    return Err(TriageError::Artifact(
                        "scaling: dimension does not match vocab".into(),
                    ));
                }
                Ok(Classifier::Mlp(MlpClassifier {
                    categories,
                    pipeline: a.preprocessing,
                    vocab: a.vocab,
                    scaler: a.scaling,
                    network: a.parameters,
                    train_config: a.train_config,
                    history: a.metrics.history,
                }))
            }
            ModelKind::Tree => {
                let a: TreeArtifact = serde_json::from_value(value).map_err(corrupt)?;
                let categories = Categories::new(a.categories)
                    .map_err(|e| TriageError::Artifact(format!("categories: {e}")))?;
                if a.feature_names != categories.feature_names() {
                    return Err(TriageError::Artifact(
                        "feature_names: do not match the category keywords".into(),
                    ));
                }
                if a.parameters.n_features != a.feature_names.len()
                    || a.parameters.n_classes != categories.len()
                {
                    return Err(TriageError::Artifact(
                        "parameters: tree dimensions do not match categories".into(),
                    ));
                }
                a.parameters.validate()?;
                Ok(Classifier::Tree(TreeClassifier {
                    categories,
                    tree: a.parameters,
                    max_depth: a.train_config.max_depth,
                }))
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| TriageError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        Classifier::from_json(&s)
    }
}

#[derive(Serialize, Deserialize)]
struct MlpMetrics {
    history: Vec<EpochStats>,
}

#[derive(Serialize, Deserialize)]
struct MlpArtifact {
    format_version: u32,
    model_kind: ModelKind,
    categories: Vec<CategorySpec>,
    vocab: Vocabulary,
    preprocessing: TextPipeline,
    scaling: Option<MinMaxScaler>,
    parameters: Network,
    train_config: TrainConfig,
    metrics: MlpMetrics,
}

#[derive(Serialize, Deserialize)]
struct TreeTrainConfig {
    max_depth: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct TreeMetrics {
    depth: usize,
    leaves: usize,
}

#[derive(Serialize, Deserialize)]
struct TreeArtifact {
    format_version: u32,
    model_kind: ModelKind,
    categories: Vec<CategorySpec>,
    feature_names: Vec<String>,
    parameters: DecisionTree,
    train_config: TreeTrainConfig,
    metrics: TreeMetrics,
}
