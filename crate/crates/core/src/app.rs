//! Pipeline configuration and the classification engine shared by the CLI
//! and the HTTP service.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, SynonymLexicon};
use crate::autoreply::{decide, ReplyDecision, ReplyTemplates, ThresholdDirection, ThresholdPolicy};
use crate::corpus::{clean, Direction, RawEmail};
use crate::error::{Result, TriageError};
use crate::eval::compare::CompareConfig;
use crate::labeling::Categories;
use crate::models::mlp::TrainConfig;
use crate::models::{Classifier, Prediction, FORMAT_VERSION};
use crate::rng::{derive_seed, stage};
use crate::textprep::{LemmaRules, Stoplist, TextPipeline};

/// Env var naming the default config file.
pub const CONFIG_ENV: &str = "TRIAGE_CONFIG";

/// Paths left unset fall back to the built-in helpdesk resources.
/// Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub thesaurus: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub lemma_exceptions: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub train_ratio: f64,
    pub threshold: f64,
    pub threshold_direction: ThresholdDirection,
    pub seed: u64,
    pub scale: bool,
    pub tree_max_depth: Option<usize>,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            categories: None,
            thesaurus: None,
            stoplist: None,
            lemma_exceptions: None,
            templates: None,
            train_ratio: 0.8,
            threshold: 0.75,
            threshold_direction: ThresholdDirection::default(),
            seed: 0,
            scale: false,
            tree_max_depth: None,
            train: TrainConfig::default(),
            augment: AugmentConfig::default(),
        }
    }
}

/// Everything loaded from the files a config points at.
#[derive(Debug, Clone)]
pub struct Resources {
    pub categories: Categories,
    pub text: TextPipeline,
    pub lexicon: SynonymLexicon,
    pub templates: ReplyTemplates,
}

impl Resources {
    pub fn helpdesk() -> Self {
        Resources {
            categories: Categories::default_helpdesk(),
            text: TextPipeline::default(),
            lexicon: SynonymLexicon::helpdesk(),
            templates: ReplyTemplates::helpdesk(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(s).map_err(|e| TriageError::invalid(format!("config: {}", e.message())))?;
        for path in cfg.paths_mut().into_iter().flatten() {
            if path.is_relative() {
                *path = base_dir.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        PipelineConfig::from_toml_str(&s, base)
    }

    /// `explicit`, else the file named by `TRIAGE_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => PipelineConfig::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => PipelineConfig::load(Path::new(&p)),
                _ => Ok(PipelineConfig::default()),
            },
        }
    }

    fn paths_mut(&mut self) -> [&mut Option<PathBuf>; 6] {
        [
            &mut self.corpus,
            &mut self.categories,
            &mut self.thesaurus,
            &mut self.stoplist,
            &mut self.lemma_exceptions,
            &mut self.templates,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(TriageError::invalid(format!(
                "train_ratio must be in (0, 1), got {}",
                self.train_ratio
            )));
        }
        self.policy().validate()?;
        self.train.validate()?;
        self.augment.validate()?;
        let mut copy = self.clone();
        for path in copy.paths_mut().into_iter().flatten() {
            if !path.exists() {
                return Err(TriageError::invalid(format!(
                    "config references missing file {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn policy(&self) -> ThresholdPolicy {
        ThresholdPolicy {
            threshold: self.threshold,
            direction: self.threshold_direction,
        }
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, stage::SPLIT)
    }

    pub fn synth_seed(&self) -> u64 {
        derive_seed(self.seed, stage::SYNTH)
    }

    pub fn train_config(&self) -> TrainConfig {
        self.compare_config().train_config()
    }

    pub fn augment_config(&self) -> AugmentConfig {
        self.compare_config().augment_config()
    }

    pub fn compare_config(&self) -> CompareConfig {
        CompareConfig {
            train_ratio: self.train_ratio,
            seed: self.seed,
            train: self.train,
            augment: self.augment,
            tree_max_depth: self.tree_max_depth,
            scale: self.scale,
        }
    }

    pub fn load_resources(&self) -> Result<Resources> {
        let categories = match &self.categories {
            Some(p) => Categories::load(p)?,
            None => Categories::default_helpdesk(),
        };
        let mut rules = LemmaRules::english();
        if let Some(p) = &self.lemma_exceptions {
            rules.load_exceptions(p)?;
        }
        let stoplist = match &self.stoplist {
            Some(p) => Stoplist::load(p)?,
            None => Stoplist::english(),
        };
        let lexicon = match &self.thesaurus {
            Some(p) => SynonymLexicon::load(p)?,
            None => SynonymLexicon::helpdesk(),
        };
        let templates = match &self.templates {
            Some(p) => ReplyTemplates::load(p)?,
            None => ReplyTemplates::helpdesk(),
        };
        templates.check_coverage(&categories)?;
        Ok(Resources {
            categories,
            text: TextPipeline::new(rules, stoplist),
            lexicon,
            templates,
        })
    }
}

/// Raw subject and body as sent by a caller. Missing fields are empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmailText {
    pub subject: String,
    pub body: String,
}

impl EmailText {
    /// A JSON object with `subject`/`body`, or else plain text taken as
    /// the body.
    pub fn parse(text: &str) -> Self {
        match serde_json::from_str::<EmailText>(text) {
            Ok(e) if text.trim_start().starts_with('{') => e,
            _ => EmailText {
                subject: String::new(),
                body: text.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutcome {
    pub category: String,
    pub confidence: f64,
    pub tailored: bool,
}

/// An immutable model plus reply templates. Shared read-only by the CLI
/// and every service request.
#[derive(Debug, Clone)]
pub struct TriageEngine {
    model: Classifier,
    templates: ReplyTemplates,
    policy: ThresholdPolicy,
}

impl TriageEngine {
    pub fn new(model: Classifier, templates: ReplyTemplates, policy: ThresholdPolicy) -> Result<Self> {
        policy.validate()?;
        templates.check_coverage(model.categories())?;
        Ok(TriageEngine {
            model,
            templates,
            policy,
        })
    }

    pub fn model(&self) -> &Classifier {
        &self.model
    }

    pub fn policy(&self) -> &ThresholdPolicy {
        &self.policy
    }

    pub fn model_version(&self) -> String {
        format!("{}-v{}", self.model.kind(), FORMAT_VERSION)
    }

    /// Cleans subject and body with the corpus rules, then classifies.
    pub fn classify_raw(&self, subject: &str, body: &str) -> Result<Prediction> {
        let email = clean(&RawEmail {
            id: "request".into(),
            thread_id: "request".into(),
            direction: Direction::Incoming,
            subject: subject.into(),
            body: body.into(),
            timestamp: None,
        })?;
        self.model.classify(&email)
    }

    pub fn classify_email(&self, email: &EmailText) -> Result<ClassifyOutcome> {
        let p = self.classify_raw(&email.subject, &email.body)?;
        Ok(ClassifyOutcome {
            tailored: self.policy.is_tailored(p.confidence),
            category: p.category,
            confidence: p.confidence,
        })
    }

    pub fn reply_email(&self, email: &EmailText) -> Result<ReplyDecision> {
        self.reply_raw(&email.subject, &email.body)
    }

    pub fn reply_raw(&self, subject: &str, body: &str) -> Result<ReplyDecision> {
        let prediction = self.classify_raw(subject, body)?;
        Ok(decide(&prediction, self.model.categories(), &self.templates, &self.policy))
    }
}
