//! Tailored auto-replies with a generic fallback.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CleanEmail;
use crate::error::{Result, TriageError};
use crate::labeling::Categories;
use crate::models::{Classifier, Prediction};

pub const SNIPPET_MARKER: &str = "{snippet}";

const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.toml");

/// A generic shell with one `{snippet}` slot and a static snippet per
/// template id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TemplateFile", into = "TemplateFile")]
pub struct ReplyTemplates {
    generic_shell: String,
    snippets: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct TemplateFile {
    generic_shell: String,
    #[serde(default)]
    snippets: BTreeMap<String, String>,
}

impl TryFrom<TemplateFile> for ReplyTemplates {
    type Error = TriageError;

    fn try_from(f: TemplateFile) -> Result<Self> {
        ReplyTemplates::new(f.generic_shell, f.snippets)
    }
}

impl From<ReplyTemplates> for TemplateFile {
    fn from(t: ReplyTemplates) -> Self {
        TemplateFile {
            generic_shell: t.generic_shell,
            snippets: t.snippets,
        }
    }
}

impl ReplyTemplates {
    pub fn new(generic_shell: String, snippets: BTreeMap<String, String>) -> Result<Self> {
        let markers = generic_shell.matches(SNIPPET_MARKER).count();
        if markers != 1 {
            return Err(TriageError::Template(format!(
                "generic_shell must contain {SNIPPET_MARKER} exactly once, found {markers}"
            )));
        }
        for (id, text) in &snippets {
            if text.contains('{') || text.contains('}') {
                return Err(TriageError::Template(format!(
                    "snippet {id:?} contains a placeholder"
                )));
            }
            if text.trim().is_empty() {
                return Err(TriageError::Template(format!("snippet {id:?} is empty")));
            }
        }
        Ok(ReplyTemplates {
            generic_shell,
            snippets,
        })
    }

    pub fn helpdesk() -> Self {
        ReplyTemplates::from_toml_str(DEFAULT_TEMPLATES).expect("embedded templates are valid")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| TriageError::Template(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        ReplyTemplates::from_toml_str(&s)
    }

    pub fn generic_shell(&self) -> &str {
        &self.generic_shell
    }

    pub fn snippet(&self, template_id: &str) -> Option<&str> {
        self.snippets.get(template_id).map(String::as_str)
    }

    /// Fails unless every category's template id has a snippet.
    pub fn check_coverage(&self, categories: &Categories) -> Result<()> {
        let missing: Vec<&str> = categories
            .specs()
            .iter()
            .filter(|c| !self.snippets.contains_key(&c.template_id))
            .map(|c| c.template_id.as_str())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(TriageError::Template(format!(
                "no snippet for template id(s): {}",
                missing.join(", ")
            )))
        }
    }

    pub fn render_tailored(&self, template_id: &str) -> Result<String> {
        let snippet = self
            .snippet(template_id)
            .ok_or_else(|| TriageError::Template(format!("no snippet for {template_id:?}")))?;
        Ok(self.generic_shell.replacen(SNIPPET_MARKER, snippet.trim(), 1))
    }

    /// The shell with the slot removed. A slot that sat on its own line
    /// takes the line with it, and runs of blank lines collapse to one.
    pub fn render_generic(&self) -> String {
        let filled = self.generic_shell.replacen(SNIPPET_MARKER, "", 1);
        let mut out = String::with_capacity(filled.len());
        let mut blank_run = false;
        for line in filled.split_inclusive('\n') {
            let blank = line.trim().is_empty();
            if blank && blank_run {
                continue;
            }
            blank_run = blank;
            out.push_str(line);
        }
        out
    }
}

/// Which side of the threshold gets the tailored reply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdDirection {
    /// Tailored when confidence >= threshold.
    #[default]
    TailorAtOrAbove,
    /// Tailored when confidence <= threshold.
    TailorAtOrBelow,
}

impl FromStr for ThresholdDirection {
    type Err = TriageError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tailor-at-or-above" | "above" => Ok(ThresholdDirection::TailorAtOrAbove),
            "tailor-at-or-below" | "below" => Ok(ThresholdDirection::TailorAtOrBelow),
            other => Err(TriageError::invalid(format!("unknown threshold direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub threshold: f64,
    #[serde(default)]
    pub direction: ThresholdDirection,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy {
            threshold: 0.75,
            direction: ThresholdDirection::TailorAtOrAbove,
        }
    }
}

impl ThresholdPolicy {
    pub fn new(threshold: f64) -> Result<Self> {
        let p = ThresholdPolicy {
            threshold,
            ..ThresholdPolicy::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.threshold) {
            Ok(())
        } else {
            Err(TriageError::invalid(format!(
                "threshold {} is outside [0, 1]",
                self.threshold
            )))
        }
    }

    pub fn is_tailored(&self, confidence: f64) -> bool {
        match self.direction {
            ThresholdDirection::TailorAtOrAbove => confidence >= self.threshold,
            ThresholdDirection::TailorAtOrBelow => confidence <= self.threshold,
        }
    }
}

/// Anything that can label a cleaned email.
pub trait Classify {
    fn categories(&self) -> &Categories;
    fn classify(&self, email: &CleanEmail) -> Result<Prediction>;
}

impl Classify for Classifier {
    fn categories(&self) -> &Categories {
        Classifier::categories(self)
    }

    fn classify(&self, email: &CleanEmail) -> Result<Prediction> {
        Classifier::classify(self, email)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplyDecision {
    pub category: Option<String>,
    pub confidence: f64,
    pub tailored: bool,
    pub rendered: String,
}

/// Classifies `email` and renders the reply. Missing snippets are caught
/// by [`ReplyTemplates::check_coverage`] when the model and templates are
/// loaded; here a gap degrades to the generic reply.
pub fn compose_reply<M: Classify + ?Sized>(
    email: &CleanEmail,
    model: &M,
    templates: &ReplyTemplates,
    policy: &ThresholdPolicy,
) -> Result<ReplyDecision> {
    let prediction = model.classify(email)?;
    Ok(decide(&prediction, model.categories(), templates, policy))
}

pub fn decide(
    prediction: &Prediction,
    categories: &Categories,
    templates: &ReplyTemplates,
    policy: &ThresholdPolicy,
) -> ReplyDecision {
    let tailored_text = policy
        .is_tailored(prediction.confidence)
        .then(|| categories.get(prediction.index))
        .flatten()
        .and_then(|spec| templates.render_tailored(&spec.template_id).ok());
    ReplyDecision {
        category: Some(prediction.category.clone()),
        confidence: prediction.confidence,
        tailored: tailored_text.is_some(),
        rendered: tailored_text.unwrap_or_else(|| templates.render_generic()),
    }
}
