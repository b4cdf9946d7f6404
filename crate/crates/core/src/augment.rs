//! Synonym-replacement augmentation and per-category rebalancing.
//!
//! Augmentation only ever runs on the training partition, after the split.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::labeling::Categories;
use crate::rng::{derive_seed, seeded};
use crate::textprep::TokenSeq;

const DEFAULT_THESAURUS: &str = include_str!("../data/thesaurus.txt");

/// Word → synonyms. Lowercase throughout; no word lists itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    pub fn helpdesk() -> Self {
        SynonymLexicon::parse(DEFAULT_THESAURUS).expect("embedded thesaurus is valid")
    }

    /// Parses `word: syn1, syn2` lines. Blank lines and `#` comments are
    /// skipped; repeated headwords merge.
    pub fn parse(s: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| TriageError::Thesaurus {
                line: i + 1,
                message: message.into(),
            };
            let (head, rest) = line.split_once(':').ok_or_else(|| err("missing ':'"))?;
            let head = head.trim().to_lowercase();
            if head.is_empty() || head.contains(char::is_whitespace) {
                return Err(err("headword must be a single word"));
            }
            let syns: Vec<String> = rest
                .split(',')
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            if syns.is_empty() {
                return Err(err("no synonyms listed"));
            }
            let list = entries.entry(head.clone()).or_default();
            for syn in syns {
                if syn != head && !list.contains(&syn) {
                    list.push(syn);
                }
            }
            if list.is_empty() {
                return Err(err("a word cannot be its own only synonym"));
            }
        }
        Ok(SynonymLexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        SynonymLexicon::parse(&s)
    }

    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub target_per_class: usize,
    /// Fraction of eligible tokens replaced in each generated sentence.
    pub replace_fraction: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            target_per_class: 200,
            replace_fraction: 0.3,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_per_class < 1 {
            return Err(TriageError::invalid("target_per_class must be at least 1"));
        }
        if !(self.replace_fraction > 0.0 && self.replace_fraction <= 1.0) {
            return Err(TriageError::invalid(format!(
                "replace_fraction must be in (0, 1], got {}",
                self.replace_fraction
            )));
        }
        Ok(())
    }
}

/// Swaps `ceil(fraction * eligible)` tokens that have lexicon entries for a
/// uniformly chosen synonym. Positions without entries are never touched.
pub fn synonym_replace<R: Rng + ?Sized>(
    tokens: &TokenSeq,
    lexicon: &SynonymLexicon,
    replace_fraction: f64,
    rng: &mut R,
) -> TokenSeq {
    let eligible: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lexicon.synonyms(t).is_some())
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return tokens.clone();
    }
    let k = ((replace_fraction * eligible.len() as f64) - 1e-9)
        .ceil()
        .clamp(0.0, eligible.len() as f64) as usize;
    let mut out: Vec<String> = tokens.to_vec();
    for pick in index::sample(rng, eligible.len(), k).into_vec() {
        let pos = eligible[pick];
        let syns = lexicon.synonyms(&out[pos]).expect("eligible token has synonyms");
        out[pos] = syns[rng.random_range(0..syns.len())].clone();
    }
    TokenSeq::from_words(out)
}

/// A preprocessed training sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSample {
    pub id: String,
    pub category: String,
    pub tokens: TokenSeq,
    /// Id of the original this sample was generated from, if augmented.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Tops every category up to `target_per_class` with synonym variants of
/// its originals, chosen round-robin. Originals are kept untouched, even
/// above the target. Output is grouped by category in rank order, with
/// originals first in input order.
///
/// Each category draws from its own stream seeded by `(seed, rank)`.
pub fn rebalance(
    train: &[TokenSample],
    categories: &Categories,
    config: &AugmentConfig,
    lexicon: &SynonymLexicon,
) -> Result<Vec<TokenSample>> {
    config.validate()?;
    let mut groups: Vec<Vec<&TokenSample>> = vec![Vec::new(); categories.len()];
    for sample in train {
        groups[categories.require_index(&sample.category)?].push(sample);
    }
    let mut out = Vec::with_capacity(groups.len() * config.target_per_class);
    for (rank, originals) in groups.iter().enumerate() {
        if originals.is_empty() {
            return Err(TriageError::EmptyCategory(categories.specs()[rank].name.clone()));
        }
        out.extend(originals.iter().map(|s| (*s).clone()));
        let mut rng = seeded(derive_seed(config.seed, rank as u64));
        let missing = config.target_per_class.saturating_sub(originals.len());
        for j in 0..missing {
            let src = originals[j % originals.len()];
            out.push(TokenSample {
                id: format!("{}#aug{}", src.id, j / originals.len() + 1),
                category: src.category.clone(),
                tokens: synonym_replace(&src.tokens, lexicon, config.replace_fraction, &mut rng),
                source: Some(src.id.clone()),
            });
        }
    }
    Ok(out)
}
