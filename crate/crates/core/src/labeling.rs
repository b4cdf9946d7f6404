//! Keyword-rule labeling.
//!
//! Categories are ordered by rank; an email is assigned to the first
//! category any of whose keywords occurs in it. Keywords go through the
//! same cleaning as emails, so "wi-fi" matches as "wifi". Matching is a
//! case-insensitive substring test with no word boundaries.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{clean_text, CleanEmail};
use crate::error::{Result, TriageError};

const DEFAULT_CATEGORIES: &str = include_str!("../data/categories.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub name: String,
    pub rank: usize,
    pub keywords: Vec<String>,
    pub template_id: String,
}

/// A validated, rank-ordered list of categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CategorySpec>", into = "Vec<CategorySpec>")]
pub struct Categories {
    specs: Vec<CategorySpec>,
    /// Cleaned, lowercased keywords, parallel to `specs`.
    matchers: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct CategoryFile {
    category: Vec<CategorySpec>,
}

impl TryFrom<Vec<CategorySpec>> for Categories {
    type Error = TriageError;

    fn try_from(specs: Vec<CategorySpec>) -> Result<Self> {
        Categories::new(specs)
    }
}

impl From<Categories> for Vec<CategorySpec> {
    fn from(c: Categories) -> Self {
        c.specs
    }
}

pub fn normalize_keyword(keyword: &str) -> String {
    clean_text(keyword).to_lowercase()
}

impl Categories {
    /// Sorts by rank and checks the invariants: unique names, ranks
    /// exactly `0..n`, and non-empty keyword lists.
    pub fn new(mut specs: Vec<CategorySpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(TriageError::CategoryConfig("no categories defined".into()));
        }
        specs.sort_by_key(|s| s.rank);
        let mut names = HashSet::new();
        for (i, spec) in specs.iter().enumerate() {
            if spec.rank != i {
                return Err(TriageError::CategoryConfig(format!(
                    "ranks must be unique and contiguous from 0; found rank {} at position {i}",
                    spec.rank
                )));
            }
            if spec.name.trim().is_empty() {
                return Err(TriageError::CategoryConfig("empty category name".into()));
            }
            if !names.insert(spec.name.as_str()) {
                return Err(TriageError::CategoryConfig(format!(
                    "duplicate category name {:?}",
                    spec.name
                )));
            }
            if spec.keywords.is_empty() {
                return Err(TriageError::CategoryConfig(format!(
                    "category {:?} has no keywords",
                    spec.name
                )));
            }
        }
        let mut matchers = Vec::with_capacity(specs.len());
        for spec in &specs {
            let mut m = Vec::with_capacity(spec.keywords.len());
            for kw in &spec.keywords {
                let norm = normalize_keyword(kw);
                if norm.is_empty() {
                    return Err(TriageError::CategoryConfig(format!(
                        "keyword {kw:?} of {:?} is empty after cleaning",
                        spec.name
                    )));
                }
                m.push(norm);
            }
            matchers.push(m);
        }
        Ok(Categories { specs, matchers })
    }

    /// The five-category helpdesk configuration shipped with the crate.
    pub fn default_helpdesk() -> Self {
        Categories::from_toml_str(DEFAULT_CATEGORIES).expect("embedded category config is valid")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: CategoryFile =
            toml::from_str(s).map_err(|e| TriageError::CategoryConfig(e.to_string()))?;
        Categories::new(file.category)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        Categories::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&CategoryFile {
            category: self.specs.clone(),
        })
        .expect("category config serializes")
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[CategorySpec] {
        &self.specs
    }

    pub fn get(&self, index: usize) -> Option<&CategorySpec> {
        self.specs.get(index)
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn require_index(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| TriageError::UnknownCategory(name.to_string()))
    }

    /// Normalized keywords flattened in (rank, list position) order.
    pub fn flat_keywords(&self) -> impl Iterator<Item = &str> {
        self.matchers.iter().flatten().map(String::as_str)
    }

    /// Original keyword strings in the same order as [`Self::flat_keywords`].
    pub fn feature_names(&self) -> Vec<String> {
        self.specs
            .iter()
            .flat_map(|s| s.keywords.iter().cloned())
            .collect()
    }

    pub fn keyword_count(&self) -> usize {
        self.matchers.iter().map(Vec::len).sum()
    }

    /// Index of the first category with a keyword in `text`.
    pub fn match_text(&self, text: &str) -> Option<usize> {
        let haystack = clean_text(text).to_lowercase();
        self.matchers
            .iter()
            .position(|kws| kws.iter().any(|kw| haystack.contains(kw.as_str())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEmail {
    #[serde(flatten)]
    pub email: CleanEmail,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub emails: Vec<LabeledEmail>,
    /// Per-category counts in rank order.
    pub counts: Vec<(String, usize)>,
    pub unmatched: usize,
}

pub fn match_category<'a>(email: &CleanEmail, categories: &'a Categories) -> Option<&'a CategorySpec> {
    categories
        .match_text(email.text())
        .and_then(|i| categories.get(i))
}

/// Keeps the emails that match a category, each labeled once.
pub fn build_labeled_corpus(emails: &[CleanEmail], categories: &Categories) -> Result<LabeledCorpus> {
    let mut counts = vec![0usize; categories.len()];
    let mut labeled = Vec::new();
    for email in emails {
        if let Some(i) = categories.match_text(email.text()) {
            counts[i] += 1;
            labeled.push(LabeledEmail {
                email: email.clone(),
                category: categories.specs[i].name.clone(),
            });
        }
    }
    if labeled.is_empty() {
        return Err(TriageError::NoMatches);
    }
    Ok(LabeledCorpus {
        unmatched: emails.len() - labeled.len(),
        counts: categories.names().into_iter().zip(counts).collect(),
        emails: labeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn email(text: &str) -> CleanEmail {
        CleanEmail::new("e", text).unwrap()
    }

    #[test]
    fn default_config_mirrors_keyword_table() {
        let cats = Categories::default_helpdesk();
        assert_eq!(
            cats.names(),
            ["adobe", "appsanywhere", "blackboard", "password", "wifi"]
        );
        let sizes: Vec<_> = cats.specs().iter().map(|s| s.keywords.len()).collect();
        assert_eq!(sizes, [2, 3, 1, 5, 7]);
        assert_eq!(cats.keyword_count(), 18);
        let flat: Vec<_> = cats.flat_keywords().collect();
        assert!(flat.contains(&"creative cloud"));
        assert!(flat.contains(&"multifactor"));
        assert!(flat.contains(&"remote access"));
        // "wi-fi" and "multi-factor" collapse onto their unhyphenated forms
        assert_eq!(flat.iter().filter(|k| **k == "wifi").count(), 2);
    }

    #[test]
    fn creative_cloud_email_is_adobe() {
        let cats = Categories::default_helpdesk();
        let e = email("creative cloud Hi I can no longer load any of the adobe products on my PC as It says licence has expired Is this a known issue");
        assert_eq!(match_category(&e, &cats).unwrap().name, "adobe");
    }

    #[test]
    fn first_match_wins() {
        let cats = Categories::default_helpdesk();
        let e = email("my password works but the wifi does not");
        assert_eq!(match_category(&e, &cats).unwrap().name, "password");
    }

    #[test]
    fn no_keyword_no_category() {
        let cats = Categories::default_helpdesk();
        assert!(match_category(&email("my laptop screen is cracked"), &cats).is_none());
    }

    #[test]
    fn substring_matching_has_no_word_boundary() {
        let cats = Categories::default_helpdesk();
        assert_eq!(
            match_category(&email("not very comfartable"), &cats).unwrap().name,
            "password"
        );
        assert_eq!(
            match_category(&email("The WI FI"), &cats),
            None,
            "space-separated variant is not a listed keyword"
        );
        assert_eq!(match_category(&email("Wi-Fi down"), &cats).unwrap().name, "wifi");
    }

    #[test]
    fn labeled_corpus_drops_unmatched() {
        let cats = Categories::default_helpdesk();
        let emails: Vec<_> = [
            "blackboard is down",
            "printer jam",
            "eduroam again",
            "coffee machine",
            "password and wifi",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| CleanEmail::new(i.to_string(), t).unwrap())
        .collect();
        let corpus = build_labeled_corpus(&emails, &cats).unwrap();
        assert_eq!(corpus.emails.len(), 3);
        assert_eq!(corpus.unmatched, 2);
        assert_eq!(corpus.emails[2].category, "password");
        let counts: Vec<_> = corpus.counts.iter().map(|(_, c)| *c).collect();
        assert_eq!(counts, [0, 0, 1, 1, 1]);
    }

    #[test]
    fn labeled_corpus_requires_a_match() {
        let cats = Categories::default_helpdesk();
        let emails = vec![email("nothing relevant")];
        assert!(matches!(
            build_labeled_corpus(&emails, &cats),
            Err(TriageError::NoMatches)
        ));
    }

    #[test]
    fn config_validation() {
        let spec = |name: &str, rank: usize, kws: &[&str]| CategorySpec {
            name: name.into(),
            rank,
            keywords: kws.iter().map(|s| s.to_string()).collect(),
            template_id: name.into(),
        };
        assert!(Categories::new(vec![spec("a", 0, &["x"]), spec("a", 1, &["y"])]).is_err());
        assert!(Categories::new(vec![spec("a", 0, &["x"]), spec("b", 2, &["y"])]).is_err());
        assert!(Categories::new(vec![spec("a", 0, &[])]).is_err());
        assert!(Categories::new(vec![spec("a", 0, &["--"])]).is_err());
        let ok = Categories::new(vec![spec("b", 1, &["y"]), spec("a", 0, &["x"])]).unwrap();
        assert_eq!(ok.names(), ["a", "b"]);
    }

    #[test]
    fn toml_round_trip() {
        let cats = Categories::default_helpdesk();
        let again = Categories::from_toml_str(&cats.to_toml_string()).unwrap();
        assert_eq!(cats, again);
    }

    proptest! {
        #[test]
        fn labeling_is_deterministic_and_monotone(
            words in proptest::collection::vec(
                prop::sample::select(vec!["wifi", "adobe", "blackboard", "mfa", "laptop", "hello", "license", "printer"]),
                1..8),
            drop in 0usize..5,
        ) {
            let cats = Categories::default_helpdesk();
            let e = email(&words.join(" "));
            let first = match_category(&e, &cats).map(|s| s.name.clone());
            prop_assert_eq!(match_category(&e, &cats).map(|s| s.name.clone()), first.clone());

            // Removing a category the email did not match leaves its label alone.
            let dropped = cats.specs()[drop].name.clone();
            if first.as_deref() != Some(dropped.as_str()) {
                let remaining: Vec<_> = cats.specs().iter()
                    .filter(|s| s.name != dropped)
                    .enumerate()
                    .map(|(i, s)| CategorySpec { rank: i, ..s.clone() })
                    .collect();
                let fewer = Categories::new(remaining).unwrap();
                prop_assert_eq!(match_category(&e, &fewer).map(|s| s.name.clone()), first);
            }
        }
    }
}
