//! Bag-of-words count vectors and binary keyword-presence vectors.

use std::collections::HashMap;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CleanEmail;
use crate::error::{Result, TriageError};
use crate::labeling::Categories;
use crate::textprep::TokenSeq;

/// Sorted, de-duplicated training terms with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = TriageError;

    fn try_from(terms: Vec<String>) -> Result<Self> {
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TriageError::Artifact(
                "vocab: terms must be sorted and unique".into(),
            ));
        }
        Ok(Vocabulary::from_sorted(terms))
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

impl Vocabulary {
    fn from_sorted(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { terms, index }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// One term per line.
    pub fn to_text(&self) -> String {
        let mut s = self.terms.join("\n");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| TriageError::io(path, e))
    }
}

pub fn build_vocabulary<'a, I>(docs: I) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a TokenSeq>,
{
    let mut terms: Vec<String> = docs.into_iter().flat_map(|d| d.iter().cloned()).collect();
    terms.sort_unstable();
    terms.dedup();
    if terms.is_empty() {
        return Err(TriageError::EmptyCorpus);
    }
    Ok(Vocabulary::from_sorted(terms))
}

/// Dense non-negative feature values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_binary(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

/// Term counts over `vocab`; unknown tokens are ignored.
pub fn bow_vector(tokens: &TokenSeq, vocab: &Vocabulary) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    for t in tokens {
        if let Some(i) = vocab.position(t) {
            values[i] += 1.0;
        }
    }
    FeatureVector(values)
}

/// One indicator per keyword, flattened in (rank, list position) order.
pub fn keyword_vector(email: &CleanEmail, categories: &Categories) -> FeatureVector {
    let text = email.text().to_lowercase();
    FeatureVector(
        categories
            .flat_keywords()
            .map(|kw| if text.contains(kw) { 1.0 } else { 0.0 })
            .collect(),
    )
}

/// Per-feature min-max scaling fitted on training vectors. Constant
/// features map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(vectors: &[FeatureVector]) -> Result<Self> {
        let first = vectors.first().ok_or(TriageError::EmptyCorpus)?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for v in &vectors[1..] {
            if v.len() != min.len() {
                return Err(TriageError::Dimension {
                    expected: min.len(),
                    actual: v.len(),
                });
            }
            for (i, &x) in v.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, v: &FeatureVector) -> Result<FeatureVector> {
        if v.len() != self.min.len() {
            return Err(TriageError::Dimension {
                expected: self.min.len(),
                actual: v.len(),
            });
        }
        Ok(FeatureVector(
            v.iter()
                .zip(self.min.iter().zip(&self.max))
                .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenSeq {
        TokenSeq::from_words(words)
    }

    #[test]
    fn vocabulary_is_sorted_union() {
        let docs = [toks(&["internet", "not", "work"]), toks(&["work", "password"])];
        let v = build_vocabulary(&docs).unwrap();
        assert_eq!(v.terms(), ["internet", "not", "password", "work"]);
        assert_eq!(build_vocabulary(&docs).unwrap(), v);
        let single = [toks(&["a", "a", "a"])];
        assert_eq!(build_vocabulary(&single).unwrap().terms(), ["a"]);
        assert!(matches!(
            build_vocabulary(&[toks(&[])]),
            Err(TriageError::EmptyCorpus)
        ));
    }

    #[test]
    fn vocabulary_serde_checks_order() {
        let v = build_vocabulary(&[toks(&["b", "a"])]).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"["a","b"]"#);
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), v);
        assert!(serde_json::from_str::<Vocabulary>(r#"["b","a"]"#).is_err());
        assert_eq!(v.to_text(), "a\nb\n");
    }

    #[test]
    fn bow_counts() {
        let v = build_vocabulary(&[toks(&["internet", "not", "password", "work"])]).unwrap();
        assert_eq!(
            bow_vector(&toks(&["work", "work", "internet"]), &v).to_vec(),
            [1.0, 0.0, 0.0, 2.0]
        );
        assert_eq!(bow_vector(&toks(&["zzz", "yyy"]), &v).to_vec(), [0.0; 4]);
        assert_eq!(
            bow_vector(&toks(&["internet", "work", "work"]), &v),
            bow_vector(&toks(&["work", "internet", "work"]), &v)
        );
    }

    #[test]
    fn keyword_vectors() {
        let cats = Categories::default_helpdesk();
        let names = cats.feature_names();
        let kv = |t: &str| keyword_vector(&CleanEmail::new("x", t).unwrap(), &cats);

        let v = kv("adobe licence expired");
        assert_eq!(v.len(), 18);
        let ones: Vec<_> = v.iter().enumerate().filter(|(_, &x)| x == 1.0).map(|(i, _)| names[i].as_str()).collect();
        assert_eq!(ones, ["Adobe"]);

        assert!(kv("nothing here").iter().all(|&x| x == 0.0));

        let v = kv("password and wifi down");
        let ones: Vec<_> = v.iter().enumerate().filter(|(_, &x)| x == 1.0).map(|(i, _)| names[i].as_str()).collect();
        assert_eq!(ones, ["password", "wifi", "wi-fi"]);
    }

    #[test]
    fn min_max_scaling() {
        let vs = vec![FeatureVector::new(vec![0.0, 2.0, 5.0]), FeatureVector::new(vec![4.0, 2.0, 1.0])];
        let s = MinMaxScaler::fit(&vs).unwrap();
        assert_eq!(s.transform(&vs[0]).unwrap().to_vec(), [0.0, 0.0, 1.0]);
        assert_eq!(s.transform(&FeatureVector::new(vec![2.0, 9.0, 3.0])).unwrap().to_vec(), [0.5, 0.0, 0.5]);
        assert!(s.transform(&FeatureVector::zeros(2)).is_err());
    }

    proptest! {
        #[test]
        fn bow_sum_counts_in_vocab_tokens(
            vocab_words in proptest::collection::vec("[a-e]{1,2}", 1..10),
            doc in proptest::collection::vec("[a-e]{1,2}", 0..20),
        ) {
            let v = build_vocabulary(&[TokenSeq::from_words(&vocab_words)]).unwrap();
            let d = TokenSeq::from_words(&doc);
            let bow = bow_vector(&d, &v);
            prop_assert_eq!(bow.len(), v.len());
            let in_vocab = d.iter().filter(|t| v.position(t).is_some()).count();
            prop_assert_eq!(bow.iter().sum::<f64>(), in_vocab as f64);
        }

        #[test]
        fn keyword_vector_is_or_over_parts(
            parts in proptest::collection::vec(
                prop::sample::select(vec!["wifi", "adobe", "creative", "cloud", "mfa", "laptop", "remote", "access", "eduroam"]),
                2..8),
            cut in 1usize..7,
        ) {
            let cats = Categories::default_helpdesk();
            let cut = cut.min(parts.len() - 1);
            let whole = keyword_vector(&CleanEmail::new("w", &parts.join(" ")).unwrap(), &cats);
            let left = keyword_vector(&CleanEmail::new("l", &parts[..cut].join(" ")).unwrap(), &cats);
            let right = keyword_vector(&CleanEmail::new("r", &parts[cut..].join(" ")).unwrap(), &cats);
            prop_assert!(whole.is_binary());
            for i in 0..whole.len() {
                // Presence in a part implies presence in the whole.
                prop_assert!(whole[i] >= left[i].max(right[i]));
            }
        }
    }
}
