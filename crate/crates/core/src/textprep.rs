//! Tokenization, rule-based lemmatization and stop-word removal.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.tsv");

/// Lowercase tokens free of whitespace and ASCII punctuation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }

    /// Builds a sequence from arbitrary strings, normalizing each the way
    /// [`tokenize`] does and dropping any that end up empty.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TokenSeq(
            words
                .into_iter()
                .flat_map(|w| tokenize(w.as_ref()).0)
                .collect(),
        )
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Lowercases, splits on whitespace and strips punctuation from each piece.
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(
        text.split_whitespace()
            .map(|w| {
                w.chars()
                    .filter(|c| !c.is_ascii_punctuation())
                    .flat_map(char::to_lowercase)
                    .collect::<String>()
            })
            .filter(|w| !w.is_empty())
            .collect(),
    )
}

/// Replace `suffix` with `replacement` when at least `min_stem` characters
/// precede it. An identity rule (`suffix == replacement`) stops processing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixRule {
    pub suffix: String,
    pub replacement: String,
    pub min_stem: usize,
    /// Repair the stem (undouble or restore a silent "e") after stripping.
    #[serde(default)]
    pub repair_stem: bool,
}

impl SuffixRule {
    fn new(suffix: &str, replacement: &str, min_stem: usize, repair_stem: bool) -> Self {
        SuffixRule {
            suffix: suffix.into(),
            replacement: replacement.into(),
            min_stem,
            repair_stem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaRules {
    pub suffix_rules: Vec<SuffixRule>,
    pub exceptions: BTreeMap<String, String>,
    /// Ordered (stem ending, append "e") entries; first match decides.
    pub e_restoration: Vec<(String, bool)>,
}

impl Default for LemmaRules {
    fn default() -> Self {
        LemmaRules::english()
    }
}

impl LemmaRules {
    pub fn english() -> Self {
        let suffix_rules = vec![
            SuffixRule::new("ies", "y", 2, false),
            SuffixRule::new("ied", "y", 2, false),
            SuffixRule::new("sses", "ss", 1, false),
            SuffixRule::new("xes", "x", 1, false),
            SuffixRule::new("ches", "ch", 1, false),
            SuffixRule::new("shes", "sh", 1, false),
            SuffixRule::new("ing", "", 3, true),
            SuffixRule::new("ed", "", 3, true),
            SuffixRule::new("es", "e", 2, false),
            SuffixRule::new("ss", "ss", 0, false),
            SuffixRule::new("us", "us", 0, false),
            SuffixRule::new("is", "is", 0, false),
            SuffixRule::new("s", "", 3, false),
        ];
        let e_restoration = [
            ("eat", false),
            ("oat", false),
            ("eak", false),
            ("air", false),
            ("our", false),
            ("oid", false),
            ("creat", true),
            ("at", true),
            ("let", true),
            ("ang", true),
            ("ag", true),
            ("ak", true),
            ("iv", true),
            ("ov", true),
            ("us", true),
            ("ur", true),
            ("ir", true),
            ("os", true),
            ("iz", true),
            ("bl", true),
            ("ut", true),
            ("enc", true),
            ("anc", true),
            ("rc", true),
            ("ud", true),
            ("id", true),
        ]
        .into_iter()
        .map(|(s, add)| (s.to_string(), add))
        .collect();
        LemmaRules {
            suffix_rules,
            exceptions: parse_exceptions(DEFAULT_EXCEPTIONS).expect("embedded exceptions parse"),
            e_restoration,
        }
    }

    /// Adds (or overrides) exceptions from a `word<TAB>lemma` file.
    pub fn load_exceptions(&mut self, path: &Path) -> Result<()> {
        let s = std::fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        self.exceptions.extend(parse_exceptions(&s)?);
        Ok(())
    }

    fn repair(&self, stem: &str) -> String {
        let b = stem.as_bytes();
        if b.len() >= 2 {
            let (x, y) = (b[b.len() - 2], b[b.len() - 1]);
            if x == y && is_consonant(y) && !matches!(y, b'l' | b's' | b'z') {
                return stem[..stem.len() - 1].to_string();
            }
        }
        match self.e_restoration.iter().find(|(end, _)| stem.ends_with(end.as_str())) {
            Some((_, true)) => format!("{stem}e"),
            _ => stem.to_string(),
        }
    }

    fn step(&self, token: &str) -> Step {
        if let Some(lemma) = self.exceptions.get(token) {
            return Step::Done(lemma.clone());
        }
        for rule in &self.suffix_rules {
            let Some(stem) = token.strip_suffix(rule.suffix.as_str()) else {
                continue;
            };
            if stem.chars().count() < rule.min_stem.max(1) {
                continue;
            }
            if rule.suffix == rule.replacement {
                return Step::Done(token.to_string());
            }
            let base = if rule.repair_stem {
                self.repair(stem)
            } else {
                stem.to_string()
            };
            return Step::Changed(base + &rule.replacement);
        }
        Step::Done(token.to_string())
    }
}

enum Step {
    Done(String),
    Changed(String),
}

fn is_consonant(b: u8) -> bool {
    b.is_ascii_lowercase() && !matches!(b, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn parse_exceptions(s: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in s.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, lemma) = line.split_once('\t').ok_or_else(|| TriageError::Record {
            record: i + 1,
            message: "expected word<TAB>lemma".into(),
        })?;
        let (word, lemma) = (word.trim().to_lowercase(), lemma.trim().to_lowercase());
        if word.is_empty() || lemma.is_empty() {
            return Err(TriageError::Record {
                record: i + 1,
                message: "empty word or lemma".into(),
            });
        }
        map.insert(word, lemma);
    }
    Ok(map)
}

/// Reduces a lowercase token to its base form.
///
/// Exceptions are consulted first, then the first applicable suffix rule.
/// Rules are re-applied to the result until nothing changes, so the output
/// is always a fixed point. Every rule strictly shortens the token, so this
/// terminates.
pub fn lemmatize(token: &str, rules: &LemmaRules) -> String {
    let mut current = token.to_string();
    loop {
        match rules.step(&current) {
            Step::Done(lemma) => return lemma,
            Step::Changed(next) => current = next,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stoplist(BTreeSet<String>);

impl Default for Stoplist {
    fn default() -> Self {
        Stoplist::english()
    }
}

impl Stoplist {
    pub fn english() -> Self {
        Stoplist::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        Stoplist(BTreeSet::new())
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(s: &str) -> Self {
        Stoplist(
            s.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| TriageError::io(path, e))?;
        Ok(Stoplist::parse(&s))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stoplist(iter.into_iter().map(Into::into).collect())
    }
}

pub fn remove_stopwords(tokens: &TokenSeq, stoplist: &Stoplist) -> TokenSeq {
    TokenSeq(
        tokens
            .iter()
            .filter(|t| !stoplist.contains(t))
            .cloned()
            .collect(),
    )
}

/// tokenize, lemmatize each token, then drop stop-words.
pub fn preprocess(text: &str, rules: &LemmaRules, stoplist: &Stoplist) -> TokenSeq {
    let lemmas = TokenSeq(
        tokenize(text)
            .iter()
            .map(|t| lemmatize(t, rules))
            .collect(),
    );
    remove_stopwords(&lemmas, stoplist)
}

/// The lemma rules and stop-list used by a trained model, kept together so
/// inference preprocesses exactly as training did.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPipeline {
    pub rules: LemmaRules,
    pub stoplist: Stoplist,
}

impl TextPipeline {
    pub fn new(rules: LemmaRules, stoplist: Stoplist) -> Self {
        TextPipeline { rules, stoplist }
    }

    pub fn preprocess(&self, text: &str) -> TokenSeq {
        preprocess(text, &self.rules, &self.stoplist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenSeq {
        TokenSeq(words.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(
            tokenize("The Internet is NOT working"),
            toks(&["the", "internet", "is", "not", "working"])
        );
        assert_eq!(tokenize(""), toks(&[]));
        assert_eq!(tokenize("wifi  down"), toks(&["wifi", "down"]));
        assert_eq!(tokenize("wi-fi, down!"), toks(&["wifi", "down"]));
        assert_eq!(tokenize(" -- "), toks(&[]));
    }

    #[test]
    fn lemma_family_collapses() {
        let r = LemmaRules::english();
        for w in ["changed", "changes", "changing", "change"] {
            assert_eq!(lemmatize(w, &r), "change", "{w}");
        }
        assert_eq!(lemmatize("working", &r), "work");
        assert_eq!(lemmatize("wifi", &r), "wifi");
    }

    #[test]
    fn lemmatizer_spot_checks() {
        let r = LemmaRules::english();
        let cases = [
            ("logged", "log"),
            ("installed", "install"),
            ("accessing", "access"),
            ("access", "access"),
            ("queries", "query"),
            ("tried", "try"),
            ("passes", "pass"),
            ("updated", "update"),
            ("treated", "treat"),
            ("expired", "expire"),
            ("received", "receive"),
            ("licences", "licence"),
            ("issues", "issue"),
            ("boxes", "box"),
            ("status", "status"),
            ("this", "this"),
            ("is", "be"),
            ("was", "be"),
            ("has", "have"),
            ("during", "during"),
            ("uses", "use"),
            ("its", "its"),
            ("bring", "bring"),
        ];
        for (word, lemma) in cases {
            assert_eq!(lemmatize(word, &r), lemma, "{word}");
        }
    }

    #[test]
    fn stoplist_keeps_negations() {
        let s = Stoplist::english();
        for w in ["not", "no", "never"] {
            assert!(!s.contains(w), "{w}");
        }
        for w in ["and", "from", "he", "the", "it", "to", "be"] {
            assert!(s.contains(w), "{w}");
        }
        assert!(s.len() > 100);
    }

    #[test]
    fn stoplist_is_closed_under_lemmatization() {
        let r = LemmaRules::english();
        let s = Stoplist::english();
        for w in s.iter() {
            let lemma = lemmatize(w, &r);
            assert!(s.contains(&lemma), "stop-word {w} lemmatizes to {lemma}");
        }
    }

    #[test]
    fn exception_lemmas_are_fixed_points() {
        let r = LemmaRules::english();
        for lemma in r.exceptions.values() {
            assert_eq!(&lemmatize(lemma, &r), lemma);
        }
    }

    #[test]
    fn remove_stopwords_examples() {
        let s = Stoplist::english();
        assert_eq!(
            remove_stopwords(&toks(&["the", "internet", "is", "not", "working"]), &s),
            toks(&["internet", "not", "working"])
        );
        assert_eq!(remove_stopwords(&toks(&["the", "to", "and"]), &s), toks(&[]));
        assert_eq!(remove_stopwords(&toks(&[]), &s), toks(&[]));
    }

    #[test]
    fn preprocess_examples() {
        let p = TextPipeline::default();
        assert_eq!(
            p.preprocess("the internet is not working"),
            toks(&["internet", "not", "work"])
        );
        assert_eq!(
            p.preprocess("changed changes changing"),
            toks(&["change", "change", "change"])
        );
        assert_eq!(p.preprocess("is the to"), toks(&[]));
    }

    #[test]
    fn exceptions_file_parsing() {
        let m = parse_exceptions("# c\nmice\tmouse\n\nGeese\tgoose\n").unwrap();
        assert_eq!(m["mice"], "mouse");
        assert_eq!(m["geese"], "goose");
        assert!(parse_exceptions("nolemma\n").is_err());
    }

    #[test]
    fn load_resources_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let stop = dir.path().join("stop.txt");
        std::fs::write(&stop, "foo\n# comment\nBar\n").unwrap();
        let s = Stoplist::load(&stop).unwrap();
        assert!(s.contains("foo") && s.contains("bar") && s.len() == 2);

        let exc = dir.path().join("exc.tsv");
        std::fs::write(&exc, "mice\tmouse\n").unwrap();
        let mut r = LemmaRules::english();
        r.load_exceptions(&exc).unwrap();
        assert_eq!(lemmatize("mice", &r), "mouse");
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(words in proptest::collection::vec("[a-z]{1,12}", 0..12)) {
            let p = TextPipeline::default();
            let once = p.preprocess(&words.join(" "));
            prop_assert_eq!(p.preprocess(&once.join()), once);
        }

        #[test]
        fn lemma_never_empty_never_longer(word in "[a-z]{1,15}") {
            let r = LemmaRules::english();
            let lemma = lemmatize(&word, &r);
            prop_assert!(!lemma.is_empty());
            if !r.exceptions.contains_key(&word) {
                prop_assert!(lemma.len() <= word.len());
            }
        }

        #[test]
        fn stopword_removal_preserves_order(words in proptest::collection::vec("[a-z]{1,6}", 0..15)) {
            let s = Stoplist::english();
            let seq = TokenSeq(words.clone());
            let kept = remove_stopwords(&seq, &s);
            let expected: Vec<_> = words.into_iter().filter(|w| !s.contains(w)).collect();
            prop_assert_eq!(kept.into_inner(), expected);
        }

        #[test]
        fn tokens_are_clean(text in "[ -~\t]{0,60}") {
            for t in &tokenize(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(|c| c.is_whitespace() || c.is_ascii_punctuation()));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }
    }
}
