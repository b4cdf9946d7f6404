//! Synthetic helpdesk corpus with ground-truth labels.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{clean, Direction, RawEmail};
use crate::error::{Result, TriageError};
use crate::labeling::{Categories, LabeledEmail};
use crate::rng::seeded;

const MIN_WORDS: usize = 5;
const MAX_WORDS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCategory {
    pub name: String,
    pub count: usize,
    /// Keyword phrases, as written in the category config.
    pub keywords: Vec<String>,
    /// Topic words that are not keywords of any category.
    pub signal: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Rank order, matching the category config.
    pub categories: Vec<SynthCategory>,
    pub filler: Vec<String>,
    pub injection_prob: f64,
    pub noise_prob: f64,
    /// Chance that each non-keyword word comes from the category's own
    /// signal list instead of the filler.
    pub signal_prob: f64,
    pub seed: u64,
}

/// Raw emails plus the category each was generated for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub emails: Vec<RawEmail>,
    pub labels: Vec<String>,
}

impl SynthCorpus {
    /// Cleaned emails paired with the category they were generated for.
    pub fn ground_truth(&self) -> Result<Vec<LabeledEmail>> {
        self.emails
            .iter()
            .zip(&self.labels)
            .map(|(e, label)| {
                Ok(LabeledEmail {
                    email: clean(e)?,
                    category: label.clone(),
                })
            })
            .collect()
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn default_signal(name: &str) -> &'static str {
    match name {
        "adobe" => "photoshop illustrator acrobat indesign premiere subscription pdf editing install software account expired",
        "appsanywhere" => "solidworks matlab spss launch player app portal streaming install software laptop removed",
        "blackboard" => "module course assignment submission lecture grades turnitin upload login portal deadline recording",
        "password" => "reset locked account login authenticator code verification expired username phone portal forgot",
        "wifi" => "router signal laptop halls dropping slow vpn ethernet campus disconnects login speed",
        _ => "",
    }
}

const FILLER: &str = "hi hello please thanks cheers help advise issue problem today morning tried cannot working since \
yesterday student staff university computer urgent again still regards library week trying email question need \
work error fix quick access my the it is not and";

impl SynthSpec {
    /// Five helpdesk categories with counts (20, 12, 90, 48, 45).
    pub fn helpdesk(seed: u64) -> Self {
        SynthSpec::for_categories(&Categories::default_helpdesk(), &[20, 12, 90, 48, 45], seed)
            .expect("default spec is valid")
    }

    /// Builds a spec over `categories` using the built-in topic words.
    pub fn for_categories(categories: &Categories, counts: &[usize], seed: u64) -> Result<Self> {
        if counts.len() != categories.len() {
            return Err(TriageError::Dimension {
                expected: categories.len(),
                actual: counts.len(),
            });
        }
        let spec = SynthSpec {
            categories: categories
                .specs()
                .iter()
                .zip(counts)
                .map(|(c, &count)| SynthCategory {
                    name: c.name.clone(),
                    count,
                    keywords: c.keywords.clone(),
                    signal: words(default_signal(&c.name)),
                })
                .collect(),
            filler: words(FILLER),
            injection_prob: 0.8,
            noise_prob: 0.35,
            signal_prob: 0.12,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.categories.is_empty() {
            return Err(TriageError::invalid("synth spec has no categories"));
        }
        for c in &self.categories {
            if c.count == 0 {
                return Err(TriageError::invalid(format!("category {:?} has count 0", c.name)));
            }
            if c.keywords.is_empty() {
                return Err(TriageError::invalid(format!("category {:?} has no keywords", c.name)));
            }
        }
        if self.filler.is_empty() {
            return Err(TriageError::invalid("synth spec has no filler words"));
        }
        for (name, p) in [
            ("injection", self.injection_prob),
            ("noise", self.noise_prob),
            ("signal", self.signal_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(TriageError::invalid(format!("{name} probability {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.categories.iter().map(|c| c.count).sum()
    }
}

/// Each email is 5 to 40 words. It carries one of its own category's
/// keywords with probability `injection_prob`, and with probability
/// `noise_prob` one keyword of a category ranked below its own, which
/// first-match labeling ignores. Output order is shuffled.
pub fn generate_corpus(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let mut drafts: Vec<(Vec<String>, usize)> = Vec::with_capacity(spec.total());
    for (rank, cat) in spec.categories.iter().enumerate() {
        for _ in 0..cat.count {
            drafts.push((compose(spec, rank, &mut rng), rank));
        }
    }
    drafts.shuffle(&mut rng);

    let mut emails = Vec::with_capacity(drafts.len());
    let mut labels = Vec::with_capacity(drafts.len());
    for (n, (words, rank)) in drafts.into_iter().enumerate() {
        let cut = rng.random_range(1..=words.len().min(6));
        let subject = words[..cut].join(" ");
        let mut body = words[cut..].join(" ");
        if !body.is_empty() {
            body.push_str(if rng.random_bool(0.3) { "?" } else { "." });
        }
        emails.push(RawEmail {
            id: format!("syn-{:04}", n + 1),
            thread_id: format!("thread-{:04}", n + 1),
            direction: Direction::Incoming,
            subject: capitalize(&subject),
            body: capitalize(&body),
            timestamp: None,
        });
        labels.push(spec.categories[rank].name.clone());
    }
    Ok(SynthCorpus { emails, labels })
}

fn compose<R: Rng + ?Sized>(spec: &SynthSpec, rank: usize, rng: &mut R) -> Vec<String> {
    let cat = &spec.categories[rank];
    let mut phrases: Vec<&str> = Vec::new();
    if rng.random_bool(spec.injection_prob) {
        phrases.push(cat.keywords.choose(rng).unwrap());
    }
    let lower = &spec.categories[rank + 1..];
    if !lower.is_empty() && rng.random_bool(spec.noise_prob) {
        let other = lower.choose(rng).unwrap();
        phrases.push(other.keywords.choose(rng).unwrap());
    }
    let phrase_words: usize = phrases.iter().map(|p| p.split_whitespace().count()).sum();
    let len = rng.random_range(MIN_WORDS..=MAX_WORDS);
    let mut out: Vec<String> = (0..len.saturating_sub(phrase_words))
        .map(|_| {
            let pool = if !cat.signal.is_empty() && rng.random_bool(spec.signal_prob) {
                &cat.signal
            } else {
                &spec.filler
            };
            pool.choose(rng).unwrap().clone()
        })
        .collect();
    for p in phrases {
        let at = rng.random_range(0..=out.len());
        out.insert(at, p.to_string());
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::clean;
    use crate::labeling::match_category;
    use proptest::prelude::*;

    #[test]
    fn counts_and_determinism() {
        let cats = Categories::default_helpdesk();
        let spec = SynthSpec::for_categories(&cats, &[10; 5], 3).unwrap();
        let a = generate_corpus(&spec).unwrap();
        assert_eq!(a.emails.len(), 50);
        assert_eq!(a.labels.len(), 50);
        for name in cats.names() {
            assert_eq!(a.labels.iter().filter(|l| **l == name).count(), 10);
        }
        assert_eq!(generate_corpus(&spec).unwrap(), a);
        let b = generate_corpus(&SynthSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn word_counts_in_range() {
        let c = generate_corpus(&SynthSpec::helpdesk(11)).unwrap();
        assert_eq!(c.emails.len(), 215);
        for e in &c.emails {
            let n = format!("{} {}", e.subject, e.body).split_whitespace().count();
            assert!((MIN_WORDS..=MAX_WORDS + 2).contains(&n), "{n} words: {e:?}");
        }
    }

    #[test]
    fn topic_words_never_contain_keywords() {
        let spec = SynthSpec::helpdesk(0);
        let cats = Categories::default_helpdesk();
        let kws: Vec<&str> = cats.flat_keywords().collect();
        let all = spec.filler.iter().chain(spec.categories.iter().flat_map(|c| &c.signal));
        for w in all {
            for k in &kws {
                assert!(!w.to_lowercase().contains(k), "{w} contains {k}");
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SynthSpec::helpdesk(0);
        spec.noise_prob = 1.5;
        assert!(generate_corpus(&spec).is_err());
        let mut spec = SynthSpec::helpdesk(0);
        spec.categories[2].count = 0;
        assert!(spec.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn full_injection_without_noise_labels_exactly(seed in any::<u64>()) {
            let cats = Categories::default_helpdesk();
            let mut spec = SynthSpec::for_categories(&cats, &[6, 6, 6, 6, 6], seed).unwrap();
            spec.injection_prob = 1.0;
            spec.noise_prob = 0.0;
            let c = generate_corpus(&spec).unwrap();
            for (e, truth) in c.emails.iter().zip(&c.labels) {
                let got = match_category(&clean(e).unwrap(), &cats).map(|s| s.name.clone());
                prop_assert_eq!(got.as_deref(), Some(truth.as_str()));
            }
        }

        #[test]
        fn noise_never_changes_first_match(seed in any::<u64>()) {
            let cats = Categories::default_helpdesk();
            let mut spec = SynthSpec::for_categories(&cats, &[6, 6, 6, 6, 6], seed).unwrap();
            spec.injection_prob = 1.0;
            spec.noise_prob = 1.0;
            let c = generate_corpus(&spec).unwrap();
            for (e, truth) in c.emails.iter().zip(&c.labels) {
                let got = match_category(&clean(e).unwrap(), &cats).map(|s| s.name.clone());
                prop_assert_eq!(got.as_deref(), Some(truth.as_str()));
            }
        }
    }
}
