//! Raw email ingestion and normalization.
//!
//! A corpus is a sequence of [`RawEmail`] records read from JSONL or CSV.
//! Only incoming mail is used; each incoming record becomes a
//! [`CleanEmail`] whose text is the subject and body joined by a space,
//! with ASCII punctuation deleted and whitespace collapsed.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::jsonl;

/// The ASCII punctuation set removed by [`clean_text`].
pub const PUNCTUATION: &str = r##"!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~"##;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl FromStr for Direction {
    type Err = TriageError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incoming" => Ok(Direction::Incoming),
            "outgoing" => Ok(Direction::Outgoing),
            other => Err(TriageError::invalid(format!(
                "unknown direction {other:?}, expected \"incoming\" or \"outgoing\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEmail {
    pub id: String,
    pub thread_id: String,
    pub direction: Direction,
    pub subject: String,
    pub body: String,
    /// Kept for round-tripping; never read by the pipeline.
    #[serde(default)]
    pub timestamp: Option<String>,
}

/// Normalized query text with its source id.
///
/// The text is never empty, contains no ASCII punctuation, and has no
/// leading, trailing or repeated spaces. Casing is preserved.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CleanEmailRepr")]
pub struct CleanEmail {
    id: String,
    text: String,
}

#[derive(Deserialize)]
struct CleanEmailRepr {
    id: String,
    text: String,
}

impl TryFrom<CleanEmailRepr> for CleanEmail {
    type Error = TriageError;

    fn try_from(r: CleanEmailRepr) -> Result<Self> {
        CleanEmail::new(r.id, &r.text)
    }
}

impl CleanEmail {
    /// Cleans `text` and wraps it; fails if nothing survives cleaning.
    pub fn new(id: impl Into<String>, text: &str) -> Result<Self> {
        let id = id.into();
        let text = clean_text(text);
        if text.is_empty() {
            return Err(TriageError::EmptyText { id });
        }
        Ok(CleanEmail { id, text })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for CleanEmail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = TriageError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(TriageError::invalid(format!("unknown corpus format {other:?}"))),
        }
    }
}

pub fn ingest(path: &Path, format: CorpusFormat) -> Result<Vec<RawEmail>> {
    let file = File::open(path).map_err(|e| TriageError::io(path, e))?;
    ingest_reader(file, format)
}

/// Reads every record in input order. Ids must be unique.
pub fn ingest_reader<R: Read>(reader: R, format: CorpusFormat) -> Result<Vec<RawEmail>> {
    let emails = match format {
        CorpusFormat::Jsonl => jsonl::read_from(reader)?,
        CorpusFormat::Csv => read_csv(reader)?,
    };
    let mut seen = HashSet::with_capacity(emails.len());
    for email in &emails {
        if !seen.insert(email.id.as_str()) {
            return Err(TriageError::DuplicateId(email.id.clone()));
        }
    }
    Ok(emails)
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<RawEmail>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<RawEmail>().enumerate() {
        let email = row.map_err(|e| TriageError::Record {
            record: i + 1,
            message: e.to_string(),
        })?;
        out.push(email);
    }
    Ok(out)
}

pub fn write_csv(path: &Path, emails: &[RawEmail]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| TriageError::io(path, std::io::Error::other(e)))?;
    for email in emails {
        w.serialize(email)
            .map_err(|e| TriageError::io(path, std::io::Error::other(e)))?;
    }
    w.flush().map_err(|e| TriageError::io(path, e))
}

pub fn filter_incoming(emails: &[RawEmail]) -> Vec<RawEmail> {
    emails
        .iter()
        .filter(|e| e.direction == Direction::Incoming)
        .cloned()
        .collect()
}

/// Deletes ASCII punctuation (no space inserted) and collapses whitespace.
pub fn clean_text(text: &str) -> String {
    let stripped: String = text.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn clean(email: &RawEmail) -> Result<CleanEmail> {
    CleanEmail::new(email.id.clone(), &format!("{} {}", email.subject, email.body))
}

/// Cleans every email, setting aside the ids of records that end up empty.
pub fn clean_all(emails: &[RawEmail]) -> (Vec<CleanEmail>, Vec<String>) {
    let mut cleaned = Vec::with_capacity(emails.len());
    let mut rejected = Vec::new();
    for email in emails {
        match clean(email) {
            Ok(c) => cleaned.push(c),
            Err(_) => rejected.push(email.id.clone()),
        }
    }
    (cleaned, rejected)
}
