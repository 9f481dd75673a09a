//! Parallel pairs, slots, sentences and the external score files.
//!
//! All text is NFC-normalized when a [`Sentence`] is built, so token offsets
//! count NFC characters.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::jsonl;

/// Characters split off the edges of a whitespace chunk.
const EDGE_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '"', '\'', '(', ')'];

/// Clitics that keep their leading apostrophe (`'ll`, `'s`, ...).
const CLITICS: &[&str] = &["s", "ll", "re", "ve", "m", "d", "t", "em"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Character index (not byte index) of the first character in the sentence.
    pub char_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub raw: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(raw: &str) -> Self {
        tokenize(raw)
    }

    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        join_tokens(self.tokens.iter().map(|t| t.text.as_str()))
    }
}

pub fn join_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    tokens.into_iter().collect::<Vec<_>>().join(" ")
}

fn is_edge_punct(c: char) -> bool {
    EDGE_PUNCT.contains(&c)
}

/// `a.m.`, `U.S.`, `e.g.`: two or more alphanumeric groups, each closed by a period.
fn is_dotted_abbreviation(chars: &[char]) -> bool {
    if chars.last() != Some(&'.') {
        return false;
    }
    let body: String = chars[..chars.len() - 1].iter().collect();
    let groups: Vec<&str> = body.split('.').collect();
    groups.len() >= 2
        && groups
            .iter()
            .all(|g| !g.is_empty() && g.chars().all(char::is_alphanumeric))
}

fn is_clitic(chars: &[char]) -> bool {
    let rest: String = chars.iter().collect::<String>().to_lowercase();
    CLITICS.contains(&rest.as_str())
}

/// Rule-based tokenizer: whitespace split, then edge punctuation peeled into
/// single-character tokens. Interior apostrophes and periods stay attached,
/// as do the trailing period of dotted abbreviations and the leading
/// apostrophe of clitics (`'ll`).
pub fn tokenize(raw: &str) -> Sentence {
    let raw: String = raw.nfc().collect();
    let chars: Vec<char> = raw.chars().collect();
    let mut tokens = Vec::new();

    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_chunk(&chars[chunk_start..i], chunk_start, &mut tokens);
    }

    Sentence { raw, tokens }
}

fn split_chunk(chunk: &[char], offset: usize, out: &mut Vec<Token>) {
    let n = chunk.len();
    let mut start = 0;
    while start < n && is_edge_punct(chunk[start]) && chunk[start] != '\'' {
        start += 1;
    }
    let mut end = n;
    while end > start && is_edge_punct(chunk[end - 1]) {
        if chunk[end - 1] == '.' && is_dotted_abbreviation(&chunk[start..end]) {
            break;
        }
        end -= 1;
    }
    while start < end && is_edge_punct(chunk[start]) {
        if chunk[start] == '\'' && start + 1 < end && is_clitic(&chunk[start + 1..end]) {
            break;
        }
        start += 1;
    }

    let single = |k: usize| Token {
        text: chunk[k].to_string(),
        char_offset: offset + k,
    };
    out.extend((0..start).map(single));
    if start < end {
        out.push(Token {
            text: chunk[start..end].iter().collect(),
            char_offset: offset + start,
        });
    }
    out.extend((end..n).map(single));
}

/// Ordered important phrases of a source sentence. Duplicates are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct SlotSet(Vec<String>);

impl SlotSet {
    /// Trims every slot and drops blanks and `--` placeholders.
    pub fn new<S: AsRef<str>>(slots: impl IntoIterator<Item = S>) -> Self {
        SlotSet(
            slots
                .into_iter()
                .map(|s| s.as_ref().nfc().collect::<String>().trim().to_string())
                .filter(|s| !s.is_empty() && s != "--")
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl From<Vec<String>> for SlotSet {
    fn from(v: Vec<String>) -> Self {
        SlotSet::new(v)
    }
}

impl From<SlotSet> for Vec<String> {
    fn from(s: SlotSet) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelPair {
    pub id: String,
    pub formal: Sentence,
    pub informal: Sentence,
    pub slots: SlotSet,
}

impl ParallelPair {
    pub fn new(id: impl Into<String>, formal: &str, informal: &str, slots: SlotSet) -> Self {
        ParallelPair {
            id: id.into(),
            formal: tokenize(formal),
            informal: tokenize(informal),
            slots,
        }
    }
}

/// On-disk shape of a pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub formal: String,
    pub informal: String,
    #[serde(default)]
    pub slots: SlotSet,
}

impl From<PairRecord> for ParallelPair {
    fn from(r: PairRecord) -> Self {
        ParallelPair::new(r.id, &r.formal, &r.informal, r.slots)
    }
}

impl From<&ParallelPair> for PairRecord {
    fn from(p: &ParallelPair) -> Self {
        PairRecord {
            id: p.id.clone(),
            formal: p.formal.raw.clone(),
            informal: p.informal.raw.clone(),
            slots: p.slots.clone(),
        }
    }
}

pub(crate) fn check_unique_ids<'a>(ids: impl IntoIterator<Item = (usize, &'a str)>) -> Result<()> {
    let mut seen = HashSet::new();
    for (line, id) in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId {
                id: id.to_string(),
                line,
            });
        }
    }
    Ok(())
}

pub fn read_pairs(path: &Path) -> Result<Vec<ParallelPair>> {
    let records: Vec<(usize, PairRecord)> = jsonl::read_records(path)?;
    check_unique_ids(records.iter().map(|(line, r)| (*line, r.id.as_str())))?;
    Ok(records.into_iter().map(|(_, r)| r.into()).collect())
}

pub fn write_pairs(pairs: &[ParallelPair], path: &Path) -> Result<()> {
    let records: Vec<PairRecord> = pairs.iter().map(PairRecord::from).collect();
    jsonl::write_records_to_path(path, &records)
}

/// Per-sentence style, content and fluency scores from external classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub style: f64,
    pub content: f64,
    pub fluency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScores {
    pub id: String,
    pub style: f64,
    pub content: f64,
    pub fluency: f64,
}

impl ExternalScores {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("style", self.style),
            ("content", self.content),
            ("fluency", self.fluency),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange {
                    id: self.id.clone(),
                    field,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn scores(&self) -> Scores {
        Scores {
            style: self.style,
            content: self.content,
            fluency: self.fluency,
        }
    }
}

pub fn read_scores(path: &Path) -> Result<BTreeMap<String, ExternalScores>> {
    let records: Vec<(usize, ExternalScores)> = jsonl::read_records(path)?;
    let mut map = BTreeMap::new();
    for (line, record) in records {
        record.validate()?;
        if map.contains_key(&record.id) {
            return Err(Error::DuplicateId { id: record.id, line });
        }
        map.insert(record.id.clone(), record);
    }
    Ok(map)
}

/// A system output sentence, `{"id", "text"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub text: String,
}

pub fn read_hypotheses(path: &Path) -> Result<BTreeMap<String, String>> {
    let records: Vec<(usize, Hypothesis)> = jsonl::read_records(path)?;
    check_unique_ids(records.iter().map(|(line, h)| (*line, h.id.as_str())))?;
    Ok(records
        .into_iter()
        .map(|(_, h)| (h.id, h.text.nfc().collect()))
        .collect())
}
