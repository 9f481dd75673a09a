//! Token-level Levenshtein alignment of a source sentence against its rewrite.
//!
//! The alignment tags every source token with [`EditTag::Equal`],
//! [`EditTag::Replace`] or [`EditTag::Delete`], and records inserted target
//! tokens per gap. Gap `g` sits before source token `g`; gap `n` is after the
//! last token. Together they form an edit script that [`apply_edits`] replays.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EditTag {
    Equal,
    Replace,
    Delete,
    Insert,
}

impl EditTag {
    pub const ALL: [EditTag; 4] = [EditTag::Equal, EditTag::Replace, EditTag::Delete, EditTag::Insert];

    pub fn as_str(self) -> &'static str {
        match self {
            EditTag::Equal => "EQUAL",
            EditTag::Replace => "REPLACE",
            EditTag::Delete => "DELETE",
            EditTag::Insert => "INSERT",
        }
    }
}

impl fmt::Display for EditTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EditTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EditTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown edit tag `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EditAlignment {
    /// One tag per source token; never `Insert`.
    pub source_tags: Vec<EditTag>,
    /// Gap index (0..=n) to the target tokens inserted there.
    pub insertions: BTreeMap<usize, Vec<String>>,
    /// Source index to the target tokens that replace it.
    pub replacements: BTreeMap<usize, Vec<String>>,
}

impl EditAlignment {
    /// Number of unit edits the script performs.
    pub fn cost(&self) -> usize {
        let deletes = self.source_tags.iter().filter(|t| **t == EditTag::Delete).count();
        let replaces: usize = self.replacements.values().map(|r| r.len().max(1)).sum();
        let inserts: usize = self.insertions.values().map(Vec::len).sum();
        deletes + replaces + inserts
    }

    pub fn inserted_at(&self, gap: usize) -> &[String] {
        self.insertions.get(&gap).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Minimal-cost token alignment with unit costs and case-sensitive equality.
///
/// The backtrace runs from the end of both sequences and prefers
/// match > substitution > deletion > insertion, which makes the script
/// unique. Afterwards, insertions that land in the gap right before a
/// replaced token are rotated behind it, so a one-to-many substitution reads
/// as REPLACE followed by INSERT in the next gap.
pub fn align(source: &Sentence, target: &Sentence) -> EditAlignment {
    let src: Vec<&str> = source.tokens.iter().map(|t| t.text.as_str()).collect();
    let tgt: Vec<&str> = target.tokens.iter().map(|t| t.text.as_str()).collect();
    align_tokens(&src, &tgt)
}

pub fn align_tokens<S: AsRef<str>>(src: &[S], tgt: &[S]) -> EditAlignment {
    let (n, m) = (src.len(), tgt.len());
    let width = m + 1;
    let mut cost = vec![0usize; (n + 1) * width];
    for i in 0..=n {
        cost[i * width] = i;
    }
    for (j, c) in cost.iter_mut().enumerate().take(m + 1) {
        *c = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = cost[(i - 1) * width + j - 1] + usize::from(src[i - 1].as_ref() != tgt[j - 1].as_ref());
            let del = cost[(i - 1) * width + j] + 1;
            let ins = cost[i * width + j - 1] + 1;
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut steps = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        let step = if i > 0 && j > 0 && src[i - 1].as_ref() == tgt[j - 1].as_ref() && here == cost[(i - 1) * width + j - 1] {
            Step::Match
        } else if i > 0 && j > 0 && here == cost[(i - 1) * width + j - 1] + 1 {
            Step::Substitute
        } else if i > 0 && here == cost[(i - 1) * width + j] + 1 {
            Step::Delete
        } else {
            Step::Insert
        };
        match step {
            Step::Match | Step::Substitute => {
                i -= 1;
                j -= 1;
            }
            Step::Delete => i -= 1,
            Step::Insert => j -= 1,
        }
        steps.push(step);
    }
    steps.reverse();

    let mut alignment = EditAlignment {
        source_tags: Vec::with_capacity(n),
        ..Default::default()
    };
    let (mut i, mut j) = (0, 0);
    for step in steps {
        match step {
            Step::Match => {
                alignment.source_tags.push(EditTag::Equal);
                i += 1;
                j += 1;
            }
            Step::Substitute => {
                alignment.source_tags.push(EditTag::Replace);
                alignment.replacements.insert(i, vec![tgt[j].as_ref().to_string()]);
                i += 1;
                j += 1;
            }
            Step::Delete => {
                alignment.source_tags.push(EditTag::Delete);
                i += 1;
            }
            Step::Insert => {
                alignment.insertions.entry(i).or_default().push(tgt[j].as_ref().to_string());
                j += 1;
            }
        }
    }

    rotate_insertions_behind_replacements(&mut alignment);
    alignment
}

/// `[x] REPLACE(y)` and `REPLACE(x) [y]` produce the same target; keep the latter.
fn rotate_insertions_behind_replacements(alignment: &mut EditAlignment) {
    for idx in 0..alignment.source_tags.len() {
        if alignment.source_tags[idx] != EditTag::Replace {
            continue;
        }
        let Some(before) = alignment.insertions.remove(&idx) else {
            continue;
        };
        let replaced = alignment.replacements.remove(&idx).unwrap_or_default();
        let mut run: Vec<String> = before.into_iter().chain(replaced).collect();
        let rest = run.split_off(1);
        alignment.replacements.insert(idx, run);
        if !rest.is_empty() {
            let after = alignment.insertions.remove(&(idx + 1)).unwrap_or_default();
            alignment
                .insertions
                .insert(idx + 1, rest.into_iter().chain(after).collect());
        }
    }
}

/// Replays `alignment` over `source`, returning the target token sequence.
pub fn apply_edits(source: &Sentence, alignment: &EditAlignment) -> Result<Vec<String>> {
    let src: Vec<&str> = source.tokens.iter().map(|t| t.text.as_str()).collect();
    apply_edits_tokens(&src, alignment)
}

pub fn apply_edits_tokens<S: AsRef<str>>(src: &[S], alignment: &EditAlignment) -> Result<Vec<String>> {
    let n = src.len();
    if alignment.source_tags.len() != n {
        return Err(Error::Alignment(format!(
            "{} tags for {} source tokens",
            alignment.source_tags.len(),
            n
        )));
    }
    if let Some(gap) = alignment.insertions.keys().find(|g| **g > n) {
        return Err(Error::Alignment(format!("insertion gap {gap} beyond {n}")));
    }
    if let Some(idx) = alignment.replacements.keys().find(|i| **i >= n) {
        return Err(Error::Alignment(format!("replacement index {idx} beyond {n} tokens")));
    }

    let mut out = Vec::new();
    for (idx, tag) in alignment.source_tags.iter().enumerate() {
        out.extend(alignment.inserted_at(idx).iter().cloned());
        match tag {
            EditTag::Equal => out.push(src[idx].as_ref().to_string()),
            EditTag::Replace => {
                let run = alignment
                    .replacements
                    .get(&idx)
                    .filter(|r| !r.is_empty())
                    .ok_or_else(|| Error::Alignment(format!("REPLACE at {idx} has no replacement")))?;
                out.extend(run.iter().cloned());
            }
            EditTag::Delete => {}
            EditTag::Insert => {
                return Err(Error::Alignment(format!("source tag at {idx} is INSERT")));
            }
        }
    }
    out.extend(alignment.inserted_at(n).iter().cloned());
    Ok(out)
}

/// Training row for a per-token edit tagger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerExample {
    pub tokens: Vec<String>,
    pub labels: Vec<EditTag>,
    pub bos_label: EditTag,
}

/// Folds insertions onto the preceding token: an EQUAL token followed by
/// inserted text becomes INSERT; REPLACE and DELETE keep their label.
/// Insertions before the first token set `bos_label` to INSERT.
pub fn to_tagger_example(alignment: &EditAlignment, source: &Sentence) -> TaggerExample {
    let labels = alignment
        .source_tags
        .iter()
        .enumerate()
        .map(|(idx, tag)| match tag {
            EditTag::Equal if !alignment.inserted_at(idx + 1).is_empty() => EditTag::Insert,
            other => *other,
        })
        .collect();
    TaggerExample {
        tokens: source.texts(),
        labels,
        bos_label: if alignment.inserted_at(0).is_empty() {
            EditTag::Equal
        } else {
            EditTag::Insert
        },
    }
}

/// Tagger export row, `{"id", "tokens", "labels", "bos_label"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggerRecord {
    pub id: String,
    #[serde(flatten)]
    pub example: TaggerExample,
}

/// Fraction of token labels per tag. Tags that never occur are omitted.
pub fn tag_distribution<'a, I>(label_rows: I) -> Result<BTreeMap<EditTag, f64>>
where
    I: IntoIterator<Item = &'a [EditTag]>,
{
    let mut counts: BTreeMap<EditTag, usize> = BTreeMap::new();
    let mut total = 0usize;
    for row in label_rows {
        for tag in row {
            *counts.entry(*tag).or_default() += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput("no tag labels"));
    }
    Ok(counts
        .into_iter()
        .map(|(tag, c)| (tag, c as f64 / total as f64))
        .collect())
}
