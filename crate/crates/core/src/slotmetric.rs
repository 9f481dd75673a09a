//! ChrF and the slot-preservation score.
//!
//! A slot counts as preserved when its tokens occur in the hypothesis, either
//! verbatim (ignoring case) or after normalization. Slots that still have no
//! exact match are scored by the best ChrF between the slot and any short
//! n-gram of the hypothesis. The sentence score is the mean slot weight.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{join_tokens, tokenize, ParallelPair, Sentence, SlotSet};
use crate::error::{Error, Result};
use crate::textnorm::{normalize_tokens, normalize_with_spans, NormTables, NormToken};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChrfConfig {
    pub beta: f64,
    pub max_n: usize,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig { beta: 2.0, max_n: 6 }
    }
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Character n-gram F-score between `hypothesis` and `reference`.
///
/// Whitespace is removed and both sides are lowercased. For every order
/// `1..=max_n` with at least one reference n-gram, clipped precision and
/// recall give an F-beta score; the result is the mean over those orders.
/// An order with no hypothesis n-grams contributes zero.
pub fn chrf_with(hypothesis: &str, reference: &str, config: ChrfConfig) -> Result<f64> {
    let strip = |s: &str| -> Vec<char> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .flat_map(char::to_lowercase)
            .collect()
    };
    let hyp = strip(hypothesis);
    let reference = strip(reference);
    if hyp.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput("chrf needs non-empty hypothesis and reference"));
    }

    let beta2 = config.beta * config.beta;
    let mut total = 0.0;
    let mut orders = 0usize;
    for n in 1..=config.max_n {
        let ref_counts = char_ngrams(&reference, n);
        if ref_counts.is_empty() {
            continue;
        }
        orders += 1;
        let hyp_counts = char_ngrams(&hyp, n);
        if hyp_counts.is_empty() {
            continue;
        }
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, c)| (*c).min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        if matched == 0 {
            continue;
        }
        let hyp_total = (hyp.len() + 1 - n) as f64;
        let ref_total = (reference.len() + 1 - n) as f64;
        let precision = matched as f64 / hyp_total;
        let recall = matched as f64 / ref_total;
        total += (1.0 + beta2) * precision * recall / (beta2 * precision + recall);
    }
    Ok(total / orders as f64)
}

pub fn chrf(hypothesis: &str, reference: &str) -> Result<f64> {
    chrf_with(hypothesis, reference, ChrfConfig::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchKind {
    ExactOriginal,
    ExactNormalized,
    Approx,
    Miss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMatch {
    pub slot: String,
    pub kind: MatchKind,
    pub weight: f64,
    /// Hypothesis token positions claimed by this slot.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matched_span: Option<Range<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotScore {
    pub value: f64,
    pub matches: Vec<SlotMatch>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotMetricConfig {
    pub chrf: ChrfConfig,
    /// Approximate matches below this ChrF count as misses.
    pub approx_floor: f64,
}

impl Default for SlotMetricConfig {
    fn default() -> Self {
        SlotMetricConfig {
            chrf: ChrfConfig::default(),
            approx_floor: 0.1,
        }
    }
}

/// Hypothesis tokens in original, lowercase and normalized form, plus the
/// positions already claimed by earlier slots.
pub(crate) struct SpanMatcher<'a> {
    tokens: Vec<String>,
    lower: Vec<String>,
    normalized: Vec<NormToken>,
    claimed: Vec<bool>,
    tables: &'a NormTables,
}

impl<'a> SpanMatcher<'a> {
    pub(crate) fn new(tokens: Vec<String>, tables: &'a NormTables) -> Self {
        let lower = tokens.iter().map(|t| t.to_lowercase()).collect();
        let normalized = normalize_with_spans(&tokens, tables);
        let claimed = vec![false; tokens.len()];
        SpanMatcher {
            tokens,
            lower,
            normalized,
            claimed,
            tables,
        }
    }

    fn is_free(&self, span: &Range<usize>) -> bool {
        !self.claimed[span.clone()].iter().any(|c| *c)
    }

    fn claim(&mut self, span: &Range<usize>) {
        self.claimed[span.clone()].iter_mut().for_each(|c| *c = true);
    }

    /// Leftmost unclaimed case-insensitive occurrence of `slot_tokens`.
    pub(crate) fn claim_exact_original(&mut self, slot_tokens: &[String]) -> Option<Range<usize>> {
        let want: Vec<String> = slot_tokens.iter().map(|t| t.to_lowercase()).collect();
        if want.is_empty() || want.len() > self.lower.len() {
            return None;
        }
        let span = (0..=self.lower.len() - want.len())
            .map(|s| s..s + want.len())
            .find(|r| self.lower[r.clone()] == want[..] && self.is_free(r))?;
        self.claim(&span);
        Some(span)
    }

    /// Leftmost unclaimed occurrence of the normalized slot in the normalized hypothesis.
    pub(crate) fn claim_exact_normalized(&mut self, slot_tokens: &[String]) -> Option<Range<usize>> {
        let want = normalize_tokens(slot_tokens, self.tables);
        let norm = &self.normalized;
        if want.is_empty() || want.len() > norm.len() {
            return None;
        }
        let span = (0..=norm.len() - want.len())
            .filter(|&k| norm[k..k + want.len()].iter().zip(&want).all(|(n, w)| n.text == *w))
            .map(|k| norm[k].source.start..norm[k + want.len() - 1].source.end)
            .find(|r| !r.is_empty() && self.is_free(r))?;
        self.claim(&span);
        Some(span)
    }

    /// Best-ChrF unclaimed n-gram with `n` in `1..=slot_len + 2`; ties keep
    /// the leftmost, then shortest, span.
    fn best_approx(&self, slot: &str, slot_len: usize, config: ChrfConfig) -> Option<(Range<usize>, f64)> {
        let len = self.tokens.len();
        let mut best: Option<(Range<usize>, f64)> = None;
        for start in 0..len {
            for n in 1..=(slot_len + 2).min(len - start) {
                let span = start..start + n;
                if !self.is_free(&span) {
                    break;
                }
                let text = join_tokens(self.tokens[span.clone()].iter().map(String::as_str));
                let Ok(w) = chrf_with(&text, slot, config) else { continue };
                if best.as_ref().is_none_or(|(_, b)| w > *b) {
                    best = Some((span, w));
                }
            }
        }
        best
    }
}

/// Scores how well `hypothesis` keeps `slots`.
///
/// Slots are matched in three passes over the slot list: exact in original
/// form, exact after normalization, then approximate by ChrF. Each
/// hypothesis token can back at most one slot; within a pass, slots claim
/// spans greedily in slot order.
pub fn slot_score(hypothesis: &Sentence, slots: &SlotSet, tables: &NormTables, config: SlotMetricConfig) -> SlotScore {
    if slots.is_empty() {
        return SlotScore {
            value: 1.0,
            matches: Vec::new(),
        };
    }
    let mut matcher = SpanMatcher::new(hypothesis.texts(), tables);
    let slot_tokens: Vec<Vec<String>> = slots.iter().map(|s| tokenize(s).texts()).collect();
    let mut matches: Vec<Option<SlotMatch>> = vec![None; slots.len()];

    for (i, toks) in slot_tokens.iter().enumerate() {
        if let Some(span) = matcher.claim_exact_original(toks) {
            matches[i] = Some(exact(&slots.as_slice()[i], MatchKind::ExactOriginal, span));
        }
    }
    for (i, toks) in slot_tokens.iter().enumerate() {
        if matches[i].is_some() {
            continue;
        }
        if let Some(span) = matcher.claim_exact_normalized(toks) {
            matches[i] = Some(exact(&slots.as_slice()[i], MatchKind::ExactNormalized, span));
        }
    }
    for (i, toks) in slot_tokens.iter().enumerate() {
        if matches[i].is_some() {
            continue;
        }
        let slot = &slots.as_slice()[i];
        let found = matcher.best_approx(slot, toks.len(), config.chrf);
        matches[i] = Some(match found {
            // whitespace and case are all that differ
            Some((span, w)) if w >= 1.0 => {
                matcher.claim(&span);
                exact(slot, MatchKind::ExactNormalized, span)
            }
            Some((span, w)) if w >= config.approx_floor && w > 0.0 => {
                matcher.claim(&span);
                SlotMatch {
                    slot: slot.clone(),
                    kind: MatchKind::Approx,
                    weight: w,
                    matched_span: Some(span),
                }
            }
            _ => SlotMatch {
                slot: slot.clone(),
                kind: MatchKind::Miss,
                weight: 0.0,
                matched_span: None,
            },
        });
    }

    let matches: Vec<SlotMatch> = matches.into_iter().flatten().collect();
    let value = matches.iter().map(|m| m.weight).sum::<f64>() / matches.len().max(1) as f64;
    SlotScore { value, matches }
}

fn exact(slot: &str, kind: MatchKind, span: Range<usize>) -> SlotMatch {
    SlotMatch {
        slot: slot.to_string(),
        kind,
        weight: 1.0,
        matched_span: Some(span),
    }
}

/// Slot scores for every pair against the hypothesis with the same id.
pub fn corpus_slot_scores(
    pairs: &[ParallelPair],
    hypotheses: &BTreeMap<String, String>,
    tables: &NormTables,
    config: SlotMetricConfig,
) -> Result<BTreeMap<String, SlotScore>> {
    let missing: Vec<String> = pairs
        .iter()
        .filter(|p| !hypotheses.contains_key(&p.id))
        .map(|p| p.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    Ok(pairs
        .iter()
        .map(|p| {
            let hyp = tokenize(&hypotheses[&p.id]);
            (p.id.clone(), slot_score(&hyp, &p.slots, tables, config))
        })
        .collect())
}

/// Output row of `score-slots`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotScoreRecord {
    pub id: String,
    pub slot_score: f64,
    pub matches: Vec<SlotMatchRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMatchRecord {
    pub slot: String,
    pub kind: MatchKind,
    pub weight: f64,
}

impl SlotScoreRecord {
    pub fn new(id: &str, score: &SlotScore) -> Self {
        SlotScoreRecord {
            id: id.to_string(),
            slot_score: score.value,
            matches: score
                .matches
                .iter()
                .map(|m| SlotMatchRecord {
                    slot: m.slot.clone(),
                    kind: m.kind,
                    weight: m.weight,
                })
                .collect(),
        }
    }
}
