//! Gap-infilling templates.
//!
//! A template is the source sentence with its mutable regions replaced by
//! numbered gaps. Templates come from edit tags (`tag` mode), from
//! predefined slots (`constr` mode) or from the union of both
//! (`constr-tag` mode). An infiller model receives the source plus the
//! serialized template and produces one filler per gap.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{join_tokens, tokenize, ParallelPair, Sentence, SlotSet};
use crate::editalign::{align, to_tagger_example, EditAlignment, EditTag};
use crate::error::{Error, Result};
use crate::slotmetric::SpanMatcher;
use crate::textnorm::NormTables;

const SHIPPED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Between the source text and the serialized template in infiller input.
pub const SOURCE_TEMPLATE_SEPARATOR: &str = " | ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    Keep(Vec<String>),
    Gap(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

/// How gaps are spelled in serialized templates and targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentinelStyle {
    /// `<gap_0>`, `<gap_1>`, ...
    #[default]
    Gap,
    /// `<extra_id_0>`, `<extra_id_1>`, ...
    T5,
}

impl SentinelStyle {
    pub fn sentinel(self, k: usize) -> String {
        match self {
            SentinelStyle::Gap => format!("<gap_{k}>"),
            SentinelStyle::T5 => format!("<extra_id_{k}>"),
        }
    }
}

impl FromStr for SentinelStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(SentinelStyle::Gap),
            "t5" => Ok(SentinelStyle::T5),
            other => Err(Error::InvalidArgument(format!("unknown sentinel style `{other}`"))),
        }
    }
}

fn sentinel_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<(?:gap|extra_id)_(\d+)>").unwrap())
}

enum Item {
    Token(String),
    Hole,
}

impl Template {
    /// Merges adjacent holes and kept tokens, then numbers the gaps.
    /// An empty item list becomes a single gap.
    fn build(items: impl IntoIterator<Item = Item>) -> Template {
        let mut segments: Vec<Segment> = Vec::new();
        let mut gaps = 0;
        for item in items {
            match (item, segments.last_mut()) {
                (Item::Hole, Some(Segment::Gap(_))) => {}
                (Item::Hole, _) => {
                    segments.push(Segment::Gap(gaps));
                    gaps += 1;
                }
                (Item::Token(t), Some(Segment::Keep(run))) => run.push(t),
                (Item::Token(t), _) => segments.push(Segment::Keep(vec![t])),
            }
        }
        if segments.is_empty() {
            segments.push(Segment::Gap(0));
        }
        Template { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn gap_count(&self) -> usize {
        self.segments.iter().filter(|s| matches!(s, Segment::Gap(_))).count()
    }

    pub fn kept_tokens(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().flat_map(|s| match s {
            Segment::Keep(run) => run.iter().map(String::as_str).collect::<Vec<_>>(),
            Segment::Gap(_) => Vec::new(),
        })
    }

    pub fn serialize(&self, style: SentinelStyle) -> String {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Keep(run) => join_tokens(run.iter().map(String::as_str)),
                Segment::Gap(k) => style.sentinel(*k),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses either sentinel style. Gaps must be numbered 0, 1, ... in order
    /// and never be adjacent.
    pub fn parse(text: &str) -> Result<Template> {
        let mut segments: Vec<Segment> = Vec::new();
        for word in text.split_whitespace() {
            let gap = sentinel_re()
                .captures(word)
                .filter(|c| c.get(0).map(|m| m.as_str()) == Some(word))
                .map(|c| c[1].parse::<usize>());
            match (gap, segments.last_mut()) {
                (Some(k), last) => {
                    let k = k.map_err(|e| Error::Template(e.to_string()))?;
                    if matches!(last, Some(Segment::Gap(_))) {
                        return Err(Error::Template(format!("adjacent gaps before <gap_{k}>")));
                    }
                    let expected = segments.iter().filter(|s| matches!(s, Segment::Gap(_))).count();
                    if k != expected {
                        return Err(Error::Template(format!("gap {k} where gap {expected} was expected")));
                    }
                    segments.push(Segment::Gap(k));
                }
                (None, Some(Segment::Keep(run))) => run.push(word.to_string()),
                (None, _) => segments.push(Segment::Keep(vec![word.to_string()])),
            }
        }
        if segments.is_empty() {
            return Err(Error::Template("empty template".into()));
        }
        Ok(Template { segments })
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize(SentinelStyle::Gap))
    }
}

/// Template from per-token edit labels: EQUAL and INSERT tokens are kept,
/// REPLACE and DELETE tokens become gaps, and an INSERT label (or an INSERT
/// `bos_label`) opens a gap after the token (or before the sentence).
pub fn template_from_tags<S: AsRef<str>>(tokens: &[S], labels: &[EditTag], bos_label: EditTag) -> Result<Template> {
    let keep = keep_mask_from_labels(tokens.len(), labels)?;
    let slot_spans: Vec<Range<usize>> = Vec::new();
    Ok(template_from_mask(tokens, &keep, labels, bos_label, &slot_spans))
}

/// Shortcut for [`template_from_tags`] over the labels derived from an alignment.
pub fn template_from_alignment(source: &Sentence, alignment: &EditAlignment) -> Template {
    let ex = to_tagger_example(alignment, source);
    template_from_tags(&ex.tokens, &ex.labels, ex.bos_label).expect("tagger example has one label per token")
}

fn keep_mask_from_labels(n: usize, labels: &[EditTag]) -> Result<Vec<bool>> {
    if labels.len() != n {
        return Err(Error::Template(format!("{} labels for {} tokens", labels.len(), n)));
    }
    Ok(labels
        .iter()
        .map(|l| matches!(l, EditTag::Equal | EditTag::Insert))
        .collect())
}

fn template_from_mask<S: AsRef<str>>(
    tokens: &[S],
    keep: &[bool],
    labels: &[EditTag],
    bos_label: EditTag,
    slot_spans: &[Range<usize>],
) -> Template {
    let inside_slot = |gap: usize| slot_spans.iter().any(|r| r.start < gap && gap < r.end);
    let mut items = Vec::new();
    if bos_label == EditTag::Insert {
        items.push(Item::Hole);
    }
    for (i, tok) in tokens.iter().enumerate() {
        if keep[i] {
            items.push(Item::Token(tok.as_ref().to_string()));
        } else {
            items.push(Item::Hole);
        }
        if labels.get(i) == Some(&EditTag::Insert) && !inside_slot(i + 1) {
            items.push(Item::Hole);
        }
    }
    Template::build(items)
}

/// Source token spans of each slot, in slot order. Slots are located like
/// exact slot matches: verbatim ignoring case first, then normalized.
pub fn locate_slots(source: &Sentence, slots: &SlotSet, tables: &NormTables) -> Result<Vec<Range<usize>>> {
    let mut matcher = SpanMatcher::new(source.texts(), tables);
    let slot_tokens: Vec<Vec<String>> = slots.iter().map(|s| tokenize(s).texts()).collect();
    let mut spans: Vec<Option<Range<usize>>> = slot_tokens
        .iter()
        .map(|t| matcher.claim_exact_original(t))
        .collect();
    for (i, toks) in slot_tokens.iter().enumerate() {
        if spans[i].is_none() {
            spans[i] = matcher.claim_exact_normalized(toks);
        }
    }
    let missing: Vec<String> = spans
        .iter()
        .zip(slots.iter())
        .filter(|(s, _)| s.is_none())
        .map(|(_, slot)| slot.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::SlotNotFound(missing));
    }
    Ok(spans.into_iter().flatten().collect())
}

/// `GAP KEEP[slot] GAP KEEP[slot] ... GAP`, slots in source order. Leading and
/// trailing gaps are always present; consecutive slots are separated by a gap
/// even when they touch.
pub fn template_from_slots(source: &Sentence, slots: &SlotSet, tables: &NormTables) -> Result<Template> {
    let mut spans = locate_slots(source, slots, tables)?;
    spans.sort_by_key(|r| (r.start, r.end));
    let tokens = source.texts();
    let mut items = vec![Item::Hole];
    let mut cursor = 0;
    for span in spans {
        if span.start < cursor {
            // overlapping slots extend the previous run
            items.extend((cursor..span.end).map(|i| Item::Token(tokens[i].clone())));
        } else {
            if cursor > 0 {
                items.push(Item::Hole);
            }
            items.extend(span.clone().map(|i| Item::Token(tokens[i].clone())));
        }
        cursor = cursor.max(span.end);
    }
    items.push(Item::Hole);
    Ok(Template::build(items))
}

/// Keeps every token that a slot covers or the labels keep.
pub fn template_union(
    source: &Sentence,
    slots: &SlotSet,
    labels: &[EditTag],
    bos_label: EditTag,
    tables: &NormTables,
) -> Result<Template> {
    let mut keep = keep_mask_from_labels(source.len(), labels)?;
    let spans = locate_slots(source, slots, tables)?;
    for span in &spans {
        keep[span.clone()].iter_mut().for_each(|k| *k = true);
    }
    Ok(template_from_mask(&source.texts(), &keep, labels, bos_label, &spans))
}

/// Template construction mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateMode {
    Tag,
    Constr,
    ConstrTag,
}

impl FromStr for TemplateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tag" => Ok(TemplateMode::Tag),
            "constr" => Ok(TemplateMode::Constr),
            "constr-tag" => Ok(TemplateMode::ConstrTag),
            other => Err(Error::InvalidArgument(format!("unknown template mode `{other}`"))),
        }
    }
}

/// For each template keep run, the source position where it starts.
///
/// Runs must land on EQUAL tokens of `alignment` with no insertions inside a
/// run; a run that opens the template must start at 0 with nothing inserted
/// before it, and one that closes the template must end at the last token.
fn place_keep_runs(source: &[String], template: &Template, alignment: &EditAlignment) -> Option<Vec<usize>> {
    let n = source.len();
    let segs = template.segments();
    let runs: Vec<(usize, &Vec<String>)> = segs
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            Segment::Keep(run) => Some((i, run)),
            Segment::Gap(_) => None,
        })
        .collect();

    let fits = |seg_idx: usize, run: &[String], start: usize| -> bool {
        let end = start + run.len();
        if end > n || source[start..end] != run[..] {
            return false;
        }
        if !(start..end).all(|i| alignment.source_tags[i] == EditTag::Equal) {
            return false;
        }
        if !(start + 1..end).all(|g| alignment.inserted_at(g).is_empty()) {
            return false;
        }
        if seg_idx == 0 && (start != 0 || !alignment.inserted_at(0).is_empty()) {
            return false;
        }
        if seg_idx == segs.len() - 1 && (end != n || !alignment.inserted_at(n).is_empty()) {
            return false;
        }
        true
    };

    // depth-first over run placements; `failed` memoizes dead (run, from) states
    #[allow(clippy::too_many_arguments)]
    fn search(
        k: usize,
        from: usize,
        n: usize,
        runs: &[(usize, &Vec<String>)],
        fits: &dyn Fn(usize, &[String], usize) -> bool,
        failed: &mut HashSet<(usize, usize)>,
        out: &mut Vec<usize>,
    ) -> bool {
        let Some((seg_idx, run)) = runs.get(k) else {
            return true;
        };
        if failed.contains(&(k, from)) {
            return false;
        }
        // adjacent keep runs are always separated by a gap, which may be empty
        for start in from..n {
            if !fits(*seg_idx, run, start) {
                continue;
            }
            out.push(start);
            if search(k + 1, start + run.len(), n, runs, fits, failed, out) {
                return true;
            }
            out.pop();
        }
        failed.insert((k, from));
        false
    }

    let mut out = Vec::new();
    let mut failed = HashSet::new();
    search(0, 0, n, &runs, &fits, &mut failed, &mut out).then_some(out)
}

/// Target text aligned to each gap of `template`.
///
/// Fillers may be empty: a gap whose source region was deleted, or a
/// boundary gap of a slot template, receives an empty filler.
pub fn gold_fillers(source: &Sentence, template: &Template, alignment: &EditAlignment) -> Result<Vec<String>> {
    let src = source.texts();
    if alignment.source_tags.len() != src.len() {
        return Err(Error::Template("alignment does not belong to this source".into()));
    }
    let starts = place_keep_runs(&src, template, alignment).ok_or_else(|| {
        Error::Template(format!(
            "template `{template}` does not match the source under this alignment"
        ))
    })?;

    // target index of every source token that survives unchanged
    let mut target_pos = vec![None; src.len()];
    let mut target: Vec<String> = Vec::new();
    for (i, tag) in alignment.source_tags.iter().enumerate() {
        target.extend(alignment.inserted_at(i).iter().cloned());
        match tag {
            EditTag::Equal => {
                target_pos[i] = Some(target.len());
                target.push(src[i].clone());
            }
            EditTag::Replace => target.extend(alignment.replacements.get(&i).into_iter().flatten().cloned()),
            _ => {}
        }
    }
    target.extend(alignment.inserted_at(src.len()).iter().cloned());

    let mut fillers = Vec::with_capacity(template.gap_count());
    let mut run_iter = starts.iter().zip(
        template
            .segments()
            .iter()
            .filter_map(|s| if let Segment::Keep(r) = s { Some(r.len()) } else { None }),
    );
    let mut cursor = 0;
    let mut pending_gap = false;
    let flush = |upto: usize, cursor: usize, fillers: &mut Vec<String>| {
        fillers.push(join_tokens(target[cursor..upto].iter().map(String::as_str)));
    };
    for seg in template.segments() {
        match seg {
            Segment::Gap(_) => pending_gap = true,
            Segment::Keep(_) => {
                let (&start, len) = run_iter.next().expect("one start per keep run");
                let first = target_pos[start].expect("kept tokens are EQUAL");
                if pending_gap {
                    flush(first, cursor, &mut fillers);
                    pending_gap = false;
                }
                cursor = target_pos[start + len - 1].expect("kept tokens are EQUAL") + 1;
            }
        }
    }
    if pending_gap {
        flush(target.len(), cursor, &mut fillers);
    }
    Ok(fillers)
}

/// Infiller training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfillExample {
    pub input_text: String,
    pub target_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfillRecord {
    pub id: String,
    pub input_text: String,
    pub target_text: String,
}

pub fn serialize_fillers(fillers: &[String], style: SentinelStyle) -> String {
    fillers
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let f = f.trim();
            if f.is_empty() {
                style.sentinel(k)
            } else {
                format!("{} {}", style.sentinel(k), f)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits an infiller target back into per-gap fillers. Text before the
/// first sentinel is ignored; gaps without a sentinel get an empty filler.
pub fn parse_fillers(target_text: &str, gap_count: usize) -> Result<Vec<String>> {
    let mut fillers = vec![String::new(); gap_count];
    let marks: Vec<(usize, Range<usize>)> = sentinel_re()
        .captures_iter(target_text)
        .map(|c| {
            let m = c.get(0).expect("whole match");
            (c[1].parse().unwrap_or(usize::MAX), m.range())
        })
        .collect();
    let mut last: Option<usize> = None;
    for (i, (k, range)) in marks.iter().enumerate() {
        if *k >= gap_count || last.is_some_and(|l| *k <= l) {
            return Err(Error::Template(format!("unexpected sentinel for gap {k}")));
        }
        last = Some(*k);
        let end = marks.get(i + 1).map_or(target_text.len(), |(_, r)| r.start);
        fillers[*k] = target_text[range.end..end].trim().to_string();
    }
    Ok(fillers)
}

/// Builds the infiller input (`source | template`) and the gold target
/// (`<gap_0> filler <gap_1> filler ...`).
pub fn make_infill_example(
    pair: &ParallelPair,
    template: &Template,
    alignment: &EditAlignment,
    style: SentinelStyle,
) -> Result<InfillExample> {
    let fillers = gold_fillers(&pair.formal, template, alignment)?;
    Ok(InfillExample {
        input_text: format!("{}{}{}", pair.formal.raw, SOURCE_TEMPLATE_SEPARATOR, template.serialize(style)),
        target_text: serialize_fillers(&fillers, style),
    })
}

/// Splices `fillers` into the gaps and normalizes spacing.
pub fn fill_template<S: AsRef<str>>(template: &Template, fillers: &[S]) -> Result<String> {
    if fillers.len() != template.gap_count() {
        return Err(Error::FillerCount {
            expected: template.gap_count(),
            actual: fillers.len(),
        });
    }
    let mut pieces: Vec<&str> = Vec::new();
    for seg in template.segments() {
        match seg {
            Segment::Keep(run) => pieces.extend(run.iter().map(String::as_str)),
            Segment::Gap(k) => pieces.push(fillers[*k].as_ref()),
        }
    }
    Ok(pieces
        .iter()
        .flat_map(|p| p.split_whitespace())
        .collect::<Vec<_>>()
        .join(" "))
}

/// Function words ignored when deriving slots.
#[derive(Debug, Clone)]
pub struct Stopwords(HashSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords::parse(SHIPPED_STOPWORDS)
    }
}

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(&token.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn is_punctuation(token: &str) -> bool {
    token.chars().all(|c| !c.is_alphanumeric())
}

/// Slots for a parallel pair: maximal runs of source tokens that the rewrite
/// keeps verbatim, with edge punctuation trimmed, skipping runs made only of
/// stopwords and punctuation.
pub fn derive_slots(pair: &ParallelPair, stopwords: &Stopwords) -> SlotSet {
    let alignment = align(&pair.formal, &pair.informal);
    let tokens = pair.formal.texts();
    let mut slots = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if alignment.source_tags[i] != EditTag::Equal {
            i += 1;
            continue;
        }
        let start = i;
        while i < tokens.len()
            && alignment.source_tags[i] == EditTag::Equal
            && (i == start || alignment.inserted_at(i).is_empty())
        {
            i += 1;
        }
        let mut run = &tokens[start..i];
        while run.first().is_some_and(|t| is_punctuation(t)) {
            run = &run[1..];
        }
        while run.last().is_some_and(|t| is_punctuation(t)) {
            run = &run[..run.len() - 1];
        }
        if run.iter().any(|t| !is_punctuation(t) && !stopwords.contains(t)) {
            slots.push(join_tokens(run.iter().map(String::as_str)));
        }
    }
    SlotSet::new(slots)
}
