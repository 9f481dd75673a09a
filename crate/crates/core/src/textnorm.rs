//! Normalization cascade used for slot matching.
//!
//! Tokens are lowercased and lemmatized, number words become digits, time
//! expressions collapse into a single `HH:MM` token, and place aliases and
//! abbreviations map to one canonical spelling. Every output token is a fixed
//! point: normalizing the output again returns it unchanged.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::tokenize;
use crate::error::{Error, Result};

const SHIPPED_PLACES: &str = include_str!("../data/places.tsv");
const SHIPPED_ABBREVIATIONS: &str = include_str!("../data/abbreviations.tsv");
const SHIPPED_NUMBERS: &str = include_str!("../data/numbers.tsv");

/// Longest time expression the grammar accepts, in tokens
/// ("nine o'clock in the morning").
const MAX_TIME_SPAN: usize = 5;

#[derive(Debug, Clone)]
pub struct NormTables {
    pub place_aliases: BTreeMap<String, String>,
    pub abbreviations: BTreeMap<String, String>,
    pub number_words: BTreeMap<String, u32>,
    /// Tokenized lowercase surface form to canonical token, across all tables.
    spans: HashMap<Vec<String>, String>,
    canonical: HashSet<String>,
    max_span: usize,
}

impl Default for NormTables {
    fn default() -> Self {
        NormTables::shipped()
    }
}

fn parse_tsv(text: &str, name: &str) -> Result<Vec<(String, String)>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (surface, canonical) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: name.into(),
            line: idx + 1,
            message: "expected `surface<TAB>canonical`".into(),
        })?;
        let (surface, canonical) = (surface.trim().to_lowercase(), canonical.trim().to_lowercase());
        if surface.is_empty() || canonical.is_empty() {
            return Err(Error::Parse {
                path: name.into(),
                line: idx + 1,
                message: "empty surface or canonical form".into(),
            });
        }
        if let Some((_, prev)) = rows.iter().find(|(s, _)| *s == surface) {
            if *prev != canonical {
                return Err(Error::Parse {
                    path: name.into(),
                    line: idx + 1,
                    message: format!("`{surface}` maps to both `{prev}` and `{canonical}`"),
                });
            }
        }
        rows.push((surface, canonical));
    }
    Ok(rows)
}

fn parse_numbers(text: &str, name: &str) -> Result<BTreeMap<String, u32>> {
    let mut out = BTreeMap::new();
    for (surface, value) in parse_tsv(text, name)? {
        let n: u32 = value.parse().map_err(|_| Error::Parse {
            path: name.into(),
            line: 0,
            message: format!("`{value}` is not a non-negative integer"),
        })?;
        out.insert(surface, n);
    }
    Ok(out)
}

fn key_tokens(surface: &str) -> Vec<String> {
    tokenize(surface)
        .tokens
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect()
}

impl NormTables {
    /// Tables compiled into the crate.
    pub fn shipped() -> Self {
        NormTables::from_sources(SHIPPED_PLACES, SHIPPED_ABBREVIATIONS, SHIPPED_NUMBERS)
            .expect("shipped normalization tables are valid")
    }

    /// Shipped tables with any of the three replaced by a TSV file.
    pub fn load(places: Option<&Path>, abbreviations: Option<&Path>, numbers: Option<&Path>) -> Result<Self> {
        let read = |p: Option<&Path>, fallback: &'static str| -> Result<String> {
            match p {
                Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e)),
                None => Ok(fallback.to_string()),
            }
        };
        NormTables::from_sources(
            &read(places, SHIPPED_PLACES)?,
            &read(abbreviations, SHIPPED_ABBREVIATIONS)?,
            &read(numbers, SHIPPED_NUMBERS)?,
        )
    }

    pub fn from_sources(places: &str, abbreviations: &str, numbers: &str) -> Result<Self> {
        let place_aliases: BTreeMap<_, _> = parse_tsv(places, "places")?.into_iter().collect();
        let abbreviations: BTreeMap<_, _> = parse_tsv(abbreviations, "abbreviations")?.into_iter().collect();
        let number_words = parse_numbers(numbers, "numbers")?;

        let mut spans: HashMap<Vec<String>, String> = HashMap::new();
        let entries = place_aliases
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .chain(abbreviations.iter().map(|(k, v)| (k.clone(), v.clone())))
            .chain(number_words.iter().map(|(k, v)| (k.clone(), v.to_string())));
        for (surface, canonical) in entries {
            let key = key_tokens(&surface);
            if key.is_empty() {
                continue;
            }
            if let Some(prev) = spans.insert(key, canonical.clone()) {
                if prev != canonical {
                    return Err(Error::InvalidArgument(format!(
                        "`{surface}` maps to both `{prev}` and `{canonical}`"
                    )));
                }
            }
        }

        // Follow alias chains so that every canonical form maps to itself.
        let snapshot = spans.clone();
        for value in spans.values_mut() {
            let mut hops = 0;
            while let Some(next) = snapshot.get(&key_tokens(value)) {
                if next == value {
                    break;
                }
                hops += 1;
                if hops > snapshot.len() {
                    return Err(Error::InvalidArgument(format!("alias cycle through `{value}`")));
                }
                *value = next.clone();
            }
        }
        let canonical: HashSet<String> = spans.values().cloned().collect();
        for c in &canonical {
            spans.entry(key_tokens(c)).or_insert_with(|| c.clone());
        }
        let max_span = spans.keys().map(Vec::len).max().unwrap_or(1);

        Ok(NormTables {
            place_aliases,
            abbreviations,
            number_words,
            spans,
            canonical,
            max_span,
        })
    }

    fn lookup<S: AsRef<str>>(&self, span: &[S]) -> Option<&str> {
        let key: Vec<String> = span.iter().map(|s| s.as_ref().to_string()).collect();
        self.spans.get(&key).map(String::as_str)
    }

    pub fn is_canonical(&self, token: &str) -> bool {
        self.canonical.contains(token)
    }
}

/// A normalized token and the input token positions it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormToken {
    pub text: String,
    pub source: Range<usize>,
}

fn is_currency_symbol(c: char) -> bool {
    matches!(c, '$' | '€' | '£' | '¥' | '₹')
}

/// Runs the full cascade and reports, for each output token, the input
/// positions it covers. Spans never overlap and appear in input order.
pub fn normalize_with_spans<S: AsRef<str>>(tokens: &[S], tables: &NormTables) -> Vec<NormToken> {
    // "$50" -> "50" "$", both pointing at the original token
    let mut lower: Vec<String> = Vec::with_capacity(tokens.len());
    let mut origin: Vec<usize> = Vec::with_capacity(tokens.len());
    for (idx, tok) in tokens.iter().enumerate() {
        let t = tok.as_ref().to_lowercase();
        let mut chars = t.chars();
        match chars.next() {
            Some(c) if is_currency_symbol(c) && chars.as_str().chars().any(|d| d.is_ascii_digit()) => {
                lower.push(chars.as_str().to_string());
                origin.push(idx);
                lower.push(c.to_string());
                origin.push(idx);
            }
            _ => {
                lower.push(t);
                origin.push(idx);
            }
        }
    }
    let base: Vec<String> = lower
        .iter()
        .map(|t| if tables.is_canonical(t) { t.clone() } else { lemmatize(t) })
        .collect();

    let mut out = Vec::new();
    let mut i = 0;
    while i < lower.len() {
        let (text, len) = normalize_at(&lower, &base, i, tables);
        // both halves of a split currency token share one source position;
        // the second half gets an empty range so spans never overlap
        let prev_end = out.last().map_or(0, |t: &NormToken| t.source.end);
        let start = origin[i].max(prev_end);
        let end = (origin[i + len - 1] + 1).max(start);
        out.push(NormToken { text, source: start..end });
        i += len;
    }
    out
}

fn normalize_at(lower: &[String], base: &[String], i: usize, tables: &NormTables) -> (String, usize) {
    let remaining = lower.len() - i;
    for len in (1..=MAX_TIME_SPAN.min(remaining)).rev() {
        if let Some(t) = canonical_time(&lower[i..i + len]).or_else(|| canonical_time(&base[i..i + len])) {
            return (t, len);
        }
    }
    for len in (1..=tables.max_span.min(remaining)).rev() {
        if len == 1 && tables.is_canonical(&lower[i]) {
            return (lower[i].clone(), 1);
        }
        if let Some(c) = tables
            .lookup(&lower[i..i + len])
            .or_else(|| tables.lookup(&base[i..i + len]))
        {
            return (c.to_string(), len);
        }
    }
    (base[i].clone(), 1)
}

pub fn normalize_tokens<S: AsRef<str>>(tokens: &[S], tables: &NormTables) -> Vec<String> {
    normalize_with_spans(tokens, tables)
        .into_iter()
        .map(|t| t.text)
        .collect()
}

// ---------------------------------------------------------------------------
// time expressions
// ---------------------------------------------------------------------------

const HOUR_WORDS: [&str; 12] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
];

fn compact_time_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(\d{1,2})(?::(\d{2}))?(am|pm|a\.m\.?|p\.m\.?)$").unwrap())
}

fn clock_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([01]\d|2[0-3]):([0-5]\d)$").unwrap())
}

fn hour_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // two-digit hours with minutes are left alone so that canonical `HH:MM`
    // output never starts a longer time expression
    RE.get_or_init(|| Regex::new(r"^(\d{1,2}|\d:[0-5]\d)$").unwrap())
}

#[derive(Clone, Copy)]
enum Meridiem {
    Am,
    Pm,
}

/// Clock-face hour 1..=12 with optional minutes.
fn parse_hour(token: &str) -> Option<(u32, u32)> {
    let (h, m) = if let Some(pos) = HOUR_WORDS.iter().position(|w| *w == token) {
        (pos as u32 + 1, 0)
    } else {
        let caps = hour_re().captures(token)?;
        let (h, m) = caps[1].split_once(':').unwrap_or((&caps[1], "0"));
        (h.parse().ok()?, m.parse().ok()?)
    };
    (1..=12).contains(&h).then_some((h, m))
}

fn parse_meridiem(token: &str) -> Option<Meridiem> {
    match token {
        "am" | "a.m." | "a.m" => Some(Meridiem::Am),
        "pm" | "p.m." | "p.m" => Some(Meridiem::Pm),
        _ => None,
    }
}

fn to_24h(h: u32, meridiem: Meridiem) -> u32 {
    match (meridiem, h) {
        (Meridiem::Am, 12) => 0,
        (Meridiem::Am, h) => h,
        (Meridiem::Pm, 12) => 12,
        (Meridiem::Pm, h) => h + 12,
    }
}

fn period_hour(h: u32, period: &str) -> Option<u32> {
    Some(match period {
        "morning" => to_24h(h, Meridiem::Am),
        "afternoon" | "evening" => to_24h(h, Meridiem::Pm),
        // "two at night" is 02:00, "ten at night" is 22:00
        "night" if h == 12 || h < 5 => to_24h(h, Meridiem::Am),
        "night" => to_24h(h, Meridiem::Pm),
        _ => return None,
    })
}

fn fmt_time(h: u32, m: u32) -> String {
    format!("{h:02}:{m:02}")
}

fn is_oclock(t: &str) -> bool {
    t == "o'clock" || t == "oclock"
}

/// Recognizes a whole span as a time expression and returns it as 24-hour
/// `HH:MM`. Accepted forms: `9am`, `9:30pm`, `9 a.m.`, `nine pm`,
/// `9 o'clock`, `nine (o'clock) in the morning|afternoon|evening|night`,
/// `ten at night`, and the canonical `21:00` itself.
pub fn canonical_time<S: AsRef<str>>(span: &[S]) -> Option<String> {
    let toks: Vec<&str> = span.iter().map(AsRef::as_ref).collect();
    match toks.as_slice() {
        [single] => {
            if clock_re().is_match(single) {
                return Some((*single).to_string());
            }
            let caps = compact_time_re().captures(single)?;
            let h: u32 = caps[1].parse().ok()?;
            let m: u32 = caps.get(2).map_or(Some(0), |m| m.as_str().parse().ok())?;
            let meridiem = parse_meridiem(caps.get(3)?.as_str())?;
            ((1..=12).contains(&h) && m < 60).then(|| fmt_time(to_24h(h, meridiem), m))
        }
        [hour, rest @ ..] => {
            let (h, m) = parse_hour(hour)?;
            let rest = match rest {
                [oc, tail @ ..] if is_oclock(oc) && m == 0 => {
                    if tail.is_empty() {
                        return Some(fmt_time(h, 0));
                    }
                    tail
                }
                _ => rest,
            };
            match rest {
                [mer] => parse_meridiem(mer).map(|mer| fmt_time(to_24h(h, mer), m)),
                ["in", "the", period] => period_hour(h, period).map(|hh| fmt_time(hh, m)),
                ["at", "night"] => period_hour(h, "night").map(|hh| fmt_time(hh, m)),
                _ => None,
            }
        }
        [] => None,
    }
}

// ---------------------------------------------------------------------------
// lemmatizer
// ---------------------------------------------------------------------------

const IRREGULAR: &[(&str, &str)] = &[
    ("is", "be"), ("are", "be"), ("was", "be"), ("were", "be"), ("been", "be"), ("being", "be"),
    ("has", "have"), ("had", "have"), ("having", "have"),
    ("does", "do"), ("did", "do"), ("done", "do"), ("doing", "do"),
    ("goes", "go"), ("went", "go"), ("gone", "go"), ("going", "go"),
    ("made", "make"), ("got", "get"), ("gotten", "get"), ("gave", "give"), ("given", "give"),
    ("took", "take"), ("taken", "take"), ("came", "come"), ("seen", "see"), ("knew", "know"),
    ("known", "know"), ("thought", "think"), ("told", "tell"), ("said", "say"), ("paid", "pay"),
    ("bought", "buy"), ("brought", "bring"), ("felt", "feel"), ("kept", "keep"), ("met", "meet"),
    ("ran", "run"), ("sent", "send"), ("spent", "spend"), ("stood", "stand"),
    ("understood", "understand"), ("wrote", "write"), ("written", "write"), ("ate", "eat"),
    ("eaten", "eat"), ("flew", "fly"), ("flown", "fly"), ("drove", "drive"), ("driven", "drive"),
    ("sat", "sit"), ("slept", "sleep"), ("began", "begin"), ("begun", "begin"), ("found", "find"),
    ("children", "child"), ("men", "man"), ("women", "woman"), ("people", "person"),
    ("feet", "foot"), ("teeth", "tooth"), ("mice", "mouse"), ("added", "add"), ("used", "use"),
    ("agreed", "agree"), ("lives", "life"), ("wives", "wife"), ("knives", "knife"),
];

/// Words that look inflected but are not.
const UNINFLECTED: &[&str] = &[
    "this", "thus", "always", "perhaps", "news", "series", "species", "christmas", "whereas",
    "morning", "evening", "during", "nothing", "something", "anything", "everything", "ceiling",
    "hundred", "sacred", "naked", "wicked", "kindred", "wedding", "pudding", "darling",
    "texas", "kansas", "arkansas", "illinois", "paris", "los", "angeles", "vegas", "dallas",
    "physics", "mathematics", "politics", "economics", "lens", "means", "pants", "thanks",
];

fn is_vowel(chars: &[u8], i: usize) -> bool {
    match chars[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel(chars, i - 1),
        _ => false,
    }
}

fn has_vowel(s: &str) -> bool {
    let b = s.as_bytes();
    (0..b.len()).any(|i| is_vowel(b, i))
}

/// Number of VC sequences in the word.
fn measure(s: &str) -> usize {
    let b = s.as_bytes();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..b.len() {
        let v = is_vowel(b, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

fn ends_cvc(s: &str) -> bool {
    let b = s.as_bytes();
    let n = b.len();
    n >= 3
        && !is_vowel(b, n - 3)
        && is_vowel(b, n - 2)
        && !is_vowel(b, n - 1)
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
}

/// Undo consonant doubling and restore a dropped final `e`.
fn repair_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !is_vowel(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    let restore_e = ["at", "bl", "iz", "ul", "v", "c"].iter().any(|suf| stem.ends_with(suf))
        || (stem.ends_with('s') && !stem.ends_with("ss"))
        || (measure(stem) == 1 && ends_cvc(stem));
    if restore_e {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

fn lemma_step(w: &str) -> String {
    if let Some((_, lemma)) = IRREGULAR.iter().find(|(form, _)| *form == w) {
        return (*lemma).to_string();
    }
    if UNINFLECTED.contains(&w) || w.len() <= 3 {
        return w.to_string();
    }
    let strip = |suffix: &str| &w[..w.len() - suffix.len()];
    if w.ends_with("ies") && w.len() > 4 {
        return format!("{}y", strip("ies"));
    }
    if w.ends_with("sses") || ["ches", "shes", "xes", "zes"].iter().any(|s| w.ends_with(s)) {
        return strip("es").to_string();
    }
    if w.ends_with('s') && !["ss", "us", "is"].iter().any(|s| w.ends_with(s)) {
        return strip("s").to_string();
    }
    if w.ends_with("eed") {
        return w.to_string();
    }
    if w.ends_with("ied") && w.len() > 4 {
        return format!("{}y", strip("ied"));
    }
    for suffix in ["ed", "ing"] {
        if w.ends_with(suffix) {
            let stem = strip(suffix);
            if stem.len() >= 3 && has_vowel(stem) {
                return repair_stem(stem);
            }
            return w.to_string();
        }
    }
    w.to_string()
}

/// Rule-based lemma of a lowercase token. Tokens that are not purely
/// lowercase ASCII letters are returned unchanged. Idempotent: rules are
/// applied until nothing changes.
pub fn lemmatize(token: &str) -> String {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut current = token.to_string();
    loop {
        let next = lemma_step(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}
