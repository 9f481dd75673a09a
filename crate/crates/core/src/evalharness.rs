//! Joint scoring, leaderboards and significance testing.
//!
//! The joint measure of a system is the mean over sentences of the product
//! of style, content, slot and fluency scores. It is not the product of the
//! four means.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::corpus::{ExternalScores, ParallelPair, Scores};
use crate::error::{Error, Result};
use crate::slotmetric::{corpus_slot_scores, SlotMetricConfig};
use crate::textnorm::NormTables;

/// Largest sample size that uses the exact null distribution.
pub const EXACT_MAX_N: usize = 20;
/// Smallest number of nonzero differences accepted by the signed-rank test.
pub const MIN_N: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub style: f64,
    pub content: f64,
    pub slot: f64,
    pub fluency: f64,
    pub product: f64,
}

impl EvalRecord {
    pub fn new(id: impl Into<String>, scores: Scores, slot: f64) -> Result<Self> {
        let id = id.into();
        for (field, value) in [
            ("style", scores.style),
            ("content", scores.content),
            ("slot", slot),
            ("fluency", scores.fluency),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange { id, field, value });
            }
        }
        Ok(EvalRecord {
            id,
            style: scores.style,
            content: scores.content,
            slot,
            fluency: scores.fluency,
            product: scores.style * scores.content * slot * scores.fluency,
        })
    }
}

pub fn joint_score(records: &[EvalRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("joint score over zero sentences"));
    }
    Ok(records.iter().map(|r| r.product).sum::<f64>() / records.len() as f64)
}

/// Joins external scores with slot scores of `hypotheses`, in pair order.
pub fn system_records(
    pairs: &[ParallelPair],
    hypotheses: &BTreeMap<String, String>,
    scores: &BTreeMap<String, ExternalScores>,
    tables: &NormTables,
    config: SlotMetricConfig,
) -> Result<Vec<EvalRecord>> {
    let missing: Vec<String> = pairs
        .iter()
        .filter(|p| !hypotheses.contains_key(&p.id) || !scores.contains_key(&p.id))
        .map(|p| p.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    let slots = corpus_slot_scores(pairs, hypotheses, tables, config)?;
    pairs
        .iter()
        .map(|p| EvalRecord::new(p.id.clone(), scores[&p.id].scores(), slots[&p.id].value))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub system: String,
    pub section: String,
    pub style: f64,
    pub content: f64,
    pub slot: f64,
    pub fluency: f64,
    pub joint: f64,
    pub sentences: usize,
}

impl LeaderboardRow {
    pub fn from_records(system: &str, section: &str, records: &[EvalRecord]) -> Result<Self> {
        let joint = joint_score(records)?;
        let n = records.len() as f64;
        let mean = |f: fn(&EvalRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
        Ok(LeaderboardRow {
            system: system.to_string(),
            section: section.to_string(),
            style: mean(|r| r.style),
            content: mean(|r| r.content),
            slot: mean(|r| r.slot),
            fluency: mean(|r| r.fluency),
            joint,
            sentences: records.len(),
        })
    }
}

/// Rows grouped by section (in order of first appearance), each section
/// sorted by joint score descending. Ties keep insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rows: Vec<LeaderboardRow>,
}

impl Leaderboard {
    pub fn new(rows: Vec<LeaderboardRow>) -> Self {
        let mut sections: Vec<String> = Vec::new();
        for r in &rows {
            if !sections.contains(&r.section) {
                sections.push(r.section.clone());
            }
        }
        let mut rows = rows;
        rows.sort_by(|a, b| {
            let sa = sections.iter().position(|s| *s == a.section);
            let sb = sections.iter().position(|s| *s == b.section);
            sa.cmp(&sb).then(b.joint.total_cmp(&a.joint))
        });
        Leaderboard { rows }
    }

    pub fn row(&self, system: &str) -> Option<&LeaderboardRow> {
        self.rows.iter().find(|r| r.system == system)
    }

    /// Two-decimal TSV with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("system\tsection\tstyle\tcontent\tslot\tfluency\tjoint\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
                r.system, r.section, r.style, r.content, r.slot, r.fluency, r.joint
            );
        }
        out
    }

    /// Full-precision JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("leaderboard serializes")
    }
}

/// One system to be placed on a leaderboard.
pub struct SystemInput<'a> {
    pub name: &'a str,
    pub section: &'a str,
    pub hypotheses: &'a BTreeMap<String, String>,
    pub scores: &'a BTreeMap<String, ExternalScores>,
}

/// Leaderboard plus the per-sentence records of every system.
pub fn build_leaderboard(
    pairs: &[ParallelPair],
    systems: &[SystemInput<'_>],
    tables: &NormTables,
    config: SlotMetricConfig,
) -> Result<(Leaderboard, BTreeMap<String, Vec<EvalRecord>>)> {
    let mut rows = Vec::new();
    let mut records = BTreeMap::new();
    let mut missing = Vec::new();
    for sys in systems {
        match system_records(pairs, sys.hypotheses, sys.scores, tables, config) {
            Ok(recs) => {
                rows.push(LeaderboardRow::from_records(sys.name, sys.section, &recs)?);
                records.insert(sys.name.to_string(), recs);
            }
            Err(Error::MissingIds(ids)) => missing.extend(ids.into_iter().map(|id| format!("{}:{id}", sys.name))),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    Ok((Leaderboard::new(rows), records))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences `a - b`.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Average ranks of `values`, 1-based.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Nonzero differences `a - b` with the average ranks of their magnitudes.
fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::NoInformation);
    }
    if diffs.len() < MIN_N {
        return Err(Error::InvalidArgument(format!(
            "{} nonzero differences; at least {MIN_N} are required",
            diffs.len()
        )));
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    Ok((diffs, ranks))
}

fn positive_rank_sum(diffs: &[f64], ranks: &[f64]) -> f64 {
    diffs.iter().zip(ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum()
}

/// Two-sided signed-rank test: exact for up to [`EXACT_MAX_N`] nonzero
/// differences, normal approximation beyond.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let (diffs, _) = signed_ranks(a, b)?;
    if diffs.len() <= EXACT_MAX_N {
        wilcoxon_exact(a, b)
    } else {
        wilcoxon_normal(a, b)
    }
}

/// Exact null distribution of the positive rank sum, by counting sign
/// assignments over doubled (integer) ranks.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let (diffs, ranks) = signed_ranks(a, b)?;
    let n = diffs.len();
    if n > 63 {
        return Err(Error::InvalidArgument(format!("exact test needs n <= 63, got {n}")));
    }
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let w = positive_rank_sum(&diffs, &ranks);
    let w2 = (w * 2.0).round() as usize;
    let all = (1u64 << n) as f64;
    let lower: u64 = counts[..=w2].iter().sum();
    let upper: u64 = counts[w2..].iter().sum();
    let p = (2.0 * lower.min(upper) as f64 / all).min(1.0);
    Ok(WilcoxonResult {
        statistic: w,
        p_value: p,
        n,
        method: WilcoxonMethod::Exact,
    })
}

/// Normal approximation with tie and continuity corrections.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let (diffs, ranks) = signed_ranks(a, b)?;
    let n = diffs.len() as f64;
    let w = positive_rank_sum(&diffs, &ranks);
    let mean = n * (n + 1.0) / 4.0;

    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        (2.0 * std.sf(z)).min(1.0)
    };
    Ok(WilcoxonResult {
        statistic: w,
        p_value: p,
        n: diffs.len(),
        method: WilcoxonMethod::Normal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSignificance {
    pub test: WilcoxonResult,
    pub means_a: Vec<f64>,
    pub means_b: Vec<f64>,
}

/// Compares two systems over `n_splits` random subsets of `split_size` ids.
///
/// Each split is drawn without replacement, independently of the others, so
/// splits overlap whenever `n_splits * split_size` exceeds the population.
pub fn significance_by_splits(
    scores_a: &BTreeMap<String, f64>,
    scores_b: &BTreeMap<String, f64>,
    n_splits: usize,
    split_size: usize,
    seed: u64,
) -> Result<SplitSignificance> {
    let mut missing: Vec<String> = scores_a.keys().filter(|k| !scores_b.contains_key(*k)).cloned().collect();
    missing.extend(scores_b.keys().filter(|k| !scores_a.contains_key(*k)).cloned());
    if !missing.is_empty() {
        return Err(Error::MissingIds(missing));
    }
    let population = scores_a.len();
    if split_size == 0 || split_size > population {
        return Err(Error::InvalidArgument(format!(
            "split size {split_size} must be in 1..={population}"
        )));
    }
    let a: Vec<f64> = scores_a.values().copied().collect();
    let b: Vec<f64> = scores_b.values().copied().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means_a = Vec::with_capacity(n_splits);
    let mut means_b = Vec::with_capacity(n_splits);
    for _ in 0..n_splits {
        let idx = sample(&mut rng, population, split_size);
        let (sa, sb) = idx.iter().fold((0.0, 0.0), |(x, y), i| (x + a[i], y + b[i]));
        means_a.push(sa / split_size as f64);
        means_b.push(sb / split_size as f64);
    }
    let test = wilcoxon_signed_rank(&means_a, &means_b)?;
    Ok(SplitSignificance { test, means_a, means_b })
}

/// Per-sentence products keyed by id.
pub fn products(records: &[EvalRecord]) -> BTreeMap<String, f64> {
    records.iter().map(|r| (r.id.clone(), r.product)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn rec(id: &str, s: f64, c: f64, slot: f64, f: f64) -> EvalRecord {
        EvalRecord::new(id, Scores { style: s, content: c, fluency: f }, slot).unwrap()
    }

    /// p-value by listing every sign assignment.
    fn brute_force_p(ranks: &[f64], w: f64) -> f64 {
        let n = ranks.len();
        let (mut lo, mut hi) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if s <= w + 1e-9 {
                lo += 1;
            }
            if s >= w - 1e-9 {
                hi += 1;
            }
        }
        (2.0 * lo.min(hi) as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn joint() {
        assert_eq!(joint_score(&[rec("a", 1.0, 1.0, 1.0, 1.0)]).unwrap(), 1.0);
        let two = [rec("a", 1.0, 1.0, 1.0, 1.0), rec("b", 0.0, 1.0, 1.0, 1.0)];
        assert_eq!(joint_score(&two).unwrap(), 0.5);
        assert!(matches!(joint_score(&[]), Err(Error::EmptyInput(_))));
        assert!(EvalRecord::new("x", Scores { style: 1.5, content: 1.0, fluency: 1.0 }, 1.0).is_err());
    }

    #[test]
    fn joint_is_not_product_of_means() {
        let recs = [rec("a", 1.0, 0.0, 1.0, 1.0), rec("b", 0.0, 1.0, 1.0, 1.0)];
        let row = LeaderboardRow::from_records("s", "", &recs).unwrap();
        assert_eq!(row.joint, 0.0);
        assert_eq!(row.style * row.content * row.slot * row.fluency, 0.25);
    }

    #[test]
    fn leaderboard_orders_by_joint_within_section() {
        let high_style = [rec("a", 0.9, 0.2, 1.0, 1.0)];
        let balanced = [rec("a", 0.6, 0.6, 1.0, 1.0)];
        let naive = [rec("a", 0.03, 1.0, 1.0, 1.0)];
        let lb = Leaderboard::new(vec![
            LeaderboardRow::from_records("naive", "baselines", &naive).unwrap(),
            LeaderboardRow::from_records("high-style", "systems", &high_style).unwrap(),
            LeaderboardRow::from_records("balanced", "systems", &balanced).unwrap(),
        ]);
        let order: Vec<&str> = lb.rows.iter().map(|r| r.system.as_str()).collect();
        assert_eq!(order, ["naive", "balanced", "high-style"]);
        let tsv = lb.to_tsv();
        assert!(tsv.lines().nth(1).unwrap().ends_with("\t0.03"));
        let back: Leaderboard = serde_json::from_str(&lb.to_json()).unwrap();
        assert_eq!(back, lb);
    }

    #[test]
    fn leaderboard_reports_missing_ids() {
        let pairs = vec![
            ParallelPair::new("1", "a b", "a b", Default::default()),
            ParallelPair::new("2", "c d", "c d", Default::default()),
        ];
        let hyps: BTreeMap<String, String> = [("1".to_string(), "a b".to_string())].into();
        let scores: BTreeMap<String, ExternalScores> = ["1", "2"]
            .iter()
            .map(|id| {
                let s = ExternalScores { id: id.to_string(), style: 1.0, content: 1.0, fluency: 1.0 };
                (id.to_string(), s)
            })
            .collect();
        let sys = SystemInput { name: "s", section: "", hypotheses: &hyps, scores: &scores };
        let err = build_leaderboard(&pairs, &[sys], &NormTables::shipped(), Default::default()).unwrap_err();
        assert!(matches!(&err, Error::MissingIds(v) if v == &["s:2"]));
    }

    #[test]
    fn wilcoxon_n6_all_positive() {
        let a = [1.1, 2.2, 3.3, 4.4, 5.5, 6.6];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 21.0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert!((r.p_value - 0.03125).abs() < 1e-15);
        assert_eq!(brute_force_p(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 21.0), 0.03125);
        let swapped = wilcoxon_signed_rank(&b, &a).unwrap();
        assert_eq!(swapped.p_value, r.p_value);
        assert_eq!(swapped.statistic, 0.0);
    }

    #[test]
    fn wilcoxon_errors() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(wilcoxon_signed_rank(&a, &a), Err(Error::NoInformation)));
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0], &[0.0, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(wilcoxon_signed_rank(&a, &a[..4]).is_err());
    }

    #[test]
    fn wilcoxon_exact_with_ties_matches_enumeration() {
        let a = [3.0, 1.0, -2.0, 2.0, 5.0, -1.0, 2.0, 4.0];
        let b = [0.0; 8];
        let r = wilcoxon_exact(&a, &b).unwrap();
        let ranks = average_ranks(&a.iter().map(|x: &f64| x.abs()).collect::<Vec<_>>());
        assert_eq!(r.p_value, brute_force_p(&ranks, r.statistic));
    }

    #[test]
    fn exact_and_normal_agree_at_n20() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let shift: f64 = rng.gen_range(-0.5..0.5);
            let a: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0) + shift).collect();
            let b = vec![0.0; 20];
            let e = wilcoxon_exact(&a, &b).unwrap();
            let n = wilcoxon_normal(&a, &b).unwrap();
            assert!((e.p_value - n.p_value).abs() <= 0.01, "{} vs {}", e.p_value, n.p_value);
        }
    }

    #[test]
    fn large_samples_use_normal() {
        let a: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&a, &vec![0.0; 30]).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        assert!(r.p_value < 1e-5);
    }

    fn synthetic(n: usize, seed: u64, offset: f64) -> BTreeMap<String, f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| (format!("{i:04}"), (rng.gen_range(0.0..0.9) + offset).min(1.0)))
            .collect()
    }

    #[test]
    fn splits() {
        let a = synthetic(1100, 1, 0.0);
        let shifted: BTreeMap<String, f64> = a.iter().map(|(k, v)| (k.clone(), v + 0.1)).collect();
        let r = significance_by_splits(&shifted, &a, 30, 900, 42).unwrap();
        assert_eq!(r.means_a.len(), 30);
        assert!(r.test.p_value < 0.05);

        assert!(matches!(significance_by_splits(&a, &a, 30, 900, 42), Err(Error::NoInformation)));
        assert!(significance_by_splits(&a, &a, 30, 1101, 42).is_err());
        let mut short = a.clone();
        short.remove("0000");
        assert!(matches!(significance_by_splits(&a, &short, 30, 900, 42), Err(Error::MissingIds(_))));
    }

    #[test]
    fn splits_are_seeded() {
        let a = synthetic(1100, 1, 0.0);
        let b = synthetic(1100, 2, 0.01);
        let r1 = significance_by_splits(&a, &b, 30, 900, 42).unwrap();
        let r2 = significance_by_splits(&a, &b, 30, 900, 42).unwrap();
        assert_eq!(r1, r2);
        let r3 = significance_by_splits(&a, &b, 30, 900, 43).unwrap();
        assert_ne!(r1.means_a, r3.means_a);
        assert_eq!(r1.test.statistic, 146.0);
        assert!((r1.test.p_value - 0.07691437242905015).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn scaling_one_measure_scales_joint(
            rows in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64), 1..40),
            c in 0.0..=1.0f64,
        ) {
            let base: Vec<EvalRecord> = rows.iter().enumerate()
                .map(|(i, &(s, co, sl, f))| rec(&i.to_string(), s, co, sl, f)).collect();
            let scaled: Vec<EvalRecord> = rows.iter().enumerate()
                .map(|(i, &(s, co, sl, f))| rec(&i.to_string(), s * c, co, sl, f)).collect();
            let j = joint_score(&base).unwrap();
            let js = joint_score(&scaled).unwrap();
            prop_assert!((js - c * j).abs() <= 1e-12);
            let mean_product = base.iter().map(|r| r.style * r.content * r.slot * r.fluency).sum::<f64>() / base.len() as f64;
            prop_assert!((j - mean_product).abs() <= 1e-12);
        }
    }
}
