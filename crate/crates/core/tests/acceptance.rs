//! Acceptance gate. Every criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use editkit::corpus::{read_pairs, tokenize, Scores};
use editkit::datasetpipe::{filter_by_informality, CandidatePair};
use editkit::editalign::{align_tokens, apply_edits_tokens, EditTag};
use editkit::evalharness::{
    joint_score, significance_by_splits, wilcoxon_exact, wilcoxon_normal, wilcoxon_signed_rank, EvalRecord,
    Leaderboard, LeaderboardRow,
};
use editkit::slotmetric::{chrf, slot_score, SlotMetricConfig};
use editkit::template::{fill_template, gold_fillers, template_from_alignment};
use editkit::textnorm::{normalize_tokens, NormTables};
use editkit::{align, Sentence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

// ---------------------------------------------------------------------------
// independent oracles
// ---------------------------------------------------------------------------

/// Distance-only Levenshtein over tokens, two rows.
fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Op {
    Match,
    Sub,
    Del,
    Ins,
}

/// Every minimum-cost edit path, by exhaustive search.
fn all_optimal_paths(a: &[String], b: &[String]) -> (usize, Vec<Vec<Op>>) {
    fn walk(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        cost: usize,
        path: &mut Vec<Op>,
        best: &mut (usize, Vec<Vec<Op>>),
    ) {
        if cost > best.0 {
            return;
        }
        if i == a.len() && j == b.len() {
            if cost < best.0 {
                *best = (cost, Vec::new());
            }
            best.1.push(path.clone());
            return;
        }
        if i < a.len() && j < b.len() {
            let op = if a[i] == b[j] { Op::Match } else { Op::Sub };
            path.push(op);
            walk(a, b, i + 1, j + 1, cost + usize::from(op == Op::Sub), path, best);
            path.pop();
        }
        if i < a.len() {
            path.push(Op::Del);
            walk(a, b, i + 1, j, cost + 1, path, best);
            path.pop();
        }
        if j < b.len() {
            path.push(Op::Ins);
            walk(a, b, i, j + 1, cost + 1, path, best);
            path.pop();
        }
    }
    let mut best = (usize::MAX, Vec::new());
    walk(a, b, 0, 0, 0, &mut Vec::new(), &mut best);
    best
}

fn source_tags_of(path: &[Op]) -> Vec<EditTag> {
    path.iter()
        .filter_map(|op| match op {
            Op::Match => Some(EditTag::Equal),
            Op::Sub => Some(EditTag::Replace),
            Op::Del => Some(EditTag::Delete),
            Op::Ins => None,
        })
        .collect()
}

/// Two-sided signed-rank p-value over all sign assignments of integer ranks.
fn enumerate_signed_rank_p(n: u32, w: u32) -> f64 {
    let (mut lo, mut hi) = (0u32, 0u32);
    for mask in 0u32..(1 << n) {
        let s: u32 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).sum();
        lo += u32::from(s <= w);
        hi += u32::from(s >= w);
    }
    (2.0 * f64::from(lo.min(hi)) / f64::from(1u32 << n)).min(1.0)
}

// ---------------------------------------------------------------------------
// generated corpus
// ---------------------------------------------------------------------------

const VOCAB: [&str; 24] = [
    "i", "you", "the", "a", "book", "table", "at", "9am", "in", "la", "please", "want", "to", "go", ".", "?", "!",
    "'ll", "tomorrow", "next", "week", "salon", "sfo", "is",
];

fn mutation_corpus(n: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = |rng: &mut ChaCha8Rng| VOCAB[rng.gen_range(0..VOCAB.len())].to_string();
    (0..n)
        .map(|_| {
            let len = rng.gen_range(0..16);
            let src: Vec<String> = (0..len).map(|_| word(&mut rng)).collect();
            let mut tgt = src.clone();
            for _ in 0..rng.gen_range(0..7) {
                match rng.gen_range(0..3) {
                    0 => {
                        let at = rng.gen_range(0..=tgt.len());
                        tgt.insert(at, word(&mut rng));
                    }
                    1 if !tgt.is_empty() => {
                        let at = rng.gen_range(0..tgt.len());
                        tgt.remove(at);
                    }
                    _ if !tgt.is_empty() => {
                        let at = rng.gen_range(0..tgt.len());
                        tgt[at] = word(&mut rng);
                    }
                    _ => {}
                }
            }
            (src, tgt)
        })
        .collect()
}

fn sentence_of(tokens: &[String]) -> Sentence {
    tokenize(&tokens.join(" "))
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

fn round_trip_alignment() -> Result<String, String> {
    let corpus = mutation_corpus(10_000, 17);
    let start = Instant::now();
    for (k, (src, tgt)) in corpus.iter().enumerate() {
        let a = align_tokens(src, tgt);
        let rebuilt = apply_edits_tokens(src, &a).map_err(|e| format!("case {k}: {e}"))?;
        if &rebuilt != tgt {
            return Err(format!("case {k}: {src:?} -> {tgt:?} rebuilt as {rebuilt:?}"));
        }
        let expected = levenshtein(src, tgt);
        if a.cost() != expected {
            return Err(format!("case {k}: cost {} but distance {expected}", a.cost()));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(10) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("10000/10000 round trips, costs equal to distance, {elapsed:.2?}"))
}

fn template_reconstruction() -> Result<String, String> {
    let corpus = mutation_corpus(10_000, 17);
    for (k, (src, tgt)) in corpus.iter().enumerate() {
        let source = sentence_of(src);
        let target = sentence_of(tgt);
        if source.texts() != *src || target.texts() != *tgt {
            return Err(format!("case {k}: generated tokens do not survive tokenization"));
        }
        let a = align(&source, &target);
        let template = template_from_alignment(&source, &a);
        let fillers = gold_fillers(&source, &template, &a).map_err(|e| format!("case {k}: {e}"))?;
        let filled = fill_template(&template, &fillers).map_err(|e| format!("case {k}: {e}"))?;
        let filled: Vec<&str> = filled.split_whitespace().collect();
        if filled != *tgt {
            return Err(format!("case {k}: template {template} filled as {filled:?}, expected {tgt:?}"));
        }
    }
    Ok("10000/10000 targets reproduced from gold fillers".into())
}

fn sample_pair_slot_scores() -> Result<String, String> {
    let pairs = read_pairs(&fixture("sample_pairs.jsonl")).map_err(|e| e.to_string())?;
    if pairs.len() != 5 {
        return Err(format!("{} rows", pairs.len()));
    }
    let tables = NormTables::shipped();
    for p in &pairs {
        let s = slot_score(&p.informal, &p.slots, &tables, SlotMetricConfig::default());
        if s.value != 1.0 {
            return Err(format!("{}: slot score {}", p.id, s.value));
        }
    }
    if !pairs[4].slots.is_empty() {
        return Err("row 5 should have no slots".into());
    }
    Ok("5/5 rows score 1.0".into())
}

fn returning_pair_alignment() -> Result<String, String> {
    let source = tokenize("I will be returning Tuesday next week.");
    let target = tokenize("I 'll be back Tuesday next week !");
    let (cost, paths) = all_optimal_paths(&source.texts(), &target.texts());
    if paths.len() != 1 {
        return Err(format!("{} optimal paths", paths.len()));
    }
    let oracle = source_tags_of(&paths[0]);
    use EditTag::*;
    let pinned = vec![Equal, Replace, Equal, Replace, Equal, Equal, Equal, Replace];
    if oracle != pinned {
        return Err(format!("oracle tags {oracle:?}"));
    }
    let a = align(&source, &target);
    if a.source_tags != pinned || a.cost() != cost {
        return Err(format!("library tags {:?}, cost {}", a.source_tags, a.cost()));
    }
    let template = template_from_alignment(&source, &a);
    if template.gap_count() != 3 {
        return Err(format!("template {template}"));
    }
    Ok(format!("tags match the unique optimal path, template `{template}`"))
}

const CHRF_PINNED: [(&str, &str, f64); 20] = [
    ("polk st", "polk street", 0.48734452610209456),
    ("polk street", "polk st", 0.7728450323464734),
    ("red joan is cool", "Red Joan", 0.766993327723068),
    ("tuesday next week", "Tuesday next week", 1.0),
    ("on tuesday", "Tuesday next week", 0.3959924175182579),
    ("SFO", "San Francisco", 0.049019607843137254),
    ("salon in SFO", "SFO", 0.5622400475341652),
    ("Delhi, India", "Delhi", 0.6739027101930327),
    ("india", "Delhi; India", 0.3026493934926273),
    ("the next day", "tomorrow", 0.01984126984126984),
    ("tomorrow .", "tomorrow", 0.9611655546205115),
    ("Sacramento Valley", "Sacramento Valley Station", 0.704429218373816),
    ("SAN International Airport International airport", "SAN International Airport", 0.8359346343404314),
    ("Are You Ready", "are you ready on tv", 0.7204437833442671),
    ("aaaa", "aa", 0.7738095238095238),
    ("aa", "aaaa", 0.23504273504273504),
    ("abcabc", "abc", 0.7425213675213675),
    ("Seattle WA", "Seattle, WA", 0.6461651455856033),
    ("I l be back tUESDAY next week.", "I 'll be back Tuesday next week !", 0.8498062800142859),
    ("cat", "cart", 0.28665413533834583),
];

fn chrf_values() -> Result<String, String> {
    let identity = chrf("Tuesday next week", "Tuesday next week").map_err(|e| e.to_string())?;
    let disjoint = chrf("abc", "xyz").map_err(|e| e.to_string())?;
    if identity != 1.0 || disjoint != 0.0 {
        return Err(format!("identity {identity}, disjoint {disjoint}"));
    }
    for (hyp, reference, expected) in CHRF_PINNED {
        let got = chrf(hyp, reference).map_err(|e| e.to_string())?;
        if (got - expected).abs() > 1e-9 {
            return Err(format!("chrF({hyp:?}, {reference:?}) = {got}, oracle {expected}"));
        }
    }
    Ok("identity 1, disjoint 0, 20/20 pinned values within 1e-9".into())
}

fn joint_consistency() -> Result<String, String> {
    let constant = |style, content, slot, fluency| -> Vec<EvalRecord> {
        (0..1100)
            .map(|i| EvalRecord::new(i.to_string(), Scores { style, content, fluency }, slot).unwrap())
            .collect()
    };
    let rewriter = constant(0.80, 0.76, 1.00, 0.76);
    let joint = joint_score(&rewriter).map_err(|e| e.to_string())?;
    if (joint - 0.4621).abs() > 1e-4 || format!("{joint:.2}") != "0.46" {
        return Err(format!("constant-score joint {joint}"));
    }
    let copy = constant(0.03, 0.90, 1.00, 0.83);
    let copy_joint = joint_score(&copy).map_err(|e| e.to_string())?;
    if format!("{copy_joint:.2}") != "0.02" {
        return Err(format!("copy-paste joint {copy_joint}"));
    }
    let board = Leaderboard::new(vec![
        LeaderboardRow::from_records("copy-paste", "constrained", &copy).unwrap(),
        LeaderboardRow::from_records("constrained-rewriter", "constrained", &rewriter).unwrap(),
    ]);
    if board.rows.last().map(|r| r.system.as_str()) != Some("copy-paste") {
        return Err("copy-paste not ranked last".into());
    }
    let mixed: Vec<EvalRecord> = (0..50)
        .map(|i| {
            let x = f64::from(i) / 49.0;
            EvalRecord::new(i.to_string(), Scores { style: x, content: 1.0 - x, fluency: 0.9 }, 0.5 + x / 2.0).unwrap()
        })
        .collect();
    let mean_product = mixed.iter().map(|r| r.style * r.content * r.slot * r.fluency).sum::<f64>() / 50.0;
    if (joint_score(&mixed).unwrap() - mean_product).abs() > 1e-12 {
        return Err("joint differs from mean product".into());
    }
    Ok(format!("joint {joint:.5} -> 0.46, copy-paste {copy_joint:.5} -> 0.02, joint == mean(product)"))
}

fn wilcoxon() -> Result<String, String> {
    let a = [0.31, 0.52, 0.13, 0.74, 0.45, 0.66];
    let b = [0.2, 0.3, 0.0, 0.3, 0.0, 0.1];
    let r = wilcoxon_signed_rank(&a, &b).map_err(|e| e.to_string())?;
    let oracle = enumerate_signed_rank_p(6, 21);
    if r.statistic != 21.0 || (r.p_value - 0.03125).abs() > 1e-15 || oracle != 0.03125 {
        return Err(format!("n=6: W {} p {} oracle {oracle}", r.statistic, r.p_value));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let shift = rng.gen_range(-0.6..0.6);
        let x: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + shift + rng.gen_range(-1.0..1.0)).collect();
        let e = wilcoxon_exact(&x, &y).map_err(|e| e.to_string())?;
        let n = wilcoxon_normal(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((e.p_value - n.p_value).abs());
    }
    if worst > 0.01 {
        return Err(format!("exact and normal differ by {worst}"));
    }
    let base: BTreeMap<String, f64> = (0..1100)
        .map(|i| (format!("{i:04}"), rng.gen_range(0.0..0.9)))
        .collect();
    let better: BTreeMap<String, f64> = base.iter().map(|(k, v)| (k.clone(), v + 0.1)).collect();
    let split = significance_by_splits(&better, &base, 30, 900, 42).map_err(|e| e.to_string())?;
    if split.test.p_value >= 0.05 {
        return Err(format!("dominance p = {}", split.test.p_value));
    }
    Ok(format!(
        "n=6 p = 0.03125, max |exact - normal| = {worst:.4}, dominance p = {:.2e}",
        split.test.p_value
    ))
}

fn threshold_boundary() -> Result<String, String> {
    let cand = |id: &str, formal: f64| -> CandidatePair {
        serde_json::from_value(serde_json::json!({
            "id": id, "formal": "Hello there.", "informal": "hey",
            "formality_formal": formal, "formality_informal": 0.0, "similarity": 1.0
        }))
        .unwrap()
    };
    let at = 0.45_f64;
    let above = f64::from_bits(at.to_bits() + 1);
    let kept = filter_by_informality(vec![cand("at", at), cand("above", above), cand("well-above", 0.46)], 0.45);
    let ids: Vec<&str> = kept.iter().map(|c| c.pair.id.as_str()).collect();
    if ids != ["above", "well-above"] {
        return Err(format!("kept {ids:?}"));
    }
    Ok("0.45 dropped, next float above 0.45 kept".into())
}

fn normalization() -> Result<String, String> {
    let t = NormTables::shipped();
    let forms: [&[&str]; 4] = [&["9am"], &["9a.m."], &["9", "a.m."], &["nine", "in", "the", "morning"]];
    for f in forms {
        let n = normalize_tokens(f, &t);
        if n != ["09:00"] {
            return Err(format!("{f:?} -> {n:?}"));
        }
    }
    if normalize_tokens(&["six"], &t) != ["6"] || normalize_tokens(&["Six"], &t) != ["6"] {
        return Err("six".into());
    }
    if normalize_tokens(&["LA"], &t) != ["los angeles"] {
        return Err("LA".into());
    }
    let words: Vec<String> = VOCAB
        .iter()
        .map(|w| w.to_string())
        .chain(
            [
                "six", "fourteen", "twenty-one", "nine", "o'clock", "morning", "evening", "pm", "p.m.", "10:30",
                "$50", "€20", "St", "Ave", "LA", "NYC", "Los", "Angeles", "running", "scheduled", "cities", "went",
                "stopped", "dollars", "bucks", "flies", "Delhi", "India", "SFO", "12", "noon", "at", "night",
            ]
            .iter()
            .map(|w| w.to_string()),
        )
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..1000 {
        let len = rng.gen_range(1..14);
        let raw: Vec<&str> = (0..len).map(|_| words[rng.gen_range(0..words.len())].as_str()).collect();
        let tokens = tokenize(&raw.join(" ")).texts();
        let once = normalize_tokens(&tokens, &t);
        let twice = normalize_tokens(&once, &t);
        if once != twice {
            return Err(format!("sentence {k}: {tokens:?} -> {once:?} -> {twice:?}"));
        }
    }
    Ok("time forms -> 09:00, six -> 6, LA -> los angeles, 1000/1000 idempotent".into())
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_editkit"))
        .args(args)
        .env_remove("EDITKIT_CONFIG")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_determinism() -> Result<String, String> {
    let f = |name: &str| fixture(name).display().to_string();
    let mut snapshots: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let d = |name: &str| dir.path().join(name).display().to_string();
        let config = f("editkit.conf");
        let runs: Vec<(&str, Vec<String>)> = vec![
            ("align", vec!["align".into(), "--pairs".into(), f("pairs.jsonl"), "--out".into(), d("tags.jsonl")]),
            ("make-templates", vec!["make-templates".into(), "--pairs".into(), f("pairs.jsonl"), "--mode".into(), "constr-tag".into()]),
            ("make-training-data", vec!["make-training-data".into(), "--pairs".into(), f("pairs.jsonl"), "--mode".into(), "tag".into(), "--sentinel-style".into(), "t5".into()]),
            ("fill", vec!["fill".into(), "--templates".into(), f("templates.jsonl"), "--fillers".into(), f("fillers.jsonl")]),
            ("score-slots", vec!["score-slots".into(), "--pairs".into(), f("pairs.jsonl"), "--hyps".into(), f("hyps_rewriter.jsonl")]),
            ("chrf", vec!["chrf".into(), "--hyp".into(), "polk st".into(), "--ref".into(), "polk street".into()]),
            ("evaluate", vec![
                "evaluate".into(), "--pairs".into(), f("pairs.jsonl"),
                "--hyps".into(), f("hyps_rewriter.jsonl"), "--scores".into(), f("scores_rewriter.jsonl"),
                "--hyps".into(), f("hyps_copy.jsonl"), "--scores".into(), f("scores_copy.jsonl"),
                "--name".into(), "rewriter".into(), "--name".into(), "copy".into(),
                "--json".into(), d("board.json"), "--records-dir".into(), d("records"),
            ]),
            ("significance", vec![
                "significance".into(), "--a".into(), d("records/rewriter.jsonl"), "--b".into(), d("records/copy.jsonl"),
                "--split-size".into(), "6".into(), "--seed".into(), "42".into(),
            ]),
            ("filter-dataset", vec![
                "filter-dataset".into(), "--candidates".into(), f("candidates.jsonl"), "--sim-threshold".into(), "0.5".into(),
                "--slots".into(), f("slots.jsonl"), "--out".into(), d("filtered.jsonl"),
                "--worklist".into(), d("worklist.jsonl"), "--report".into(), d("report.json"),
            ]),
            ("stats", vec!["stats".into(), "--tags".into(), d("tags.jsonl")]),
        ];
        let mut snap = BTreeMap::new();
        for (name, mut args) in runs {
            args.extend(["--config".to_string(), config.clone()]);
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let (code, stdout) = run_cli(&argv);
            if code != 0 {
                return Err(format!("{name} exited with {code}"));
            }
            snap.insert(format!("{name}:stdout"), stdout);
        }
        for file in [
            "tags.jsonl",
            "board.json",
            "records/rewriter.jsonl",
            "records/copy.jsonl",
            "filtered.jsonl",
            "worklist.jsonl",
            "report.json",
        ] {
            let bytes = fs::read(dir.path().join(file)).map_err(|e| format!("{file}: {e}"))?;
            snap.insert(file.to_string(), bytes);
        }
        snapshots.push(snap);
    }
    for (key, bytes) in &snapshots[0] {
        if snapshots[1].get(key) != Some(bytes) {
            return Err(format!("{key} differs between runs"));
        }
    }
    Ok(format!("10 subcommands, {} outputs byte-identical across runs", snapshots[0].len()))
}

type Criterion = fn() -> Result<String, String>;

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion); 10] = [
        ("round-trip alignment", round_trip_alignment),
        ("template reconstruction", template_reconstruction),
        ("reference pairs keep all slots", sample_pair_slot_scores),
        ("pinned alignment and template", returning_pair_alignment),
        ("chrF values", chrf_values),
        ("joint score consistency", joint_consistency),
        ("signed-rank test", wilcoxon),
        ("informality threshold", threshold_boundary),
        ("normalization", normalization),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
