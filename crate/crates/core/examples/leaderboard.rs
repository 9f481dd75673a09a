//! A two-system leaderboard built from per-sentence scores.
//!
//!     cargo run --example leaderboard

use std::collections::BTreeMap;

use editkit::corpus::ExternalScores;
use editkit::evalharness::{build_leaderboard, SystemInput};
use editkit::{NormTables, ParallelPair, SlotSet};

fn scores(rows: &[(&str, f64, f64, f64)]) -> BTreeMap<String, ExternalScores> {
    rows.iter()
        .map(|&(id, style, content, fluency)| {
            (id.to_string(), ExternalScores { id: id.to_string(), style, content, fluency })
        })
        .collect()
}

fn hyps(rows: &[(&str, &str)]) -> BTreeMap<String, String> {
    rows.iter().map(|(id, t)| (id.to_string(), t.to_string())).collect()
}

fn main() {
    let pairs = vec![
        ParallelPair::new("1", "Red Joan sounds great", "red joan is cool", SlotSet::new(["Red Joan"])),
        ParallelPair::new("2", "I am looking for a unisex salon in SFO.", "i wanna find a unisex salon in SFO", SlotSet::new(["SFO"])),
    ];
    let rewrite_h = hyps(&[("1", "red joan is cool"), ("2", "i wanna find a salon in san fran")]);
    let rewrite_s = scores(&[("1", 0.9, 0.8, 0.8), ("2", 0.85, 0.7, 0.75)]);
    let copy_h = hyps(&[("1", "Red Joan sounds great"), ("2", "I am looking for a unisex salon in SFO.")]);
    let copy_s = scores(&[("1", 0.03, 0.9, 0.83), ("2", 0.03, 0.9, 0.83)]);

    let systems = [
        SystemInput { name: "copy-paste", section: "baselines", hypotheses: &copy_h, scores: &copy_s },
        SystemInput { name: "rewriter", section: "baselines", hypotheses: &rewrite_h, scores: &rewrite_s },
    ];
    let (board, _) = build_leaderboard(&pairs, &systems, &NormTables::shipped(), Default::default()).unwrap();
    print!("{}", board.to_tsv());
}
