//! Character n-gram F-score with default and custom settings.
//!
//!     cargo run --example chrf_scores

use editkit::chrf;
use editkit::slotmetric::{chrf_with, ChrfConfig};

fn main() {
    for (hyp, reference) in [("polk st", "polk street"), ("SFO", "San Francisco"), ("Seattle WA", "Seattle, WA")] {
        let default = chrf(hyp, reference).unwrap();
        let balanced = chrf_with(hyp, reference, ChrfConfig { beta: 1.0, max_n: 6 }).unwrap();
        println!("{hyp:>12} | {reference:<14} chrF2 {default:.4}  chrF1 {balanced:.4}");
    }
}
