//! Slot preservation scores with exact, normalized and approximate matches.
//!
//!     cargo run --example slot_preservation

use editkit::slotmetric::SlotMetricConfig;
use editkit::{slot_score, tokenize, NormTables, SlotSet};

fn main() {
    let tables = NormTables::shipped();
    let cases = [
        ("red joan is cool", vec!["Red Joan"]),
        ("c u at nine in the morning", vec!["9am"]),
        ("meet me on polk street in LA", vec!["Polk St", "Los Angeles"]),
        ("see u tomorrow", vec!["Tuesday next week", "tomorrow"]),
        ("where do u wanna pick it up at?", vec![]),
    ];
    for (hypothesis, slots) in cases {
        let score = slot_score(&tokenize(hypothesis), &SlotSet::new(slots), &tables, SlotMetricConfig::default());
        println!("{:.3}  {hypothesis}", score.value);
        for m in &score.matches {
            println!("       {:<20} {:?} {:.3}", m.slot, m.kind, m.weight);
        }
    }
}
