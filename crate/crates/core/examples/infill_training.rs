//! Infiller training rows in both sentinel styles.
//!
//!     cargo run --example infill_training

use editkit::template::{make_infill_example, template_from_alignment, SentinelStyle};
use editkit::{align, ParallelPair, SlotSet};

fn main() {
    let pair = ParallelPair::new(
        "back",
        "I will be returning Tuesday next week.",
        "I 'll be back Tuesday next week !",
        SlotSet::new(["Tuesday next week"]),
    );
    let alignment = align(&pair.formal, &pair.informal);
    let template = template_from_alignment(&pair.formal, &alignment);

    for style in [SentinelStyle::Gap, SentinelStyle::T5] {
        let ex = make_infill_example(&pair, &template, &alignment, style).unwrap();
        println!("input:  {}", ex.input_text);
        println!("target: {}", ex.target_text);
    }
}
