//! The three template modes for one source sentence.
//!
//!     cargo run --example templates

use editkit::editalign::to_tagger_example;
use editkit::template::{template_from_alignment, template_from_slots, template_union};
use editkit::{align, tokenize, NormTables, SlotSet};

fn main() {
    let tables = NormTables::shipped();
    let source = tokenize("How will the weather be in Delhi, India on the tomorrow?");
    let target = tokenize("what's the weather gonna be like in Delhi, India tomorrow?");
    let slots = SlotSet::new(["Delhi", "India", "tomorrow"]);

    let alignment = align(&source, &target);
    let tags = to_tagger_example(&alignment, &source);

    println!("tag:        {}", template_from_alignment(&source, &alignment));
    println!("constr:     {}", template_from_slots(&source, &slots, &tables).unwrap());
    println!(
        "constr-tag: {}",
        template_union(&source, &slots, &tags.labels, tags.bos_label, &tables).unwrap()
    );
}
