//! Token alignment of a formal/informal pair and the tagger example it yields.
//!
//!     cargo run --example align_pairs

use editkit::editalign::{apply_edits, to_tagger_example};
use editkit::{align, tokenize};

fn main() {
    let formal = tokenize("I will be returning Tuesday next week.");
    let informal = tokenize("I 'll be back Tuesday next week !");

    let alignment = align(&formal, &informal);
    println!("cost: {}", alignment.cost());
    for (i, (token, tag)) in formal.texts().iter().zip(&alignment.source_tags).enumerate() {
        match alignment.replacements.get(&i) {
            Some(r) => println!("{token:>10}  {tag}  -> {}", r.join(" ")),
            None => println!("{token:>10}  {tag}"),
        }
    }

    let rebuilt = apply_edits(&formal, &alignment).unwrap();
    assert_eq!(rebuilt, informal.texts());

    let example = to_tagger_example(&alignment, &formal);
    println!("{}", serde_json::to_string(&example).unwrap());
}
