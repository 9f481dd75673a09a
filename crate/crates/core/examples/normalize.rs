//! Text normalization: numbers, times, places, abbreviations and lemmas.
//!
//!     cargo run --example normalize

use editkit::{normalize_tokens, tokenize, NormTables};

fn main() {
    let tables = NormTables::shipped();
    for text in [
        "pick me up at nine in the morning",
        "pick me up at 9am",
        "Six tickets to LA for $50",
        "two places on Main St in NYC",
        "the meetings were scheduled at ten at night",
    ] {
        let tokens = tokenize(text).texts();
        println!("{text}\n  -> {}", normalize_tokens(&tokens, &tables).join(" | "));
    }
}
