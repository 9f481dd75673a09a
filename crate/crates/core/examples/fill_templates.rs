//! Splicing infiller output back into a template.
//!
//!     cargo run --example fill_templates

use editkit::template::parse_fillers;
use editkit::{fill_template, Template};

fn main() {
    let template = Template::parse("<gap_0> SFO <gap_1>").unwrap();
    let generated = "<gap_0> i wanna find a unisex salon in <gap_1>";

    let fillers = parse_fillers(generated, template.gap_count()).unwrap();
    println!("fillers: {fillers:?}");
    println!("{}", fill_template(&template, &fillers).unwrap());

    let err = fill_template(&template, &["only one"]).unwrap_err();
    println!("wrong filler count: {err}");
}
