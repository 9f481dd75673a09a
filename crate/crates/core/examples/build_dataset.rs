//! Dataset construction: informality filter, rewrite flags, slot attachment.
//!
//!     cargo run --example build_dataset

use std::collections::BTreeMap;

use editkit::corpus::PairRecord;
use editkit::datasetpipe::{attach_slots, filter_by_informality, flag_rewrites, worklist, CandidatePair};
use editkit::SlotSet;

fn candidate(id: &str, formal: &str, informal: &str, f: f64, i: f64, sim: f64) -> CandidatePair {
    CandidatePair {
        pair: PairRecord { id: id.into(), formal: formal.into(), informal: informal.into(), slots: SlotSet::default() },
        formality_formal: f,
        formality_informal: i,
        similarity: sim,
        needs_rewrite: false,
    }
}

fn main() {
    let cands = vec![
        candidate("a", "Red Joan sounds great", "red joan is cool", 0.92, 0.20, 0.90),
        candidate("b", "I am looking for a salon in SFO.", "i need a salon", 0.81, 0.10, 0.30),
        candidate("c", "Where is it?", "where is it", 0.55, 0.10, 0.95),
    ];
    let kept = flag_rewrites(filter_by_informality(cands, 0.45), 0.5);
    println!("kept {} candidates, {} need rewriting", kept.len(), worklist(&kept).len());

    let slots: BTreeMap<String, SlotSet> = [("a".to_string(), SlotSet::new(["Red Joan"]))].into();
    let (pairs, report) = attach_slots(&kept, &slots);
    for p in &pairs {
        println!("{}: {:?}", p.id, p.slots.as_slice());
    }
    println!("{}", serde_json::to_string(&report).unwrap());
}
