//! Dataset construction: keep pairs whose rewrite is clearly more informal,
//! flag semantically divergent pairs for manual rewriting, attach slots.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{check_unique_ids, PairRecord, ParallelPair, SlotSet};
use crate::error::{Error, Result};
use crate::jsonl;

pub const DEFAULT_INFORMALITY_THRESHOLD: f64 = 0.45;

/// A pair record extended with classifier outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    #[serde(flatten)]
    pub pair: PairRecord,
    pub formality_formal: f64,
    pub formality_informal: f64,
    pub similarity: f64,
    #[serde(default)]
    pub needs_rewrite: bool,
}

impl CandidatePair {
    /// Drop in formality from the formal side to the informal side.
    pub fn informality_increase(&self) -> f64 {
        self.formality_formal - self.formality_informal
    }

    fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("formality_formal", self.formality_formal),
            ("formality_informal", self.formality_informal),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfRange {
                    id: self.pair.id.clone(),
                    field,
                    value,
                });
            }
        }
        if !self.similarity.is_finite() {
            return Err(Error::InvalidArgument(format!("similarity of `{}` is not finite", self.pair.id)));
        }
        Ok(())
    }
}

pub fn read_candidates(path: &Path) -> Result<Vec<CandidatePair>> {
    let records: Vec<(usize, CandidatePair)> = jsonl::read_records(path)?;
    check_unique_ids(records.iter().map(|(line, c)| (*line, c.pair.id.as_str())))?;
    records
        .into_iter()
        .map(|(_, c)| c.validate().map(|_| c))
        .collect()
}

/// Keeps candidates whose informality increase is strictly above `threshold`.
pub fn filter_by_informality(cands: Vec<CandidatePair>, threshold: f64) -> Vec<CandidatePair> {
    cands
        .into_iter()
        .filter(|c| c.informality_increase() > threshold)
        .collect()
}

/// Sets `needs_rewrite` on candidates with similarity below `sim_threshold`.
pub fn flag_rewrites(cands: Vec<CandidatePair>, sim_threshold: f64) -> Vec<CandidatePair> {
    cands
        .into_iter()
        .map(|mut c| {
            c.needs_rewrite = c.similarity < sim_threshold;
            c
        })
        .collect()
}

/// Flagged candidates, in input order.
pub fn worklist(cands: &[CandidatePair]) -> Vec<CandidatePair> {
    cands.iter().filter(|c| c.needs_rewrite).cloned().collect()
}

/// Sidecar report of [`attach_slots`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachReport {
    pub pairs: usize,
    pub missing_slot_ids: Vec<String>,
}

/// Replaces each candidate's slots with the ones in `slot_source`. Ids absent
/// from the map get an empty slot set and are listed in the report.
pub fn attach_slots(
    cands: &[CandidatePair],
    slot_source: &BTreeMap<String, SlotSet>,
) -> (Vec<ParallelPair>, AttachReport) {
    let mut report = AttachReport {
        pairs: cands.len(),
        ..Default::default()
    };
    let pairs = cands
        .iter()
        .map(|c| {
            let slots = slot_source.get(&c.pair.id).cloned().unwrap_or_else(|| {
                report.missing_slot_ids.push(c.pair.id.clone());
                SlotSet::default()
            });
            ParallelPair::new(c.pair.id.clone(), &c.pair.formal, &c.pair.informal, slots)
        })
        .collect();
    (pairs, report)
}

/// `{"id", "slots"}` rows of a slot source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub id: String,
    pub slots: SlotSet,
}

pub fn read_slot_source(path: &Path) -> Result<BTreeMap<String, SlotSet>> {
    let records: Vec<(usize, SlotRecord)> = jsonl::read_records(path)?;
    check_unique_ids(records.iter().map(|(line, r)| (*line, r.id.as_str())))?;
    Ok(records.into_iter().map(|(_, r)| (r.id, r.slots)).collect())
}
