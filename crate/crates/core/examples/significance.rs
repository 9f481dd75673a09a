//! Signed-rank test, directly and over seeded random splits.
//!
//!     cargo run --example significance

use std::collections::BTreeMap;

use editkit::evalharness::{significance_by_splits, wilcoxon_signed_rank};

fn main() {
    let a = [0.31, 0.52, 0.13, 0.74, 0.45, 0.66];
    let b = [0.2, 0.3, 0.0, 0.3, 0.0, 0.1];
    let r = wilcoxon_signed_rank(&a, &b).unwrap();
    println!("paired: W = {} p = {:.5} ({:?})", r.statistic, r.p_value, r.method);

    let sys_b: BTreeMap<String, f64> = (0..1100).map(|i| (format!("{i:04}"), (i % 97) as f64 / 100.0)).collect();
    let sys_a: BTreeMap<String, f64> = sys_b.iter().map(|(k, v)| (k.clone(), v * 0.95 + 0.04)).collect();
    let split = significance_by_splits(&sys_a, &sys_b, 30, 900, 42).unwrap();
    println!("30 splits of 900: W = {} p = {:.3e}", split.test.statistic, split.test.p_value);
}
