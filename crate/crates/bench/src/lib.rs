//! Fixtures shared by the benchmarks.

use cvsense::Scenario;

/// The four-SU, three-band scenario shipped with the repository.
pub fn shipped_scenario() -> Scenario {
    Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/paper_sec7"
    ))
    .expect("shipped scenario parses")
}
