//! Random mutation sequences: every accepted mutation keeps the model
//! conforming, and journal replay reproduces the model.

mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mutations_conform_and_replay(seed in any::<u64>(), which in 0usize..8) {
        let metas = common::fuzzable_metas();
        let meta = &metas[which % metas.len()];
        let stats = common::fuzz_sequence(meta, seed, 120).map_err(TestCaseError::fail)?;
        prop_assert!(stats.accepted > 0);
    }
}

#[test]
fn fuzzer_covers_rejections_and_all_safe_metamodels() {
    let metas = common::fuzzable_metas();
    let names: Vec<&str> = metas.iter().map(|m| m.name()).collect();
    assert_eq!(names, ["ejb", "perf", "fail"]);
    let stats = common::fuzz_sequence(&metas[0], 11, 300).unwrap();
    assert!(stats.accepted > 50 && stats.accepted < stats.attempted, "{stats:?}");
}
