//! Managers on real threads: decoupled analysis and atomic backward
//! segments under concurrent source mutation.

mod common;

use common::{check_interleaving, concurrent_interleaving};

#[test]
fn interleavings_are_decoupled_and_atomic() {
    for seed in 0..8 {
        let (source, log) = concurrent_interleaving(seed, 12).unwrap();
        assert_eq!(log.analyses.len(), 36);
        assert!(log.injections >= 36);
        check_interleaving(&source, &log).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn backward_segments_are_written() {
    let (source, log) = concurrent_interleaving(7, 10).unwrap();
    assert!(!log.segments.is_empty());
    assert!(log.segments.iter().all(|&(a, b)| a <= b && b <= source.head_seq()));
}
