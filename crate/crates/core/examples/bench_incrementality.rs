//! Touched-element counts of one incremental bean addition against a
//! full batch transform, for growing models.
//!
//! cargo run --release --example bench_incrementality -- 100,500,1000

use rtsync::harness::bench;
use rtsync::views::ViewKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sizes: Vec<usize> = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "100,500,1000".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    for view in ViewKind::ALL {
        let t = bench(&sizes, view)?;
        print!("{}:\n{}", t.rules, t.to_csv());
        println!("constant incremental: {}, linear batch: {}\n", t.incremental_constant, t.batch_linear);
    }
    Ok(())
}
