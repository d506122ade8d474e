//! Closing the loop: a connector cycle found in the architecture view is
//! broken in the view, synchronised backward, applied to the runtime by
//! the effectors and observed again through the sensors.
//!
//! cargo run --example adaptation_loop

use rtsync::harness::{run_scenario, ManagersFile, RunOptions};
use rtsync::runtime::Scenario;
use rtsync::views::{ArchConstraint, FindingCode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_json(include_str!("../fixtures/scenarios/cycle.json"))?;
    let opts = RunOptions {
        adapt: true,
        ..RunOptions::default()
    };
    let run = run_scenario(&scenario, &ManagersFile::default(), &opts)?;
    for s in &run.report.steps {
        for a in &s.adaptations {
            println!("step {}: {}", s.step_index, serde_json::to_string_pretty(a)?);
        }
    }
    let c2 = run.report.count_final(FindingCode::Arch(ArchConstraint::AcyclicConnectors));
    println!("remaining cycles: {c2}");
    println!("consistency findings per manager: {:?}", run.report.final_consistency);
    for b in run.runtime.beans() {
        println!("{} wires {:?}", b.id, b.wires);
    }
    Ok(())
}
