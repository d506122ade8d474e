//! The causal connection: sensors pump runtime state into the source
//! model, effectors apply source edits back to the runtime.
//!
//! cargo run --example sensors_effectors

use rtsync::runtime::{apply_effector, pump_sensors, Runtime, Scenario, SourceBuilder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_json(include_str!("../fixtures/scenarios/demo.json"))?;
    let mut rt = Runtime::for_scenario(&scenario);
    let mut source = SourceBuilder::empty("src");
    rt.step(&scenario, 4)?;
    let batch = pump_sensors(&rt, &mut source)?;
    println!("initial pump: {} record(s)", batch.len());
    println!("repeat pump: {} record(s)", pump_sensors(&rt, &mut source)?.len());

    let cursor = source.head_seq();
    let wire = source.edges().find(|e| e.ty == "wire").map(|e| e.id).ok_or("no wire")?;
    source.delete_edge(wire)?;
    let b1 = source.nodes().find(|n| n.ty == "SessionBean").map(|n| n.id).ok_or("no bean")?;
    source.set_attr(b1, "callCount", 0i64)?;
    let edit = source.snapshot(cursor)?;
    let report = apply_effector(&mut rt, &source, &edit);
    println!("{}", serde_json::to_string_pretty(&report)?);

    // The rejected counter edit is reverted by the next pump.
    let repump = pump_sensors(&rt, &mut source)?;
    for r in repump.records.iter() {
        println!("repump: {}", serde_json::to_string(r)?);
    }
    Ok(())
}
