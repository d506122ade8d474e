//! Replays a scenario on the simulated runtime, pumps the sensors after
//! every step and prints the event log as JSON lines.
//!
//! cargo run --example runtime_simulation -- fixtures/scenarios/demo.json [source-out.json]

use rtsync::runtime::{pump_sensors, Runtime, Scenario, SourceBuilder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/scenarios/demo.json".into());
    let scenario = Scenario::from_json(&std::fs::read_to_string(&path)?)?;
    let mut rt = Runtime::for_scenario(&scenario);
    let mut source = SourceBuilder::empty("demo-source");
    for _ in 0..scenario.len() {
        rt.step(&scenario, 1)?;
        let batch = pump_sensors(&rt, &mut source)?;
        eprintln!("step {:>2}: {} source record(s)", rt.position(), batch.len());
    }
    print!("{}", rt.events_jsonl());
    for b in rt.beans() {
        eprintln!("{}: {} call(s), {} ms, {} exception(s)", b.id, b.call_count, b.total_time_ms, b.exceptions.len());
    }
    if let Some(out) = args.next() {
        std::fs::write(out, source.to_json())?;
    }
    Ok(())
}
