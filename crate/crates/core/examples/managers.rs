//! Three autonomic managers, each with its own view and trigger
//! schedule, analysing the demo workload.
//!
//! cargo run --example managers

use std::sync::RwLock;

use rtsync::runtime::{pump_sensors, Runtime, Scenario, SourceBuilder};
use rtsync::views::{Manager, ManagerConfig, ViewKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_json(include_str!("../fixtures/scenarios/demo.json"))?;
    let mut rt = Runtime::for_scenario(&scenario);
    let source = RwLock::new(SourceBuilder::empty("src"));
    let config = ManagerConfig::default();
    let mut managers = vec![
        (Manager::new("architecture", ViewKind::Arch, config.clone(), &source)?, 10),
        (Manager::new("performance", ViewKind::Perf, config.clone(), &source)?, 5),
        (Manager::new("failure", ViewKind::Fail, config, &source)?, 25),
    ];
    for step in 1..=scenario.len() {
        rt.step(&scenario, 1)?;
        pump_sensors(&rt, &mut source.write().unwrap())?;
        for (m, every) in &mut managers {
            if step % *every != 0 {
                continue;
            }
            let t = m.trigger(&source)?;
            println!(
                "step {step:>2} {:<12} sync #{} consumed ({}, {}] touched {}",
                m.name(),
                t.seq,
                t.from,
                t.to,
                t.report.touched
            );
            for f in m.analyze(rt.clock()) {
                println!("    {}", f.to_json_line());
            }
        }
    }
    Ok(())
}
