//! View invariants on random workloads: abstraction, performance
//! attributes and failure completeness, checked against the runtime.

mod common;

use proptest::prelude::*;
use rtsync::model::Value;
use rtsync::runtime::{pump_sensors, random_scenario, Runtime, SourceBuilder};
use rtsync::tgg::transform_forward;
use rtsync::views::catalog;

fn final_state(seed: u64, len: usize) -> (Runtime, rtsync::model::Model) {
    let scenario = random_scenario(seed, len);
    let mut rt = Runtime::for_scenario(&scenario);
    rt.step(&scenario, len).unwrap();
    let mut source = SourceBuilder::empty("src");
    pump_sensors(&rt, &mut source).unwrap();
    (rt, source)
}

fn name_of(n: &rtsync::model::Node) -> &str {
    n.attr("name").and_then(Value::as_str).unwrap_or("")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn perf_attributes_match_runtime(seed in any::<u64>()) {
        let (rt, source) = final_state(seed, 60);
        let (view, _, _) = transform_forward(&source, &catalog().perf_rules).unwrap();
        let comps: Vec<_> = view.nodes().filter(|n| n.ty == "PerfComponent").collect();
        prop_assert_eq!(comps.len(), rt.beans().count());
        for b in rt.beans() {
            let c = comps.iter().find(|c| name_of(c) == b.name).expect("component per bean");
            let calls = c.attr("invocationCount").and_then(Value::as_i64).unwrap();
            let avg = c.attr("avgResponseTimeMs").and_then(Value::as_f64).unwrap();
            prop_assert_eq!(calls as u64, b.call_count);
            let expected = if b.call_count == 0 { 0.0 } else { b.total_time_ms as f64 / b.call_count as f64 };
            prop_assert!((avg - expected).abs() <= 1e-9, "{} {} vs {}", b.name, avg, expected);
        }
    }

    #[test]
    fn failure_view_is_complete(seed in any::<u64>()) {
        let (rt, source) = final_state(seed, 60);
        let (view, _, _) = transform_forward(&source, &catalog().fail_rules).unwrap();
        for b in rt.beans() {
            let unit = view.nodes().find(|n| n.ty == "FaultyUnit" && name_of(n) == b.name).expect("unit per bean");
            let mut seen: Vec<(String, i64)> = view
                .out_edges(unit.id)
                .map(|e| view.node(e.dst).unwrap())
                .map(|ev| {
                    let ty = ev.attr("typeName").and_then(Value::as_str).unwrap().to_string();
                    (ty, ev.attr("atMs").and_then(Value::as_i64).unwrap())
                })
                .collect();
            let mut expected: Vec<(String, i64)> =
                b.exceptions.iter().map(|x| (x.type_name.clone(), x.at_ms as i64)).collect();
            seen.sort();
            expected.sort();
            prop_assert_eq!(seen, expected);
        }
    }

    #[test]
    fn arch_view_abstracts_away_runtime_detail(seed in any::<u64>()) {
        let (rt, source) = final_state(seed, 60);
        let (view, _, _) = transform_forward(&source, &catalog().arch_rules).unwrap();
        for n in view.nodes() {
            for key in n.attrs.keys() {
                prop_assert!(!["callCount", "totalTimeMs", "uid", "kind", "atMs"].contains(&key.as_str()));
            }
        }
        let session_beans = source.nodes().filter(|n| n.ty == "SessionBean").count();
        prop_assert_eq!(view.nodes().filter(|n| n.ty == "Component").count(), session_beans);
        let wires: usize = rt.beans().filter(|b| b.kind != "message-driven").map(|b| b.wires.len()).sum();
        prop_assert!(view.nodes().filter(|n| n.ty == "Connector").count() <= wires);
        prop_assert!(view.element_count() < source.element_count() || source.element_count() <= 1);
    }
}
