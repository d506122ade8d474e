//! Workload generators and oracles shared by the integration suites and
//! the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtsync::model::{digest, isomorphic, validate, ElementId, MetaModel, Model, Value, ValueKind};
use rtsync::runtime::{pump_sensors, random_scenario, Runtime, SourceBuilder};
use rtsync::tgg::{transform_forward, triple_model, SyncSession};
use rtsync::views::{
    analyze_performance, catalog, check_arch_constraints, detect_failures, Finding, Manager, ManagerConfig, ViewKind,
};

pub fn fixture(rel: &str) -> String {
    let path = format!("{}/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn fixture_path(rel: &str) -> std::path::PathBuf {
    format!("{}/fixtures/{rel}", env!("CARGO_MANIFEST_DIR")).into()
}

/// Meta-models whose every edge type has lower bound 0, so each single
/// accepted mutation leaves a conforming model.
pub fn fuzzable_metas() -> Vec<Arc<MetaModel>> {
    let c = catalog();
    [&c.ejb, &c.arch, &c.perf, &c.fail]
        .into_iter()
        .filter(|m| m.edge_types().iter().all(|e| e.lower == 0))
        .cloned()
        .collect()
}

fn random_value(rng: &mut ChaCha8Rng, kind: ValueKind) -> Value {
    match kind {
        ValueKind::String => Value::Str(["", "a", "b", "IPay", "x y"].choose(rng).unwrap().to_string()),
        ValueKind::Integer => Value::Int(rng.gen_range(-5..1000)),
        ValueKind::Real => Value::Real(rng.gen_range(0.0..500.0)),
        ValueKind::Boolean => Value::Bool(rng.gen()),
    }
}

fn any_kind(rng: &mut ChaCha8Rng) -> ValueKind {
    *[ValueKind::String, ValueKind::Integer, ValueKind::Real, ValueKind::Boolean].choose(rng).unwrap()
}

/// Outcome of one fuzzed mutation sequence.
#[derive(Debug, Default)]
pub struct FuzzStats {
    pub attempted: usize,
    pub accepted: usize,
    pub checkpoints: usize,
}

/// Applies `steps` random mutations, well- and ill-typed, to an empty
/// model. After every step the model must validate; at checkpoints and at
/// the end, replaying the journal prefix must give an isomorphic model
/// with the same digest.
pub fn fuzz_sequence(meta: &Arc<MetaModel>, seed: u64, steps: usize) -> Result<FuzzStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Model::new("fuzz", meta.clone());
    let concrete: Vec<String> =
        meta.node_types().iter().filter(|t| !t.is_abstract).map(|t| t.name.clone()).collect();
    let mut stats = FuzzStats::default();
    let mut snapshots: Vec<(usize, Model)> = Vec::new();
    for step in 0..steps {
        let nodes: Vec<ElementId> = m.nodes().map(|n| n.id).collect();
        let edges: Vec<ElementId> = m.edges().map(|e| e.id).collect();
        let roll = rng.gen_range(0..100);
        let result = if roll < 35 || nodes.is_empty() {
            let ty = if rng.gen_bool(0.95) {
                concrete.choose(&mut rng).unwrap().clone()
            } else {
                meta.node_types().choose(&mut rng).unwrap().name.clone()
            };
            let mut attrs = BTreeMap::new();
            if let Some(decls) = meta.attributes(&ty) {
                for (name, kind) in decls {
                    if rng.gen_bool(0.6) {
                        let k = if rng.gen_bool(0.9) { *kind } else { any_kind(&mut rng) };
                        attrs.insert(name.clone(), random_value(&mut rng, k));
                    }
                }
            }
            if rng.gen_bool(0.05) {
                attrs.insert("bogus".to_string(), Value::Int(1));
            }
            m.create_node(&ty, attrs).map(|_| ())
        } else if roll < 70 {
            let et = meta.edge_types().choose(&mut rng).unwrap().clone();
            let pick = |rng: &mut ChaCha8Rng, ty: &str, m: &Model| {
                let fitting: Vec<ElementId> = nodes
                    .iter()
                    .copied()
                    .filter(|n| m.type_of(*n).is_some_and(|t| meta.conforms(t, ty)))
                    .collect();
                if !fitting.is_empty() && rng.gen_bool(0.85) {
                    *fitting.choose(rng).unwrap()
                } else {
                    *nodes.choose(rng).unwrap()
                }
            };
            let src = pick(&mut rng, &et.source, &m);
            let dst = pick(&mut rng, &et.target, &m);
            m.create_edge(&et.name, src, dst).map(|_| ())
        } else if roll < 85 {
            let id = *nodes.choose(&mut rng).unwrap();
            let ty = m.type_of(id).unwrap().to_string();
            let decls: Vec<(String, ValueKind)> =
                meta.attributes(&ty).map(|d| d.iter().map(|(k, v)| (k.clone(), *v)).collect()).unwrap_or_default();
            match decls.choose(&mut rng) {
                Some((name, kind)) => {
                    let k = if rng.gen_bool(0.9) { *kind } else { any_kind(&mut rng) };
                    let v = random_value(&mut rng, k);
                    m.set_attr(id, name, v).map(|_| ())
                }
                None => m.set_attr(id, "bogus", 1i64).map(|_| ()),
            }
        } else if roll < 93 && !edges.is_empty() {
            m.delete_edge(*edges.choose(&mut rng).unwrap()).map(|_| ())
        } else {
            let id = if rng.gen_bool(0.97) { *nodes.choose(&mut rng).unwrap() } else { ElementId(u64::MAX) };
            m.delete_node(id).map(|_| ())
        };
        stats.attempted += 1;
        if result.is_ok() {
            stats.accepted += 1;
        }
        let report = validate(&m);
        if !report.is_empty() {
            return Err(format!("seed {seed} step {step}: {:?}", report.findings));
        }
        if step % 17 == 0 {
            snapshots.push((m.journal().records().len(), m.clone()));
        }
    }
    snapshots.push((m.journal().records().len(), m.clone()));
    for (len, expected) in &snapshots {
        let (replayed, _) = Model::replay("replayed", meta.clone(), &m.journal().records()[..*len])
            .map_err(|e| format!("seed {seed}: replay of {len} record(s) failed: {e}"))?;
        if isomorphic(expected, &replayed).map_err(|e| e.to_string())?.is_none() {
            return Err(format!("seed {seed}: replay of {len} record(s) is not isomorphic"));
        }
        if digest(expected) != digest(&replayed) {
            return Err(format!("seed {seed}: replay of {len} record(s) changed the digest"));
        }
        stats.checkpoints += 1;
    }
    Ok(stats)
}

/// Runs a random scenario of `len` steps, pumping after each step and
/// syncing every `every` steps with all three rule sets. After each sync
/// the live triple must be isomorphic to a batch transform of the same
/// source. Returns the number of syncs checked and of source mutations.
pub fn equivalence_run(seed: u64, len: usize, every: usize) -> Result<(usize, u64), String> {
    let scenario = random_scenario(seed, len);
    let mut rt = Runtime::for_scenario(&scenario);
    let mut source = SourceBuilder::empty("src");
    let mut sessions: Vec<SyncSession> = ViewKind::ALL
        .iter()
        .map(|v| SyncSession::new(catalog().rules(*v).clone(), &source).map(|s| s.0))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut checked = 0;
    for i in 0..len {
        rt.step(&scenario, 1).map_err(|e| format!("seed {seed}: {e}"))?;
        pump_sensors(&rt, &mut source).map_err(|e| e.to_string())?;
        if (i + 1) % every != 0 && i + 1 != len {
            continue;
        }
        for s in &mut sessions {
            let batch = source.snapshot(s.source_cursor()).map_err(|e| e.to_string())?;
            s.sync_forward(&source, &batch).map_err(|e| e.to_string())?;
            let (t, c, _) = transform_forward(&source, s.rules()).map_err(|e| e.to_string())?;
            let fresh = triple_model(s.rules(), &source, &t, &c);
            let live = triple_model(s.rules(), &source, s.target(), s.corr());
            if isomorphic(&fresh, &live).map_err(|e| e.to_string())?.is_none() {
                return Err(format!("seed {seed}, step {i}, rules {}: triple differs from batch", s.rules().name));
            }
            checked += 1;
        }
    }
    Ok((checked, source.head_seq()))
}

/// Id-independent identity of a finding: its message, except for
/// connector cycles, whose rotation depends on element ids.
pub fn finding_key(view: &Model, f: &Finding) -> String {
    if f.message.starts_with("C2:") {
        let mut names: Vec<String> = f
            .subjects
            .iter()
            .map(|id| view.attr(*id, "name").and_then(Value::as_str).unwrap_or("").to_string())
            .collect();
        names.sort();
        format!("{:?} C2 {{{}}}", f.severity, names.join(","))
    } else {
        format!("{:?} {}", f.severity, f.message)
    }
}

pub fn analyse(kind: ViewKind, view: &Model, config: &ManagerConfig, now: u64) -> Vec<Finding> {
    match kind {
        ViewKind::Arch => check_arch_constraints(view, config),
        ViewKind::Perf => analyze_performance(view, config),
        ViewKind::Fail => detect_failures(view, config, now),
    }
}

/// Findings an independent analyst would report for the source as of
/// journal position `to`: replay the prefix, batch-transform, analyse.
pub fn oracle_keys(source: &Model, to: u64, kind: ViewKind, config: &ManagerConfig, now: u64) -> Vec<String> {
    let records = &source.journal().records()[..to as usize];
    let (prefix, _) = Model::replay("prefix", source.meta().clone(), records).expect("journal prefix replays");
    let (view, _, _) = transform_forward(&prefix, catalog().rules(kind)).expect("batch transform");
    let mut keys: Vec<String> = analyse(kind, &view, config, now).iter().map(|f| finding_key(&view, f)).collect();
    keys.sort();
    keys
}

/// What one seeded concurrent interleaving observed.
#[derive(Debug, Default)]
pub struct InterleavingLog {
    /// `(manager, to, now, finding keys)` per analysis.
    pub analyses: Vec<(ViewKind, u64, u64, Vec<String>)>,
    /// Journal positions at which a manager snapshot was taken.
    pub snapshots: Vec<u64>,
    /// Source segments written by backward syncs.
    pub segments: Vec<(u64, u64)>,
    pub injections: usize,
}

/// Three manager threads trigger and analyse while a sensor thread pumps
/// a random workload and an architect thread edits its own view and
/// syncs it backward. Every analysis sees at least one injected source
/// mutation between its snapshot and its evaluation.
pub fn concurrent_interleaving(seed: u64, rounds: usize) -> Result<(Model, InterleavingLog), String> {
    let scenario = random_scenario(seed, rounds * 2);
    let source = RwLock::new(SourceBuilder::empty("src"));
    let config = ManagerConfig::default();
    let log = Mutex::new(InterleavingLog::default());
    let mut managers: Vec<Manager> = ViewKind::ALL
        .iter()
        .map(|v| Manager::new(v.name(), *v, config.clone(), &source))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let (mut architect, _) = SyncSession::new(catalog().arch_rules.clone(), &source.read().unwrap())
        .map_err(|e| e.to_string())?;
    let rt = Mutex::new(Runtime::for_scenario(&scenario));
    let clock = |rt: &Mutex<Runtime>| rt.lock().unwrap().clock();

    let inject = |rng: &mut ChaCha8Rng| -> Result<(), String> {
        let mut rt = rt.lock().unwrap();
        if rt.position() < scenario.len() {
            rt.step(&scenario, 1).map_err(|e| e.to_string())?;
        }
        let mut src = source.write().unwrap();
        pump_sensors(&rt, &mut src).map_err(|e| e.to_string())?;
        // A foreign edit the next pump will sweep.
        let module = src.nodes().find(|n| n.ty == "EjbModule").map(|n| n.id);
        if let Some(module) = module {
            let mut b = SourceBuilder::new(&mut src);
            b.session_bean(module, &format!("ghost{}", rng.gen::<u16>())).map_err(|e| e.to_string())?;
        }
        log.lock().unwrap().injections += 1;
        Ok(())
    };

    std::thread::scope(|s| -> Result<(), String> {
        let mut handles = Vec::new();
        for (i, m) in managers.iter_mut().enumerate() {
            let (source, log, inject, rt) = (&source, &log, &inject, &rt);
            handles.push(s.spawn(move || -> Result<(), String> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64 + 1) << 32);
                for _ in 0..rounds {
                    let t = m.trigger(source).map_err(|e| e.to_string())?;
                    log.lock().unwrap().snapshots.push(t.to);
                    inject(&mut rng)?;
                    let now = clock(rt);
                    let mut keys: Vec<String> =
                        m.analyze(now).iter().map(|f| finding_key(m.view(), f)).collect();
                    keys.sort();
                    log.lock().unwrap().analyses.push((m.kind(), t.to, now, keys));
                    if rng.gen_bool(0.3) {
                        std::thread::yield_now();
                    }
                }
                Ok(())
            }));
        }
        let (source, log) = (&source, &log);
        let architect = &mut architect;
        handles.push(s.spawn(move || -> Result<(), String> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            for r in 0..rounds {
                let mut src = source.write().unwrap();
                let batch = src.snapshot(architect.source_cursor()).map_err(|e| e.to_string())?;
                architect.sync_forward(&src, &batch).map_err(|e| e.to_string())?;
                let view = architect.target_mut();
                let connectors: Vec<ElementId> = view.nodes().filter(|n| n.ty == "Connector").map(|n| n.id).collect();
                if !connectors.is_empty() && rng.gen_bool(0.5) {
                    view.delete_node(*connectors.choose(&mut rng).unwrap()).map_err(|e| e.to_string())?;
                } else if let Some(root) = root_of(view) {
                    let c = view
                        .create_node("Component", [("name", Value::Str(format!("arch{seed}_{r}")))])
                        .map_err(|e| e.to_string())?;
                    view.create_edge("components", root, c).map_err(|e| e.to_string())?;
                } else {
                    continue;
                }
                let pending = architect.pending_target_batch();
                let report = architect.sync_backward(&mut src, &pending).map_err(|e| e.to_string())?;
                if let Some(seg) = report.segment {
                    log.lock().unwrap().segments.push(seg);
                }
                drop(src);
                std::thread::yield_now();
            }
            Ok(())
        }));
        handles.into_iter().try_for_each(|h| h.join().expect("thread panicked"))
    })?;
    let log = log.into_inner().unwrap();
    Ok((source.into_inner().unwrap(), log))
}

fn root_of(view: &Model) -> Option<ElementId> {
    view.nodes().find(|n| n.ty == "ArchitectureModel").map(|n| n.id)
}

/// Checks one interleaving: every analysis equals the oracle for its own
/// snapshot, and no snapshot falls strictly inside a backward segment.
pub fn check_interleaving(source: &Model, log: &InterleavingLog) -> Result<(), String> {
    let config = ManagerConfig::default();
    for (kind, to, now, keys) in &log.analyses {
        let expected = oracle_keys(source, *to, *kind, &config, *now);
        if &expected != keys {
            return Err(format!("{kind:?} at {to}: analysed {keys:?}, oracle {expected:?}"));
        }
    }
    for &(a, b) in &log.segments {
        if let Some(to) = log.snapshots.iter().find(|&&to| a <= to && to < b) {
            return Err(format!("snapshot at {to} splits backward segment ({a}, {b})"));
        }
        let records = &source.journal().records()[(a - 1) as usize..b as usize];
        if records.iter().zip(a..).any(|(r, s)| r.seq != s) {
            return Err(format!("segment ({a}, {b}) is not contiguous in the journal"));
        }
    }
    Ok(())
}

/// Source models for the architecture round trip: every file under
/// `fixtures/roundtrip/` plus the demo source.
pub fn round_trip_fixtures() -> Vec<(String, Model)> {
    let dir = fixture_path("roundtrip");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .expect("round-trip fixture directory")
        .map(|e| e.unwrap().path())
        .collect();
    paths.push(fixture_path("demo.source.json"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&p).unwrap();
            (name.clone(), Model::from_json(name, catalog().ejb.clone(), &text).expect("fixture loads"))
        })
        .collect()
}

/// Forward then backward with the architecture rules; the mapped parts of
/// the original and the restored source must be isomorphic.
pub fn arch_round_trip(source: &Model) -> Result<(), String> {
    use rtsync::tgg::{mapped_projection, transform_backward};
    let rules = &catalog().arch_rules;
    let (view, corr, _) = transform_forward(source, rules).map_err(|e| e.to_string())?;
    let (back, back_corr, _) = transform_backward(&view, rules).map_err(|e| e.to_string())?;
    let original = mapped_projection(rules, source, &corr);
    let restored = mapped_projection(rules, &back, &back_corr);
    match isomorphic(&original, &restored).map_err(|e| e.to_string())? {
        Some(_) => Ok(()),
        None => Err(format!(
            "mapped subgraphs differ: {} vs {} element(s)",
            original.element_count(),
            restored.element_count()
        )),
    }
}

pub fn scenario(name: &str) -> rtsync::runtime::Scenario {
    rtsync::runtime::Scenario::from_json(&fixture(&format!("scenarios/{name}.json"))).expect("scenario fixture")
}

pub fn run(name: &str, adapt: bool) -> rtsync::harness::Run {
    let opts = rtsync::harness::RunOptions {
        adapt,
        ..Default::default()
    };
    rtsync::harness::run_scenario(&scenario(name), &rtsync::harness::ManagersFile::default(), &opts)
        .expect("scenario runs")
}
