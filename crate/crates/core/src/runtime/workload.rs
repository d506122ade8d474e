//! Seeded random scenarios for fuzzing and stress runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{Action, BeanSpec, ModuleSpec, Scenario};
use super::sim::Runtime;

const IFACES: [&str; 5] = ["IA", "IB", "IC", "ID", "IE"];
const KINDS: [&str; 3] = ["stateless", "stateful", "message-driven"];

/// A scenario of exactly `len` steps, every one valid when replayed in
/// order on a fresh runtime.
pub fn random_scenario(seed: u64, len: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shadow = Runtime::new(seed);
    let mut steps = Vec::with_capacity(len);
    let mut fresh = 0usize;
    while steps.len() < len {
        let Some(action) = propose(&mut rng, &shadow, &mut fresh) else { continue };
        if shadow.perform_effector(action.clone()).is_ok() {
            steps.push(action);
        }
    }
    Scenario { seed, steps }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> Option<&'a T> {
    items.choose(rng)
}

fn some_ifaces(rng: &mut ChaCha8Rng) -> Vec<String> {
    let k = rng.gen_range(0..=2);
    let mut v: Vec<String> = IFACES.choose_multiple(rng, k).map(|s| s.to_string()).collect();
    v.sort();
    v
}

fn propose(rng: &mut ChaCha8Rng, rt: &Runtime, fresh: &mut usize) -> Option<Action> {
    let beans: Vec<_> = rt.beans().collect();
    let modules: Vec<&str> = rt.containers().values().flat_map(|c| c.modules.keys()).map(String::as_str).collect();
    let roll = rng.gen_range(0..100);
    if beans.is_empty() || roll < 12 {
        *fresh += 1;
        let n = *fresh;
        let count = rng.gen_range(1..=3);
        let beans = (0..count)
            .map(|i| {
                let provides = some_ifaces(rng);
                let requires = some_ifaces(rng);
                BeanSpec {
                    name: format!("m{n}b{i}"),
                    kind: KINDS[rng.gen_range(0..KINDS.len())].into(),
                    provides,
                    requires,
                }
            })
            .collect();
        let container = if rng.gen_bool(0.8) { "server" } else { "edge" };
        return Some(Action::Deploy {
            module: ModuleSpec {
                name: format!("m{n}"),
                container: container.into(),
                beans,
            },
        });
    }
    match roll {
        12..=16 => pick(rng, &modules).map(|m| Action::Undeploy { module: m.to_string() }),
        17..=20 => pick(rng, &beans).map(|b| Action::RemoveBean { bean: b.id.clone() }),
        21..=45 => {
            let b = pick(rng, &beans)?;
            let open: Vec<&String> = b.required_interfaces.iter().filter(|i| !b.wires.contains_key(*i)).collect();
            let iface = *pick(rng, &open)?;
            let providers: Vec<&String> = beans
                .iter()
                .filter(|p| p.provided_interfaces.contains(iface))
                .map(|p| &p.id)
                .collect();
            let provider = *pick(rng, &providers)?;
            Some(Action::Wire {
                bean: b.id.clone(),
                iface: iface.clone(),
                provider: provider.clone(),
            })
        }
        46..=52 => {
            let b = pick(rng, &beans)?;
            let wired: Vec<&String> = b.wires.keys().collect();
            let iface = *pick(rng, &wired)?;
            Some(Action::Unwire {
                bean: b.id.clone(),
                iface: iface.clone(),
            })
        }
        53..=80 => {
            let b = pick(rng, &beans)?;
            let duration_ms = if rng.gen_bool(0.5) { Some(rng.gen_range(1..=300)) } else { None };
            Some(Action::Invoke {
                bean: b.id.clone(),
                duration_ms,
            })
        }
        81..=92 => {
            let b = pick(rng, &beans)?;
            Some(Action::Fail {
                bean: b.id.clone(),
                exception_type: ["Timeout", "NullPointer", "Rollback"][rng.gen_range(0..3)].into(),
            })
        }
        _ => Some(Action::AdvanceClock {
            ms: rng.gen_range(1..=400),
        }),
    }
}
