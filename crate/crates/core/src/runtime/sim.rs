//! The simulated managed element.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{Action, ModuleSpec, Scenario};
use super::RuntimeError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExceptionEntry {
    pub type_name: String,
    pub at_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BeanState {
    pub id: String,
    pub name: String,
    pub kind: String,
    pub provided_interfaces: BTreeSet<String>,
    pub required_interfaces: BTreeSet<String>,
    /// Required interface name to provider bean id.
    pub wires: BTreeMap<String, String>,
    pub call_count: u64,
    pub total_time_ms: u64,
    pub exceptions: Vec<ExceptionEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleState {
    pub id: String,
    pub name: String,
    pub beans: BTreeMap<String, BeanState>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerState {
    pub id: String,
    pub modules: BTreeMap<String, ModuleState>,
}

/// Where an event came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Scenario,
    Effector,
}

/// Field order is fixed by declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RuntimeEvent {
    pub seq: u64,
    pub at_ms: u64,
    pub origin: Origin,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub action: Action,
}

/// A deterministic EJB-like container runtime. Containers are created on
/// first deploy and never removed.
#[derive(Clone, Debug)]
pub struct Runtime {
    containers: BTreeMap<String, ContainerState>,
    clock: u64,
    seed: u64,
    rng: ChaCha8Rng,
    events: Vec<RuntimeEvent>,
    position: usize,
}

impl Runtime {
    pub fn new(seed: u64) -> Self {
        Runtime {
            containers: BTreeMap::new(),
            clock: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: Vec::new(),
            position: 0,
        }
    }

    pub fn for_scenario(scenario: &Scenario) -> Self {
        Runtime::new(scenario.seed)
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of scenario steps executed so far.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn containers(&self) -> &BTreeMap<String, ContainerState> {
        &self.containers
    }

    pub fn events(&self) -> &[RuntimeEvent] {
        &self.events
    }

    pub fn beans(&self) -> impl Iterator<Item = &BeanState> + '_ {
        self.containers
            .values()
            .flat_map(|c| c.modules.values())
            .flat_map(|m| m.beans.values())
    }

    pub fn bean(&self, id: &str) -> Option<&BeanState> {
        self.beans().find(|b| b.id == id)
    }

    fn bean_mut(&mut self, id: &str) -> Option<&mut BeanState> {
        self.containers
            .values_mut()
            .flat_map(|c| c.modules.values_mut())
            .flat_map(|m| m.beans.values_mut())
            .find(|b| b.id == id)
    }

    pub fn module(&self, id: &str) -> Option<&ModuleState> {
        self.containers.values().find_map(|c| c.modules.get(id))
    }

    /// Executes the next `k` scenario steps.
    pub fn step(&mut self, scenario: &Scenario, k: usize) -> Result<Vec<RuntimeEvent>, RuntimeError> {
        if k == 0 || self.position + k > scenario.len() {
            return Err(RuntimeError::StepRange {
                position: self.position,
                k,
                len: scenario.len(),
            });
        }
        let first = self.events.len();
        for _ in 0..k {
            let step = self.position;
            let action = scenario.steps[step].clone();
            self.perform(action, Origin::Scenario, Some(step))
                .map_err(|message| RuntimeError::Fault { step, message })?;
            self.position += 1;
        }
        Ok(self.events[first..].to_vec())
    }

    /// Runs an action outside the scenario script.
    pub fn perform_effector(&mut self, action: Action) -> Result<(), String> {
        self.perform(action, Origin::Effector, None)
    }

    fn log(&mut self, origin: Origin, step: Option<usize>, action: Action) {
        let seq = self.events.len() as u64 + 1;
        self.events.push(RuntimeEvent {
            seq,
            at_ms: self.clock,
            origin,
            step,
            action,
        });
    }

    fn drop_wires_to(&mut self, providers: &BTreeSet<String>) {
        for c in self.containers.values_mut() {
            for m in c.modules.values_mut() {
                for b in m.beans.values_mut() {
                    b.wires.retain(|_, p| !providers.contains(p));
                }
            }
        }
    }

    fn perform(&mut self, action: Action, origin: Origin, step: Option<usize>) -> Result<(), String> {
        match &action {
            Action::Deploy { module } => self.deploy(module)?,
            Action::Undeploy { module } => {
                let owner = self
                    .containers
                    .values_mut()
                    .find(|c| c.modules.contains_key(module))
                    .ok_or_else(|| format!("module `{module}` is not deployed"))?;
                let gone = owner.modules.remove(module).unwrap();
                self.drop_wires_to(&gone.beans.keys().cloned().collect());
            }
            Action::RemoveBean { bean } => {
                let removed = self
                    .containers
                    .values_mut()
                    .flat_map(|c| c.modules.values_mut())
                    .find_map(|m| m.beans.remove(bean));
                if removed.is_none() {
                    return Err(format!("no bean `{bean}`"));
                }
                self.drop_wires_to(&BTreeSet::from([bean.clone()]));
            }
            Action::Wire { bean, iface, provider } => {
                let p = self.bean(provider).ok_or_else(|| format!("no bean `{provider}`"))?;
                if !p.provided_interfaces.contains(iface) {
                    return Err(format!("bean `{provider}` does not provide `{iface}`"));
                }
                let b = self.bean_mut(bean).ok_or_else(|| format!("no bean `{bean}`"))?;
                if !b.required_interfaces.contains(iface) {
                    return Err(format!("bean `{bean}` does not require `{iface}`"));
                }
                if b.wires.contains_key(iface) {
                    return Err(format!("`{bean}.{iface}` is already wired"));
                }
                b.wires.insert(iface.clone(), provider.clone());
            }
            Action::Unwire { bean, iface } => {
                let b = self.bean_mut(bean).ok_or_else(|| format!("no bean `{bean}`"))?;
                if b.wires.remove(iface).is_none() {
                    return Err(format!("`{bean}.{iface}` is not wired"));
                }
            }
            Action::Invoke { bean, duration_ms } => {
                let d = match duration_ms {
                    Some(d) => *d,
                    None => self.rng.gen_range(1..=200),
                };
                let b = self.bean_mut(bean).ok_or_else(|| format!("no bean `{bean}`"))?;
                b.call_count += 1;
                b.total_time_ms += d;
                // The log records the duration actually used.
                let action = Action::Invoke {
                    bean: bean.clone(),
                    duration_ms: Some(d),
                };
                self.log(origin, step, action);
                return Ok(());
            }
            Action::Fail { bean, exception_type } => {
                let at_ms = self.clock;
                let b = self.bean_mut(bean).ok_or_else(|| format!("no bean `{bean}`"))?;
                b.exceptions.push(ExceptionEntry {
                    type_name: exception_type.clone(),
                    at_ms,
                });
            }
            Action::AdvanceClock { ms } => self.clock += ms,
        }
        self.log(origin, step, action);
        Ok(())
    }

    fn deploy(&mut self, spec: &ModuleSpec) -> Result<(), String> {
        if self.module(&spec.name).is_some() {
            return Err(format!("module `{}` is already deployed", spec.name));
        }
        let mut beans = BTreeMap::new();
        for b in &spec.beans {
            if self.bean(&b.name).is_some() || beans.contains_key(&b.name) {
                return Err(format!("bean `{}` already exists", b.name));
            }
            if !matches!(b.kind.as_str(), "stateless" | "stateful" | "message-driven") {
                return Err(format!("bean `{}` has unknown kind `{}`", b.name, b.kind));
            }
            beans.insert(
                b.name.clone(),
                BeanState {
                    id: b.name.clone(),
                    name: b.name.clone(),
                    kind: b.kind.clone(),
                    provided_interfaces: b.provides.iter().cloned().collect(),
                    required_interfaces: b.requires.iter().cloned().collect(),
                    wires: BTreeMap::new(),
                    call_count: 0,
                    total_time_ms: 0,
                    exceptions: Vec::new(),
                },
            );
        }
        let container = self
            .containers
            .entry(spec.container.clone())
            .or_insert_with(|| ContainerState {
                id: spec.container.clone(),
                modules: BTreeMap::new(),
            });
        container.modules.insert(
            spec.name.clone(),
            ModuleState {
                id: spec.name.clone(),
                name: spec.name.clone(),
                beans,
            },
        );
        Ok(())
    }

    /// Event log as JSON lines.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    /// Structural state without the event log, for equality checks.
    pub fn state_json(&self) -> String {
        serde_json::to_string(&(&self.containers, self.clock)).expect("state serializes")
    }

    /// Checks the structural invariants of the runtime.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for c in self.containers.values() {
            for m in c.modules.values() {
                for b in m.beans.values() {
                    if !seen.insert(b.id.as_str()) {
                        return Err(format!("duplicate bean id `{}`", b.id));
                    }
                }
            }
        }
        for b in self.beans() {
            for (iface, p) in &b.wires {
                if !b.required_interfaces.contains(iface) {
                    return Err(format!("`{}` wires undeclared `{iface}`", b.id));
                }
                match self.bean(p) {
                    Some(p) if p.provided_interfaces.contains(iface) => {}
                    _ => return Err(format!("`{}.{iface}` wired to unresolved provider `{p}`", b.id)),
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::scenario::BeanSpec;

    fn one_bean() -> Action {
        Action::Deploy {
            module: ModuleSpec {
                name: "m".into(),
                container: "server".into(),
                beans: vec![BeanSpec {
                    name: "b1".into(),
                    kind: "stateless".into(),
                    provides: vec!["I".into()],
                    requires: vec![],
                }],
            },
        }
    }

    #[test]
    fn invoke_updates_counters() {
        let s = Scenario {
            seed: 1,
            steps: vec![
                one_bean(),
                Action::Invoke {
                    bean: "b1".into(),
                    duration_ms: Some(20),
                },
            ],
        };
        let mut rt = Runtime::for_scenario(&s);
        rt.step(&s, 1).unwrap();
        rt.step(&s, 1).unwrap();
        let b = rt.bean("b1").unwrap();
        assert_eq!((b.call_count, b.total_time_ms), (1, 20));
    }

    #[test]
    fn deploy_then_undeploy_restores_structure() {
        let s = Scenario {
            seed: 1,
            steps: vec![one_bean(), Action::Undeploy { module: "m".into() }],
        };
        let mut rt = Runtime::for_scenario(&s);
        rt.deploy(&ModuleSpec {
            name: "base".into(),
            container: "server".into(),
            beans: vec![],
        })
        .unwrap();
        let before = rt.containers().clone();
        rt.step(&s, 2).unwrap();
        assert_eq!(rt.containers(), &before);
        assert_eq!(rt.events().len(), 2);
    }

    #[test]
    fn invalid_action_is_a_fault_naming_the_step() {
        let s = Scenario {
            seed: 1,
            steps: vec![
                one_bean(),
                Action::Unwire {
                    bean: "b1".into(),
                    iface: "I".into(),
                },
            ],
        };
        let mut rt = Runtime::for_scenario(&s);
        match rt.step(&s, 2) {
            Err(RuntimeError::Fault { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_durations_are_seeded() {
        let s = Scenario {
            seed: 42,
            steps: std::iter::once(one_bean())
                .chain((0..20).map(|_| Action::Invoke {
                    bean: "b1".into(),
                    duration_ms: None,
                }))
                .collect(),
        };
        let run = || {
            let mut rt = Runtime::for_scenario(&s);
            rt.step(&s, s.len()).unwrap();
            rt.events_jsonl()
        };
        assert_eq!(run(), run());
        let mut rt = Runtime::for_scenario(&s);
        rt.step(&s, s.len()).unwrap();
        let t = rt.bean("b1").unwrap().total_time_ms;
        assert!((20..=4000).contains(&t));
    }
}
