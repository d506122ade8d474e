//! Scripted workloads for the simulator.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::RuntimeError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BeanSpec {
    pub name: String,
    #[serde(default = "stateless")]
    pub kind: String,
    #[serde(default)]
    pub provides: Vec<String>,
    #[serde(default)]
    pub requires: Vec<String>,
}

fn stateless() -> String {
    "stateless".into()
}

fn server() -> String {
    "server".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModuleSpec {
    pub name: String,
    #[serde(default = "server")]
    pub container: String,
    #[serde(default)]
    pub beans: Vec<BeanSpec>,
}

/// One scenario step. Modules and beans are addressed by name; bean
/// names are unique across the runtime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase", rename_all_fields = "camelCase", deny_unknown_fields)]
pub enum Action {
    Deploy { module: ModuleSpec },
    Undeploy { module: String },
    /// Removes one bean; wires targeting it are dropped.
    RemoveBean { bean: String },
    Wire { bean: String, iface: String, provider: String },
    Unwire { bean: String, iface: String },
    /// Without `durationMs` the duration is drawn from the seeded RNG.
    Invoke {
        bean: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration_ms: Option<u64>,
    },
    Fail { bean: String, exception_type: String },
    AdvanceClock { ms: u64 },
}

impl Action {
    pub fn op(&self) -> &'static str {
        match self {
            Action::Deploy { .. } => "deploy",
            Action::Undeploy { .. } => "undeploy",
            Action::RemoveBean { .. } => "removeBean",
            Action::Wire { .. } => "wire",
            Action::Unwire { .. } => "unwire",
            Action::Invoke { .. } => "invoke",
            Action::Fail { .. } => "fail",
            Action::AdvanceClock { .. } => "advanceClock",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub steps: Vec<Action>,
}

impl Scenario {
    /// Parses and checks that every referenced module and bean was
    /// introduced by an earlier deploy.
    pub fn from_json(text: &str) -> Result<Self, RuntimeError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.check_references()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn check_references(&self) -> Result<(), RuntimeError> {
        let mut modules = BTreeSet::new();
        let mut beans = BTreeSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            let unknown = |what: &str, name: &str| RuntimeError::Load {
                step: i,
                message: format!("{} references undeclared {what} `{name}`", step.op()),
            };
            match step {
                Action::Deploy { module } => {
                    modules.insert(module.name.as_str());
                    beans.extend(module.beans.iter().map(|b| b.name.as_str()));
                }
                Action::Undeploy { module } if !modules.contains(module.as_str()) => {
                    return Err(unknown("module", module))
                }
                Action::Wire { bean, provider, .. } => {
                    for b in [bean, provider] {
                        if !beans.contains(b.as_str()) {
                            return Err(unknown("bean", b));
                        }
                    }
                }
                Action::Unwire { bean, .. }
                | Action::RemoveBean { bean }
                | Action::Invoke { bean, .. } | Action::Fail { bean, .. }
                    if !beans.contains(bean.as_str()) =>
                {
                    return Err(unknown("bean", bean))
                }
                _ => {}
            }
        }
        Ok(())
    }
}
