//! The shipped metamodels and rule sets, embedded at compile time.

use std::sync::{Arc, OnceLock};

use crate::model::MetaModel;
use crate::tgg::RuleSet;

pub const EJB_META: &str = include_str!("../../fixtures/ejb.meta.json");
pub const ARCH_META: &str = include_str!("../../fixtures/arch.meta.json");
pub const PERF_META: &str = include_str!("../../fixtures/perf.meta.json");
pub const FAIL_META: &str = include_str!("../../fixtures/fail.meta.json");
pub const ARCH_RULES: &str = include_str!("../../fixtures/arch.rules.json");
pub const PERF_RULES: &str = include_str!("../../fixtures/perf.rules.json");
pub const FAIL_RULES: &str = include_str!("../../fixtures/fail.rules.json");

/// The three views a manager can observe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    Arch,
    Perf,
    Fail,
}

impl ViewKind {
    pub const ALL: [ViewKind; 3] = [ViewKind::Arch, ViewKind::Perf, ViewKind::Fail];

    pub fn name(self) -> &'static str {
        match self {
            ViewKind::Arch => "arch",
            ViewKind::Perf => "perf",
            ViewKind::Fail => "fail",
        }
    }
}

impl std::str::FromStr for ViewKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "arch" => Ok(ViewKind::Arch),
            "perf" => Ok(ViewKind::Perf),
            "fail" => Ok(ViewKind::Fail),
            other => Err(format!("unknown view `{other}` (expected arch, perf or fail)")),
        }
    }
}

pub struct Catalog {
    pub ejb: Arc<MetaModel>,
    pub arch: Arc<MetaModel>,
    pub perf: Arc<MetaModel>,
    pub fail: Arc<MetaModel>,
    pub arch_rules: Arc<RuleSet>,
    pub perf_rules: Arc<RuleSet>,
    pub fail_rules: Arc<RuleSet>,
}

impl Catalog {
    pub fn rules(&self, view: ViewKind) -> &Arc<RuleSet> {
        match view {
            ViewKind::Arch => &self.arch_rules,
            ViewKind::Perf => &self.perf_rules,
            ViewKind::Fail => &self.fail_rules,
        }
    }
}

fn load() -> Catalog {
    let meta = |text: &str| Arc::new(MetaModel::from_json(text).expect("shipped metamodel is valid"));
    let ejb = meta(EJB_META);
    let arch = meta(ARCH_META);
    let perf = meta(PERF_META);
    let fail = meta(FAIL_META);
    let rules = |text: &str, tgt: &Arc<MetaModel>| {
        Arc::new(RuleSet::from_json(text, ejb.clone(), tgt.clone()).expect("shipped rule set is valid"))
    };
    Catalog {
        arch_rules: rules(ARCH_RULES, &arch),
        perf_rules: rules(PERF_RULES, &perf),
        fail_rules: rules(FAIL_RULES, &fail),
        ejb,
        arch,
        perf,
        fail,
    }
}

/// Process-wide shared catalog.
pub fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(load)
}
