//! Scenario runs with concurrent managers.

use std::collections::BTreeMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{digest, Model};
use crate::runtime::{apply_effector, pump_sensors, EffectorReport, Runtime, Scenario, SourceBuilder};
use crate::tgg::SyncReport;
use crate::views::{ArchConstraint, Finding, FindingCode, Manager, ManagerConfig, ViewKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ManagerSpec {
    pub name: String,
    pub view: ViewKind,
    #[serde(default = "one")]
    pub trigger_every: usize,
}

fn one() -> usize {
    1
}

/// Manager configuration file: the shared [`ManagerConfig`] fields plus
/// an optional `managers` list (default: one manager per view, named
/// after it, triggered every step).
#[derive(Clone, Debug, PartialEq)]
pub struct ManagersFile {
    pub config: ManagerConfig,
    pub managers: Vec<ManagerSpec>,
}

impl Default for ManagersFile {
    fn default() -> Self {
        ManagersFile {
            config: ManagerConfig::default(),
            managers: ViewKind::ALL
                .iter()
                .map(|v| ManagerSpec {
                    name: v.name().into(),
                    view: *v,
                    trigger_every: 1,
                })
                .collect(),
        }
    }
}

impl ManagersFile {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let mut doc: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| HarnessError::Parse(format!("manager config: {e}")))?;
        let managers = match doc.remove("managers") {
            Some(v) => serde_json::from_value(v).map_err(|e| HarnessError::Validation(format!("manager list: {e}")))?,
            None => ManagersFile::default().managers,
        };
        let config: ManagerConfig = serde_json::from_value(doc.into())
            .map_err(|e| HarnessError::Validation(format!("manager config: {e}")))?;
        config.check().map_err(HarnessError::Validation)?;
        let file = ManagersFile { config, managers };
        for m in &file.managers {
            if m.trigger_every == 0 {
                return Err(HarnessError::Validation(format!("manager `{}`: triggerEvery must be positive", m.name)));
            }
        }
        Ok(file)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Number of scenario steps to execute; `None` runs them all.
    pub steps: Option<usize>,
    /// Overrides every manager's `triggerEvery`.
    pub trigger_every: Option<usize>,
    pub adapt: bool,
    pub parallel: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TriggerRecord {
    pub manager: String,
    pub seq: u64,
    pub from: u64,
    pub to: u64,
    pub report: SyncReport,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AdaptationRecord {
    pub manager: String,
    pub finding: String,
    pub view_records: usize,
    pub source_segment: Option<(u64, u64)>,
    pub effector: EffectorReport,
    pub repumped_records: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRecord {
    pub step_index: usize,
    pub clock_ms: u64,
    pub pumped_records: usize,
    pub manager_triggers: Vec<String>,
    pub sync_reports: Vec<TriggerRecord>,
    pub findings: Vec<Finding>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub adaptations: Vec<AdaptationRecord>,
}

#[derive(Clone, Debug, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Counters {
    pub triggers: usize,
    pub touched: usize,
    pub applications_added: usize,
    pub applications_revoked: usize,
    pub adaptations: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub seed: u64,
    pub steps_run: usize,
    pub steps: Vec<StepRecord>,
    /// One last trigger and analysis per manager after the final step.
    pub final_findings: Vec<Finding>,
    /// Consistency findings per manager at the end of the run.
    pub final_consistency: BTreeMap<String, usize>,
    /// Content digests of the source model and every manager's view.
    pub digests: BTreeMap<String, String>,
    pub counters: Counters,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn count_final(&self, code: FindingCode) -> usize {
        self.final_findings.iter().filter(|f| f.code == code).count()
    }
}

/// The full state of a finished run, for callers that need more than the
/// report.
pub struct Run {
    pub report: RunReport,
    pub runtime: Runtime,
    pub source: Model,
    pub managers: Vec<Manager>,
}

type Analysed = (usize, TriggerRecord, Vec<Finding>);

fn trigger_and_analyse(
    idx: usize,
    m: &mut Manager,
    source: &RwLock<Model>,
    now: u64,
) -> Result<Analysed, HarnessError> {
    let t = m.trigger(source)?;
    let findings = m.analyze(now);
    let record = TriggerRecord {
        manager: m.name().to_string(),
        seq: t.seq,
        from: t.from,
        to: t.to,
        report: t.report,
    };
    Ok((idx, record, findings))
}

fn round(
    managers: &mut [Manager],
    due: &[bool],
    source: &RwLock<Model>,
    now: u64,
    parallel: bool,
) -> Result<Vec<Analysed>, HarnessError> {
    let mut out: Vec<Analysed> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = managers
                .iter_mut()
                .enumerate()
                .filter(|(i, _)| due[*i])
                .map(|(i, m)| s.spawn(move || trigger_and_analyse(i, m, source, now)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("manager thread panicked"))
                .collect::<Result<_, _>>()
        })?
    } else {
        managers
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| due[*i])
            .map(|(i, m)| trigger_and_analyse(i, m, source, now))
            .collect::<Result<_, _>>()?
    };
    out.sort_by_key(|(i, _, _)| *i);
    Ok(out)
}

const C2: FindingCode = FindingCode::Arch(ArchConstraint::AcyclicConnectors);
const MAX_ADAPTATIONS_PER_STEP: usize = 16;

/// Breaks every connector cycle the architecture managers report:
/// view edit, backward sync, effector, sensor pump, re-trigger.
fn adapt_loop(
    managers: &mut [Manager],
    source: &RwLock<Model>,
    rt: &mut Runtime,
    findings: &mut Vec<Finding>,
) -> Result<Vec<AdaptationRecord>, HarnessError> {
    let mut records = Vec::new();
    for m in managers.iter_mut().filter(|m| m.kind() == ViewKind::Arch) {
        let mut current: Vec<Finding> = findings.iter().filter(|f| f.manager == m.name()).cloned().collect();
        while let Some(f) = current.iter().find(|f| f.code == C2).cloned() {
            if records.len() >= MAX_ADAPTATIONS_PER_STEP {
                break;
            }
            let mut src = source.write().expect("source lock");
            let a = m.adapt(&f, &mut src)?;
            let effector = apply_effector(rt, &src, &a.source_batch);
            let repumped = pump_sensors(rt, &mut src)?;
            drop(src);
            records.push(AdaptationRecord {
                manager: m.name().to_string(),
                finding: f.message.clone(),
                view_records: a.view_batch.len(),
                source_segment: a.report.segment,
                effector,
                repumped_records: repumped.len(),
            });
            m.trigger(source)?;
            current = m.analyze(rt.clock());
        }
        findings.retain(|f| f.manager != m.name());
        findings.extend(current);
    }
    Ok(records)
}

/// Runs `scenario` with the configured managers. Per step: runtime step,
/// sensor pump, then every due manager triggers and analyses in
/// configuration order (or concurrently with `parallel`), then, with
/// `adapt`, connector cycles are broken.
pub fn run_scenario(scenario: &Scenario, managers: &ManagersFile, opts: &RunOptions) -> Result<Run, HarnessError> {
    let steps = opts.steps.unwrap_or(scenario.len());
    if steps > scenario.len() {
        return Err(HarnessError::Validation(format!(
            "--steps {steps} exceeds scenario length {}",
            scenario.len()
        )));
    }
    let mut rt = Runtime::for_scenario(scenario);
    let source = RwLock::new(SourceBuilder::empty("source"));
    let mut ms: Vec<Manager> = managers
        .managers
        .iter()
        .map(|spec| Manager::new(spec.name.clone(), spec.view, managers.config.clone(), &source))
        .collect::<Result<_, _>>()?;
    let every: Vec<usize> = managers
        .managers
        .iter()
        .map(|s| opts.trigger_every.unwrap_or(s.trigger_every))
        .collect();
    let mut counters = Counters::default();
    let mut records = Vec::with_capacity(steps);
    for i in 0..steps {
        rt.step(scenario, 1).map_err(|e| match e.step() {
            Some(step) => HarnessError::Scenario {
                step,
                message: e.to_string(),
            },
            None => HarnessError::Validation(e.to_string()),
        })?;
        let pumped = pump_sensors(&rt, &mut source.write().expect("source lock"))?;
        let due: Vec<bool> = every.iter().map(|k| (i + 1) % k == 0).collect();
        let analysed = round(&mut ms, &due, &source, rt.clock(), opts.parallel)?;
        let mut findings: Vec<Finding> = analysed.iter().flat_map(|(_, _, f)| f.clone()).collect();
        let adaptations = if opts.adapt {
            adapt_loop(&mut ms, &source, &mut rt, &mut findings)?
        } else {
            Vec::new()
        };
        for (_, t, _) in &analysed {
            counters.triggers += 1;
            counters.touched += t.report.touched;
            counters.applications_added += t.report.added.len();
            counters.applications_revoked += t.report.revoked.len();
        }
        counters.adaptations += adaptations.len();
        records.push(StepRecord {
            step_index: i,
            clock_ms: rt.clock(),
            pumped_records: pumped.len(),
            manager_triggers: analysed.iter().map(|(_, t, _)| t.manager.clone()).collect(),
            sync_reports: analysed.into_iter().map(|(_, t, _)| t).collect(),
            findings,
            adaptations,
        });
    }
    let all = vec![true; ms.len()];
    let last = round(&mut ms, &all, &source, rt.clock(), false)?;
    let mut final_findings: Vec<Finding> = last.into_iter().flat_map(|(_, _, f)| f).collect();
    if opts.adapt {
        let extra = adapt_loop(&mut ms, &source, &mut rt, &mut final_findings)?;
        counters.adaptations += extra.len();
    }
    let source = source.into_inner().expect("source lock");
    let mut digests = BTreeMap::from([("source".to_string(), digest(&source))]);
    let mut final_consistency = BTreeMap::new();
    for m in &ms {
        digests.insert(m.name().to_string(), digest(m.view()));
        final_consistency.insert(m.name().to_string(), m.session().check_consistency(&source).len());
    }
    let report = RunReport {
        seed: scenario.seed,
        steps_run: steps,
        steps: records,
        final_findings,
        final_consistency,
        digests,
        counters,
    };
    Ok(Run {
        report,
        runtime: rt,
        source,
        managers: ms,
    })
}
