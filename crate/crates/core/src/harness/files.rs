//! File-based one-shot commands: transform and consistency check.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{validate, MetaModel, MetaModelError, Model, ModelError};
use crate::tgg::{
    check_consistency, transform_backward, transform_forward, ConsistencyReport, CorrespondenceModel, Direction,
    RuleError, RuleSet, SyncReport,
};

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))
}

fn load_meta(path: &Path) -> Result<Arc<MetaModel>, HarnessError> {
    MetaModel::from_json(&read(path)?).map(Arc::new).map_err(|e| match e {
        MetaModelError::Parse(e) => HarnessError::Parse(format!("{}: {e}", path.display())),
        e => HarnessError::Validation(format!("{}: {e}", path.display())),
    })
}

fn load_rules(path: &Path, src: Arc<MetaModel>, tgt: Arc<MetaModel>) -> Result<RuleSet, HarnessError> {
    RuleSet::from_json(&read(path)?, src, tgt).map_err(|e| match e {
        RuleError::Parse(e) => HarnessError::Parse(format!("{}: {e}", path.display())),
        e => HarnessError::Validation(format!("{}: {e}", path.display())),
    })
}

fn load_model(path: &Path, meta: Arc<MetaModel>) -> Result<Model, HarnessError> {
    let id = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
    let model = Model::from_json(id, meta, &read(path)?).map_err(|e| match e {
        ModelError::Parse(e) => HarnessError::Parse(format!("{}: {e}", path.display())),
        e => HarnessError::Validation(format!("{}: {e}", path.display())),
    })?;
    let report = validate(&model);
    if !report.is_empty() {
        return Err(HarnessError::Validation(format!(
            "{}: {} conformance finding(s), first: {:?}",
            path.display(),
            report.len(),
            report.findings[0]
        )));
    }
    Ok(model)
}

fn load_corr(path: &Path, rules: &RuleSet) -> Result<CorrespondenceModel, HarnessError> {
    CorrespondenceModel::from_json(&read(path)?, rules).map_err(|e| match e {
        RuleError::Parse(e) => HarnessError::Parse(format!("{}: {e}", path.display())),
        e => HarnessError::Validation(format!("{}: {e}", path.display())),
    })
}

#[derive(Clone, Debug)]
pub struct TransformArgs {
    pub meta_src: PathBuf,
    pub meta_tgt: PathBuf,
    pub rules: PathBuf,
    pub model: PathBuf,
    pub direction: Direction,
    pub out: PathBuf,
}

/// Paths of one synchronised triple, written next to a transform's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SessionFile {
    pub meta_src: PathBuf,
    pub meta_tgt: PathBuf,
    pub rules: PathBuf,
    pub source: PathBuf,
    pub target: PathBuf,
    pub corr: PathBuf,
}

pub struct TransformOutcome {
    pub report: SyncReport,
    pub out: PathBuf,
    pub corr: PathBuf,
    pub session: PathBuf,
}

/// `<out>` with its extension replaced by `suffix`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Runs one transform and writes the produced model, its correspondence
/// model (`<stem>.corr.json`) and a session file (`<stem>.session.json`).
/// Nothing is written on error.
pub fn transform(args: &TransformArgs) -> Result<TransformOutcome, HarnessError> {
    let src = load_meta(&args.meta_src)?;
    let tgt = load_meta(&args.meta_tgt)?;
    let rules = load_rules(&args.rules, src.clone(), tgt.clone())?;
    let (input_meta, run): (_, fn(&Model, &RuleSet) -> _) = match args.direction {
        Direction::Forward => (src, transform_forward),
        Direction::Backward => (tgt, transform_backward),
    };
    let input = load_model(&args.model, input_meta)?;
    let (output, corr, report) = run(&input, &rules)?;
    let corr_path = sibling(&args.out, "corr.json");
    let session_path = sibling(&args.out, "session.json");
    let (source, target) = match args.direction {
        Direction::Forward => (&args.model, &args.out),
        Direction::Backward => (&args.out, &args.model),
    };
    let session = SessionFile {
        meta_src: absolute(&args.meta_src),
        meta_tgt: absolute(&args.meta_tgt),
        rules: absolute(&args.rules),
        source: absolute(source),
        target: absolute(target),
        corr: absolute(&corr_path),
    };
    write(&args.out, &output.to_json())?;
    write(&corr_path, &corr.to_json(&rules))?;
    write(
        &session_path,
        &serde_json::to_string_pretty(&session).expect("session serializes"),
    )?;
    Ok(TransformOutcome {
        report,
        out: args.out.clone(),
        corr: corr_path,
        session: session_path,
    })
}

/// Loads the triple named by a session file and checks it.
pub fn check_session(path: &Path) -> Result<ConsistencyReport, HarnessError> {
    let session: SessionFile = serde_json::from_str(&read(path)?)
        .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
    let src = load_meta(&session.meta_src)?;
    let tgt = load_meta(&session.meta_tgt)?;
    let rules = load_rules(&session.rules, src.clone(), tgt.clone())?;
    let source = load_model(&session.source, src)?;
    let target = load_model(&session.target, tgt)?;
    let corr = load_corr(&session.corr, &rules)?;
    Ok(check_consistency(&rules, &source, &target, &corr))
}
