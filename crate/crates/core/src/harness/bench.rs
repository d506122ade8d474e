//! Incremental versus batch cost, measured in touched elements.

use serde::Serialize;

use super::HarnessError;
use crate::model::{ElementId, Model};
use crate::runtime::SourceBuilder;
use crate::tgg::{transform_forward, SyncSession};
use crate::views::{catalog, ViewKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    pub n: usize,
    pub touched_incremental: usize,
    pub touched_batch: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchTable {
    pub rules: String,
    pub rows: Vec<BenchRow>,
    /// Same incremental count for every size.
    pub incremental_constant: bool,
    /// Batch count is at least `n` and strictly increasing in `n`.
    pub batch_linear: bool,
}

impl BenchTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,touchedIncremental,touchedBatch,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:.6}\n", r.n, r.touched_incremental, r.touched_batch, r.ratio));
        }
        out
    }
}

/// One container, one module and `n` beans in a chain: bean `i` provides
/// `I{i}` and, for `i > 0`, requires `I{i-1}` wired to bean `i - 1`.
pub fn chain_source(n: usize) -> (Model, ElementId, Option<ElementId>) {
    let mut m = SourceBuilder::empty("bench");
    let mut b = SourceBuilder::new(&mut m);
    let k = b.container("server").expect("fresh model");
    let module = b.module(k, "chain").expect("fresh model");
    let mut last = None;
    for i in 0..n {
        last = Some(add_link(&mut b, module, i, last).expect("fresh model"));
    }
    (m, module, last)
}

fn add_link(
    b: &mut SourceBuilder<'_>,
    module: ElementId,
    i: usize,
    prev: Option<ElementId>,
) -> Result<ElementId, crate::model::ModelError> {
    let bean = b.session_bean(module, &format!("bean{i}"))?;
    b.provides(bean, &format!("I{i}"))?;
    if let Some(p) = prev {
        let need = b.requires(bean, &format!("I{}", i - 1))?;
        b.wire(need, p)?;
    }
    Ok(bean)
}

/// For each size: append a single linked bean to a chain of `n`, then
/// compare the incremental sync of that change with a batch transform of
/// the resulting model.
pub fn bench(sizes: &[usize], view: ViewKind) -> Result<BenchTable, HarnessError> {
    let rules = catalog().rules(view).clone();
    let mut rows = Vec::new();
    for &n in sizes {
        let (mut source, module, last) = chain_source(n);
        let (mut session, _) = SyncSession::new(rules.clone(), &source)?;
        add_link(&mut SourceBuilder::new(&mut source), module, n, last)?;
        let changes = source.snapshot(session.source_cursor())?;
        let inc = session.sync_forward(&source, &changes)?;
        let (_, _, batch) = transform_forward(&source, &rules)?;
        rows.push(BenchRow {
            n,
            touched_incremental: inc.touched,
            touched_batch: batch.touched,
            ratio: inc.touched as f64 / batch.touched.max(1) as f64,
        });
    }
    let incremental_constant = rows.windows(2).all(|w| w[0].touched_incremental == w[1].touched_incremental);
    let batch_linear = rows.iter().all(|r| r.touched_batch >= r.n)
        && rows.windows(2).all(|w| w[1].n <= w[0].n || w[1].touched_batch > w[0].touched_batch);
    Ok(BenchTable {
        rules: rules.name.clone(),
        rows,
        incremental_constant,
        batch_linear,
    })
}
