//! CSV tables with a commented header holding the resolved spec.

use std::io::{self, Write};
use std::path::Path;

use evset_core::experiment::{ExperimentSpec, FindAllRow, ModelReport, RatePoint, ScalingReport, SweepPoint};
use serde::Serialize;

/// Kebab-case name of a unit enum variant, as it appears in configs.
fn tag<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

pub struct Table {
    pub notes: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

const RATE_COLUMNS: [&str; 9] = [
    "N",
    "trials",
    "eviction_rate",
    "reduction_rate",
    "mean_accesses",
    "mean_tests",
    "fail_not_evicting",
    "fail_inconsistent",
    "fail_budget",
];

fn rate_cells(p: &RatePoint) -> Vec<String> {
    vec![
        p.n.to_string(),
        p.trials.to_string(),
        p.eviction_rate.to_string(),
        p.reduction_rate.to_string(),
        p.mean_accesses.to_string(),
        p.mean_tests.to_string(),
        p.fail_not_evicting.to_string(),
        p.fail_inconsistent.to_string(),
        p.fail_budget.to_string(),
    ]
}

const VERIFIED: &str = "reduction_rate counts only results the oracle verified as a congruent set of exactly `a` addresses";

pub fn rates_table(points: &[RatePoint]) -> Table {
    Table {
        notes: vec![VERIFIED.into()],
        columns: RATE_COLUMNS.to_vec(),
        rows: points.iter().map(rate_cells).collect(),
    }
}

pub fn sweep_table(points: &[SweepPoint]) -> Table {
    let mut columns = vec!["set_index", "role"];
    columns.extend(RATE_COLUMNS);
    let rows = points
        .iter()
        .map(|s| {
            let mut r = vec![s.set_index.to_string(), tag(&s.role)];
            r.extend(rate_cells(&s.point));
            r
        })
        .collect();
    Table { notes: vec![VERIFIED.into()], columns, rows }
}

pub fn scaling_table(report: &ScalingReport) -> Table {
    let notes = report.exponents.iter().map(|(alg, e)| format!("exponent {} = {e}", tag(alg))).collect();
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                tag(&r.algorithm),
                r.trials.to_string(),
                r.mean_accesses.to_string(),
                r.mean_tests.to_string(),
                r.success_rate.to_string(),
            ]
        })
        .collect();
    Table {
        notes,
        columns: vec!["N", "algorithm", "trials", "mean_accesses", "mean_tests", "success_rate"],
        rows,
    }
}

/// Long format: one value per row so each figure is a filter on `table`.
pub fn model_table(report: &ModelReport) -> Table {
    let mut rows = Vec::new();
    for p in &report.probability {
        rows.push(vec!["probability".into(), p.n.to_string(), "specific".into(), p.specific.to_string()]);
        rows.push(vec!["probability".into(), p.n.to_string(), "arbitrary".into(), p.arbitrary.to_string()]);
    }
    for c in &report.cost {
        for (name, v) in report.adversaries.iter().zip(&c.costs) {
            rows.push(vec!["cost".into(), c.n.to_string(), name.clone(), v.to_string()]);
        }
    }
    for o in &report.optimal {
        rows.push(vec!["optimal".into(), o.adversary.clone(), "baseline".into(), o.baseline.to_string()]);
        rows.push(vec!["optimal".into(), o.adversary.clone(), "group-testing".into(), o.group_testing.to_string()]);
        rows.push(vec!["optimal".into(), o.adversary.clone(), "collision_prob".into(), o.collision_prob.to_string()]);
    }
    Table {
        notes: vec!["table: probability (key N), cost (key N, expected search accesses), optimal (key adversary)".into()],
        columns: vec!["table", "key", "series", "value"],
        rows,
    }
}

pub fn find_all_table(rows: &[FindAllRow]) -> Table {
    Table {
        notes: vec!["verified_sets and overflowing_classes come from the oracle".into()],
        columns: vec![
            "pool_size",
            "trial",
            "sets_found",
            "overflowing_classes",
            "verified_sets",
            "distinct_classes",
            "accesses",
            "tests",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.pool_size.to_string(),
                    r.trial.to_string(),
                    r.sets_found.to_string(),
                    r.overflowing_classes.to_string(),
                    r.verified_sets.to_string(),
                    r.distinct_classes.to_string(),
                    r.accesses.to_string(),
                    r.tests.to_string(),
                ]
            })
            .collect(),
    }
}

/// Renders the header block and the CSV body.
pub fn render(command: &str, spec: &ExperimentSpec, table: &Table) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# evset {command}")?;
    writeln!(out, "# seed = {}", spec.run.seed)?;
    for n in &table.notes {
        writeln!(out, "# {n}")?;
    }
    writeln!(out, "# resolved spec:")?;
    let resolved = toml::to_string(spec).map_err(|e| io::Error::other(e.to_string()))?;
    for line in resolved.lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "#   {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(&table.columns)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

/// The library result next to the spec that produced it.
pub fn render_json<T: Serialize>(command: &str, spec: &ExperimentSpec, result: &T) -> io::Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Mirror<'a, T> {
        command: &'a str,
        spec: &'a ExperimentSpec,
        result: &'a T,
    }
    let mut v = serde_json::to_vec_pretty(&Mirror { command, spec, result }).map_err(io::Error::other)?;
    v.push(b'\n');
    Ok(v)
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => io::stdout().lock().write_all(bytes),
    }
}
