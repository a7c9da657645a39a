//! Aligned-column text rendering of reports.

use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;

use crate::experiment::ExperimentReport;
use crate::suite::SuiteReport;

/// Flattens nested JSON into `(dotted.key, value)` rows.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), item, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if !n.is_i64() && !n.is_u64() => format!("{f:.9}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn table(rows: &[(String, String)], indent: &str, out: &mut String) {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    for (k, v) in rows {
        let pad = width - k.chars().count();
        let _ = writeln!(out, "{indent}{k}{}  {v}", " ".repeat(pad));
    }
}

fn section<T: Serialize>(title: &str, value: &T, out: &mut String) {
    let mut rows = Vec::new();
    flatten("", &serde_json::to_value(value).expect("reports serialize"), &mut rows);
    let _ = writeln!(out, "{title}");
    table(&rows, "  ", out);
}

pub fn experiment_text(r: &ExperimentReport) -> String {
    let mut out = String::new();
    if let Some(name) = &r.name {
        let _ = writeln!(out, "experiment {name}");
    }
    section("caps", &r.caps, &mut out);
    if let Some(s) = &r.source {
        section("source", s, &mut out);
    }
    if let Some(s) = &r.system {
        section("system", s, &mut out);
    }
    for a in &r.analyses {
        let v = serde_json::to_value(a).expect("reports serialize");
        let kind = v["kind"].as_str().unwrap_or("analysis").to_string();
        section(&format!("analysis {kind}"), &v, &mut out);
    }
    let _ = writeln!(out, "checks");
    let rows: Vec<(String, String)> = r
        .checks
        .iter()
        .map(|c| {
            (
                c.name.clone(),
                format!("{}  {}", scalar(&serde_json::to_value(c.status).expect("serializes")), c.detail),
            )
        })
        .collect();
    table(&rows, "  ", &mut out);
    if let Some(t) = &r.timings {
        let rows: Vec<(String, String)> = t
            .iter()
            .map(|t| (t.analysis.clone(), format!("{:.3}s", t.seconds)))
            .collect();
        let _ = writeln!(out, "timings");
        table(&rows, "  ", &mut out);
    }
    let _ = writeln!(out, "result {}", if r.passed { "PASS" } else { "FAIL" });
    out
}

pub fn suite_text(r: &SuiteReport) -> String {
    let mut out = String::new();
    let name = scalar(&serde_json::to_value(r.suite).expect("serializes"));
    let _ = writeln!(
        out,
        "suite {name}  seed {}  instances {}  passed {}  failed {}",
        r.seed, r.instances, r.passed, r.failed
    );
    let rows: Vec<(String, String)> = r
        .results
        .iter()
        .map(|i| {
            let mut line = format!("{}  {}", if i.passed { "pass" } else { "FAIL" }, i.values);
            if let Some(c) = &i.counterexample {
                let _ = write!(line, "  counterexample {c}");
            }
            (i.index.to_string(), line)
        })
        .collect();
    table(&rows, "  ", &mut out);
    out
}

/// Any serializable report as one aligned section.
pub fn value_text<T: Serialize>(title: &str, value: &T) -> String {
    let mut out = String::new();
    section(title, value, &mut out);
    out
}
