//! Rendering of payloads as JSON or CSV, with the manifest attached.

use gravcorr::dynamics::write_spectra_csv;
use gravcorr::montecarlo::TrialRecord;
use serde_json::{Map, Value};

use crate::args::Format;
use crate::commands::{Payload, Table};
use crate::manifest::RunManifest;

fn document(body: Map<String, Value>, manifest: &RunManifest) -> String {
    let mut doc = body;
    let mut m = serde_json::to_value(manifest).expect("manifest serialises");
    let echo = m
        .as_object_mut()
        .and_then(|o| o.remove("params_echo"))
        .expect("manifest has an echo");
    doc.insert("params_echo".into(), echo);
    doc.insert("manifest".into(), m);
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("document serialises");
    s.push('\n');
    s
}

fn comments(manifest: &RunManifest) -> String {
    manifest
        .comment_lines()
        .iter()
        .map(|l| format!("# {l}\n"))
        .collect()
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// Dotted-key flattening of nested objects and arrays.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        other => out.push((prefix.to_string(), scalar_text(other).unwrap_or_default())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn report_csv(body: &Map<String, Value>, manifest: &RunManifest) -> String {
    let mut pairs = Vec::new();
    flatten("", &Value::Object(body.clone()), &mut pairs);
    let mut s = comments(manifest);
    s.push_str("key,value\n");
    for (k, v) in pairs {
        s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
    }
    s
}

fn table_csv(t: &Table, manifest: &RunManifest) -> String {
    let mut head = comments(manifest);
    let mut pairs = Vec::new();
    flatten("", &Value::Object(t.summary.clone()), &mut pairs);
    for (k, v) in pairs {
        head.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.columns).expect("in-memory write");
    for row in &t.rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .expect("in-memory write");
    }
    head + &String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn table_json(t: &Table, manifest: &RunManifest) -> String {
    let mut body = t.summary.clone();
    body.insert(
        "columns".into(),
        serde_json::to_value(&t.columns).expect("strings"),
    );
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            Value::Array(
                r.iter()
                    .map(|&x| serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number))
                    .collect(),
            )
        })
        .collect();
    body.insert("rows".into(), Value::Array(rows));
    document(body, manifest)
}

/// Main output text of a command.
pub fn render(payload: &Payload, format: Format, manifest: &RunManifest) -> String {
    match (payload, format) {
        (Payload::Report(body), Format::Json)
        | (Payload::Ensemble { report: body, .. }, Format::Json) => {
            document(body.clone(), manifest)
        }
        (Payload::Report(body), Format::Csv)
        | (Payload::Ensemble { report: body, .. }, Format::Csv) => report_csv(body, manifest),
        (Payload::Table(t), Format::Csv) => table_csv(t, manifest),
        (Payload::Table(t), Format::Json) => table_json(t, manifest),
        (Payload::Spectra { grid, sys }, Format::Csv) => {
            let mut buf = Vec::new();
            write_spectra_csv(&mut buf, grid, sys, &manifest.comment_lines())
                .expect("in-memory write");
            String::from_utf8(buf).expect("utf-8")
        }
        (Payload::Spectra { grid, sys }, Format::Json) => {
            let s = gravcorr::dynamics::output_spectra(grid, sys);
            let two_pi = 2.0 * std::f64::consts::PI;
            let t = Table {
                columns: ["freq_hz", "s_xx", "s_nn", "re_s_xy", "im_s_xy", "s_yy"]
                    .map(String::from)
                    .to_vec(),
                rows: (0..s.len())
                    .map(|i| {
                        vec![
                            s.grid[i] / two_pi,
                            s.s_xx[i],
                            s.s_nn[i],
                            s.s_xy[i].re,
                            s.s_xy[i].im,
                            s.s_yy[i],
                        ]
                    })
                    .collect(),
                summary: Map::new(),
            };
            table_json(&t, manifest)
        }
    }
}

/// Per-trial CSV `trial, tau_s, c_xy`.
pub fn trials_csv(trials: &[TrialRecord], manifest: &RunManifest) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "tau_s", "c_xy"])
        .expect("in-memory write");
    for t in trials {
        w.serialize((t.trial, t.tau_s, t.c_xy))
            .expect("in-memory write");
    }
    comments(manifest) + &String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
