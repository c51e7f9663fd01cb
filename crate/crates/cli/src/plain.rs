//! Human-readable rendering of a JSON report: a short header for `analyze`,
//! then every leaf as `path: value`.

use std::fmt::Write;

use serde_json::Value;

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_flat(v: &Value) -> bool {
    v.as_array()
        .is_some_and(|a| a.iter().all(|x| !x.is_array() && !x.is_object()))
}

fn walk(out: &mut String, path: &str, v: &Value) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(out, &p, x);
            }
        }
        Value::Array(items) if is_flat(v) => {
            let cells: Vec<String> = items.iter().map(scalar).collect();
            let _ = writeln!(out, "{path}: [{}]", cells.join(", "));
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                walk(out, &format!("{path}[{i}]"), x);
            }
        }
        other => {
            let _ = writeln!(out, "{path}: {}", scalar(other));
        }
    }
}

fn header(out: &mut String, r: &Value) {
    let count = |v: &Value| v.as_array().map_or(0, Vec::len);
    let _ = writeln!(
        out,
        "species {}, reactions {}",
        count(&r["network"]["species"]),
        count(&r["network"]["reactions"])
    );
    let _ = writeln!(out, "bad classes: {}", count(&r["badclasses"]));
    let pairs: Vec<String> = r["signcheck"]["ambiguous"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|p| format!("({},{})", scalar(&p[0]), scalar(&p[1])))
                .collect()
        })
        .unwrap_or_default();
    let _ = writeln!(
        out,
        "ambiguous Jacobian entries: {}",
        if pairs.is_empty() { "none".to_string() } else { pairs.join(" ") }
    );
    if let Some(reactions) = r["fixreport"]["result"]["reactions"].as_array() {
        let _ = writeln!(out, "sign-fixed network:");
        for x in reactions {
            let _ = writeln!(out, "  {}", scalar(x));
        }
    }
    if let Some(checks) = r["checks"].as_array() {
        for c in checks {
            let mark = if c["passed"].as_bool() == Some(true) { "ok" } else { "FAILED" };
            let _ = writeln!(out, "check {}: {mark}", scalar(&c["name"]));
        }
    }
    out.push('\n');
}

pub fn render(title: &str, report: &Value) -> String {
    let mut out = String::new();
    if title == "analyze" {
        header(&mut out, report);
    }
    walk(&mut out, "", report);
    out
}
