//! Machine-readable command reports and their comparison.
//!
//! Every command emits `{schema_version, command, inputs, flags, defects,
//! outputs, provenance}`. Floats are decimal strings with 17 significant
//! digits, so reports compare exactly as text when nothing changed and
//! numerically (see [`numeric_mismatches`]) when floating-point noise is
//! expected.

use evosym::operations::Classification;
use evosym::tsqt::TsReport;
use evosym::{ComplexMatrix, Tolerances};
use serde_json::{json, Map, Value};

use crate::spec_file::{format_f64, raw_matrix};

pub const SCHEMA_VERSION: &str = "1";

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::String(format_f64(x))
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn matrix(m: &ComplexMatrix) -> Value {
    serde_json::to_value(raw_matrix(m)).expect("plain data serializes")
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub inputs: Map<String, Value>,
    pub flags: Map<String, Value>,
    pub defects: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub error: Option<Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            inputs: Map::new(),
            flags: Map::new(),
            defects: Map::new(),
            outputs: Map::new(),
            error: None,
        }
    }

    pub fn input(&mut self, k: &str, v: impl Into<Value>) -> &mut Self {
        self.inputs.insert(k.into(), v.into());
        self
    }

    pub fn flag(&mut self, k: &str, v: bool) -> &mut Self {
        self.flags.insert(k.into(), Value::Bool(v));
        self
    }

    pub fn defect(&mut self, k: &str, v: f64) -> &mut Self {
        self.defects.insert(k.into(), num(v));
        self
    }

    pub fn output(&mut self, k: &str, v: impl Into<Value>) -> &mut Self {
        self.outputs.insert(k.into(), v.into());
        self
    }

    pub fn classification(&mut self, c: &Classification) -> &mut Self {
        self.flag("completely_positive", c.cp)
            .flag("trace_nonincreasing", c.trace_nonincreasing)
            .flag("trace_preserving", c.trace_preserving)
            .flag("bistochastic", c.bistochastic)
            .flag("unitary", c.unitary)
            .flag("time_symmetric", c.time_symmetric)
            .flag("ts_channel", c.cp && c.ts.is_ts_channel)
            .defect("min_choi_eigenvalue", c.min_choi_eigenvalue)
            .defect("tni_excess", c.tni_excess)
            .defect("tp_defect", c.tp_defect)
            .defect("unital_defect", c.unital_defect);
        self.ts(&c.ts)
    }

    pub fn ts(&mut self, t: &TsReport) -> &mut Self {
        self.defect("ts_defect_in", t.defect_in).defect("ts_defect_out", t.defect_out)
    }

    pub fn to_json(&self, tol: &Tolerances) -> Value {
        let mut v = json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "inputs": self.inputs,
            "flags": self.flags,
            "defects": self.defects,
            "outputs": self.outputs,
            "provenance": {
                "tool": "evosym",
                "version": env!("CARGO_PKG_VERSION"),
                "tolerances": {
                    "psd_tol": num(tol.psd_tol),
                    "hermiticity_tol": num(tol.hermiticity_tol),
                    "support_cutoff": num(tol.support_cutoff),
                    "equality_tol": num(tol.equality_tol),
                    "rank_gap": num(tol.rank_gap),
                },
            },
        });
        if let Some(e) = &self.error {
            v["error"] = e.clone();
        }
        v
    }

    /// Short human-readable rendering: one `key: value` line per field.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for (title, map) in [
            ("inputs", &self.inputs),
            ("flags", &self.flags),
            ("defects", &self.defects),
            ("outputs", &self.outputs),
        ] {
            if map.is_empty() {
                continue;
            }
            out.push_str(&format!("  {title}:\n"));
            for (k, v) in map {
                out.push_str(&format!("    {k}: {}\n", render(v)));
            }
        }
        if let Some(e) = &self.error {
            out.push_str(&format!("  error: {}\n", render(e)));
        }
        out
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => match s.parse::<f64>() {
            Ok(x) if s.contains('e') => format!("{x:.6e}"),
            _ => s.clone(),
        },
        Value::Array(items) if items.len() == 2 && items.iter().all(|x| x.is_string()) => {
            format!("({}, {})", render(&items[0]), render(&items[1]))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(render).collect::<Vec<_>>().join(", ")),
        Value::Object(m) => format!(
            "{{{}}}",
            m.iter().map(|(k, v)| format!("{k}: {}", render(v))).collect::<Vec<_>>().join(", ")
        ),
        other => other.to_string(),
    }
}

/// Paths where `actual` differs from `expected`. Strings that both parse as
/// numbers compare within `tol` (absolute, scaled by magnitude above 1);
/// everything else compares exactly. Keys named in `ignore` are skipped.
pub fn numeric_mismatches(expected: &Value, actual: &Value, tol: f64, ignore: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    walk(expected, actual, tol, ignore, "", &mut out);
    out
}

fn walk(e: &Value, a: &Value, tol: f64, ignore: &[&str], path: &str, out: &mut Vec<String>) {
    match (e, a) {
        (Value::Object(me), Value::Object(ma)) => {
            let keys: std::collections::BTreeSet<&String> = me.keys().chain(ma.keys()).collect();
            for k in keys {
                if ignore.contains(&k.as_str()) {
                    continue;
                }
                let p = format!("{path}/{k}");
                match (me.get(k), ma.get(k)) {
                    (Some(x), Some(y)) => walk(x, y, tol, ignore, &p, out),
                    _ => out.push(format!("{p}: present on one side only")),
                }
            }
        }
        (Value::Array(ve), Value::Array(va)) => {
            if ve.len() != va.len() {
                out.push(format!("{path}: length {} vs {}", ve.len(), va.len()));
                return;
            }
            for (i, (x, y)) in ve.iter().zip(va).enumerate() {
                walk(x, y, tol, ignore, &format!("{path}/{i}"), out);
            }
        }
        (Value::String(se), Value::String(sa)) => {
            if se == sa {
                return;
            }
            match (se.parse::<f64>(), sa.parse::<f64>()) {
                (Ok(x), Ok(y)) if (x - y).abs() <= tol * x.abs().max(1.0) => {}
                _ => out.push(format!("{path}: `{se}` vs `{sa}`")),
            }
        }
        _ if e == a => {}
        _ => out.push(format!("{path}: {e} vs {a}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_compare_within_tolerance() {
        let a = json!({"x": num(1.0), "y": [num(2.0), "tag"]});
        let b = json!({"x": num(1.0 + 1e-12), "y": [num(2.0), "tag"]});
        assert!(numeric_mismatches(&a, &b, 1e-9, &[]).is_empty());
        let c = json!({"x": num(1.1), "y": [num(2.0), "other"]});
        assert_eq!(numeric_mismatches(&a, &c, 1e-9, &[]).len(), 2);
        assert!(numeric_mismatches(&a, &c, 1e-9, &["x", "y"]).is_empty());
    }

    #[test]
    fn non_finite_values_are_tagged() {
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(num(0.5), Value::String("5.0000000000000000e-1".into()));
    }
}
