//! Residual reports emitted by every check.

use serde_json::{json, Map, Number, Value};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportItem {
    pub name: String,
    pub residual: f64,
}

/// Named residuals with a verdict against a tolerance.
///
/// The verdict is never stored: it is always `max residual <= tolerance`,
/// with NaN residuals failing.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub check: String,
    pub items: Vec<ReportItem>,
    pub point: Vec<f64>,
    pub order: usize,
    pub tolerance: f64,
    pub convention_notes: Vec<String>,
}

impl Report {
    pub fn new(check: &str, point: Vec<f64>, order: usize, tolerance: f64) -> Self {
        Report {
            check: check.to_string(),
            items: Vec::new(),
            point,
            order,
            tolerance,
            convention_notes: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, residual: f64) {
        self.items.push(ReportItem { name: name.into(), residual });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.convention_notes.push(note.into());
    }

    pub fn max_residual(&self) -> f64 {
        self.items.iter().fold(0.0, |m, it| {
            if it.residual.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(it.residual)
            }
        })
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.items.iter().find(|it| it.name == name).map(|it| it.residual)
    }

    pub fn passed(&self) -> bool {
        let m = self.max_residual();
        !m.is_nan() && m <= self.tolerance
    }

    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .items
            .iter()
            .map(|it| json!({ "name": it.name, "residual": num17(it.residual) }))
            .collect();
        let mut m = Map::new();
        m.insert("check".into(), Value::String(self.check.clone()));
        m.insert("items".into(), Value::Array(items));
        m.insert("verdict".into(), Value::String(if self.passed() { "pass" } else { "fail" }.into()));
        m.insert("point".into(), Value::Array(self.point.iter().map(|x| num17(*x)).collect()));
        m.insert("order".into(), Value::from(self.order));
        m.insert("tolerance".into(), num17(self.tolerance));
        m.insert(
            "convention_notes".into(),
            Value::Array(self.convention_notes.iter().cloned().map(Value::String).collect()),
        );
        Value::Object(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{}: {} (max residual {}, tolerance {})\n",
            self.check,
            if self.passed() { "PASS" } else { "FAIL" },
            fmt17(self.max_residual()),
            fmt17(self.tolerance)
        );
        for it in &self.items {
            s.push_str(&format!("  {:<40} {}\n", it.name, fmt17(it.residual)));
        }
        for n in &self.convention_notes {
            s.push_str(&format!("  note: {n}\n"));
        }
        s
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let verdict = if self.passed() { "pass" } else { "fail" };
        self.items
            .iter()
            .map(|it| format!("{},{},{},{}", self.check, csv_field(&it.name), fmt17(it.residual), verdict))
            .collect()
    }
}

/// A real printed with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// JSON number with 17 significant digits; non-finite values become `null`.
pub fn num17(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&fmt17(x)).expect("formatted float is valid JSON"))
}

pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_max_residual() {
        let mut r = Report::new("demo", vec![0.5], 2, 1e-10);
        r.push("a", 1e-12);
        assert!(r.passed());
        r.push("b", 2e-10);
        assert!(!r.passed());
        r.push("c", f64::NAN);
        assert!(r.max_residual().is_nan() && !r.passed());
    }

    #[test]
    fn json_schema_keys() {
        let mut r = Report::new("demo", vec![0.1, 0.2], 1, 1e-9);
        r.push("x", 0.25);
        r.note("convention");
        let j = r.to_json();
        let keys: Vec<&str> = j.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["check", "items", "verdict", "point", "order", "tolerance", "convention_notes"]);
        assert_eq!(j["verdict"], "fail");
        assert_eq!(j["items"][0]["name"], "x");
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(num17(f64::INFINITY), Value::Null);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
