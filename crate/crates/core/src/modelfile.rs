//! TOML model files.
//!
//! ```toml
//! [model]
//! name = "twocomponent"
//! dim = 2
//! coords = ["r1", "r2"]
//! flow = "X"            # optional, defaults to the field named X
//! base = [0.0, 0.0]     # optional default point
//!
//! [product]
//! c.1.1.1 = "1"         # c^K_{IJ}, 1-based
//! c.2.2.2 = "1"
//!
//! [unit]
//! e = ["1", "1"]
//!
//! [field.X]
//! components = ["1 - exp(-r2)", "1"]
//!
//! [metric]
//! g.1.1 = "exp(2*r2)"
//! g.2.2 = "1"
//!
//! [density.h1]
//! expr = "r2"
//!
//! [data.w]
//! series = [[0.0, 2.0, -1.0], [1.0, 1.0, 0.0]]
//! ```
//!
//! Expressions may be strings or plain numbers. Unknown keys are rejected.

use crate::algebra::FModel;
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use std::path::Path;
use toml::{Table, Value};

fn err(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

fn table<'a>(v: &'a Value, what: &str) -> Result<&'a Table> {
    v.as_table().ok_or_else(|| err(format!("`{what}` must be a table")))
}

fn reject_unknown(t: &Table, allowed: &[&str], what: &str) -> Result<()> {
    for k in t.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(err(format!("unknown key `{k}` in {what}")));
        }
    }
    Ok(())
}

fn expr(v: &Value, what: &str) -> Result<Expr> {
    match v {
        Value::String(s) => parse_expression(s).map_err(|e| err(format!("{what}: {e}"))),
        Value::Integer(i) => Ok(Expr::Const(*i as f64)),
        Value::Float(f) => Ok(Expr::Const(*f)),
        _ => Err(err(format!("{what}: expected an expression string or number"))),
    }
}

fn expr_list(v: &Value, what: &str) -> Result<Vec<Expr>> {
    let a = v.as_array().ok_or_else(|| err(format!("{what}: expected an array")))?;
    a.iter().enumerate().map(|(i, x)| expr(x, &format!("{what}[{}]", i + 1))).collect()
}

fn number(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        _ => Err(err(format!("{what}: expected a number"))),
    }
}

fn numbers(v: &Value, what: &str) -> Result<Vec<f64>> {
    let a = v.as_array().ok_or_else(|| err(format!("{what}: expected an array of numbers")))?;
    a.iter().map(|x| number(x, what)).collect()
}

fn index(key: &str, n: usize, what: &str) -> Result<usize> {
    let i: usize = key.parse().map_err(|_| err(format!("{what}: index `{key}` is not a positive integer")))?;
    if i == 0 || i > n {
        return Err(Error::Dimension(format!("{what}: index {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

/// Walks nested dotted keys `K.I.J...` down to leaf values.
fn leaves<'a>(v: &'a Value, depth: usize, prefix: Vec<&'a str>, out: &mut Vec<(Vec<&'a str>, &'a Value)>) -> Result<()> {
    if depth == 0 {
        out.push((prefix, v));
        return Ok(());
    }
    let t = v
        .as_table()
        .ok_or_else(|| err(format!("entry `{}` needs {depth} more indices", prefix.join("."))))?;
    for (k, sub) in t {
        let mut p = prefix.clone();
        p.push(k);
        leaves(sub, depth - 1, p, out)?;
    }
    Ok(())
}

/// Parses model-file text.
pub fn parse_model_str(text: &str) -> Result<FModel> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| err(format!("TOML: {e}")))?;
    reject_unknown(&root, &["model", "product", "unit", "field", "metric", "density", "data"], "file")?;
    let head = table(root.get("model").ok_or_else(|| err("missing [model] section"))?, "model")?;
    reject_unknown(head, &["name", "dim", "coords", "flow", "base"], "[model]")?;
    let name = head.get("name").and_then(Value::as_str).unwrap_or("model");
    let coords: Vec<String> = head
        .get("coords")
        .and_then(Value::as_array)
        .ok_or_else(|| err("[model] needs `coords = [...]`"))?
        .iter()
        .map(|c| c.as_str().map(str::to_string).ok_or_else(|| err("coordinate names must be strings")))
        .collect::<Result<_>>()?;
    let n = coords.len();
    if let Some(d) = head.get("dim") {
        let d = d.as_integer().ok_or_else(|| err("`dim` must be an integer"))?;
        if d != n as i64 {
            return Err(Error::Dimension(format!("dim = {d} but {n} coordinates listed")));
        }
    }
    let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
    let mut m = FModel::new(name, &refs);
    if let Some(f) = head.get("flow") {
        m.flow = Some(f.as_str().ok_or_else(|| err("`flow` must be a field name"))?.to_string());
    }
    if let Some(b) = head.get("base") {
        m.base = numbers(b, "base")?;
    }

    if let Some(p) = root.get("product") {
        let p = table(p, "product")?;
        reject_unknown(p, &["c"], "[product]")?;
        if let Some(c) = p.get("c") {
            let mut out = Vec::new();
            leaves(c, 3, vec!["c"], &mut out)?;
            for (key, v) in out {
                let what = key.join(".");
                let k = index(key[1], n, &what)?;
                let i = index(key[2], n, &what)?;
                let j = index(key[3], n, &what)?;
                m.set_c(k, i, j, expr(v, &what)?);
            }
        }
    }

    let unit = table(root.get("unit").ok_or_else(|| err("missing [unit] section"))?, "unit")?;
    reject_unknown(unit, &["e"], "[unit]")?;
    m.e = expr_list(unit.get("e").ok_or_else(|| err("[unit] needs `e = [...]`"))?, "e")?;

    if let Some(fs) = root.get("field") {
        for (fname, f) in table(fs, "field")? {
            let f = table(f, &format!("field.{fname}"))?;
            reject_unknown(f, &["components"], &format!("[field.{fname}]"))?;
            let comps = f.get("components").ok_or_else(|| err(format!("[field.{fname}] needs `components`")))?;
            m.add_field(fname, expr_list(comps, &format!("field.{fname}"))?);
        }
    }

    if let Some(g) = root.get("metric") {
        let g = table(g, "metric")?;
        reject_unknown(g, &["g"], "[metric]")?;
        let mut rows = vec![vec![Expr::Const(0.0); n]; n];
        let mut seen = vec![vec![false; n]; n];
        if let Some(gv) = g.get("g") {
            let mut out = Vec::new();
            leaves(gv, 2, vec!["g"], &mut out)?;
            for (key, v) in out {
                let what = key.join(".");
                let i = index(key[1], n, &what)?;
                let j = index(key[2], n, &what)?;
                let e = expr(v, &what)?;
                if seen[j][i] && i != j && rows[j][i] != e {
                    return Err(err(format!("{what} conflicts with g.{}.{}", j + 1, i + 1)));
                }
                seen[i][j] = true;
                rows[i][j] = e.clone();
                if !seen[j][i] {
                    rows[j][i] = e;
                }
            }
        }
        m.metric = Some(rows);
    }

    if let Some(ds) = root.get("density") {
        for (dname, d) in table(ds, "density")? {
            let d = table(d, &format!("density.{dname}"))?;
            reject_unknown(d, &["expr"], &format!("[density.{dname}]"))?;
            let e = d.get("expr").ok_or_else(|| err(format!("[density.{dname}] needs `expr`")))?;
            m.densities.insert(dname.clone(), expr(e, &format!("density.{dname}"))?);
        }
    }

    if let Some(ds) = root.get("data") {
        for (dname, d) in table(ds, "data")? {
            let d = table(d, &format!("data.{dname}"))?;
            reject_unknown(d, &["series"], &format!("[data.{dname}]"))?;
            let s = d
                .get("series")
                .and_then(Value::as_array)
                .ok_or_else(|| err(format!("[data.{dname}] needs `series = [[...], ...]`")))?;
            let comps = s.iter().map(|c| numbers(c, &format!("data.{dname}"))).collect::<Result<_>>()?;
            m.data.insert(dname.clone(), comps);
        }
    }

    m.validate()?;
    Ok(m)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_model_str(&text).map_err(|e| match e {
        Error::Model(s) => Error::Model(format!("{}: {s}", path.display())),
        other => other,
    })
}

fn quote(e: &Expr) -> String {
    Value::String(e.to_string()).to_string()
}

fn float(x: f64) -> String {
    Value::Float(x).to_string()
}

/// Serializes a model in the file format; `parse_model_str` reads it back.
pub fn model_to_toml(m: &FModel) -> String {
    let mut s = String::new();
    let list = |xs: Vec<String>| format!("[{}]", xs.join(", "));
    s += "[model]\n";
    s += &format!("name = {}\n", Value::String(m.name.clone()));
    s += &format!("dim = {}\n", m.dim());
    s += &format!("coords = {}\n", list(m.coords.iter().map(|c| Value::String(c.clone()).to_string()).collect()));
    if let Some(f) = &m.flow {
        s += &format!("flow = {}\n", Value::String(f.clone()));
    }
    s += &format!("base = {}\n", list(m.base.iter().map(|&x| float(x)).collect()));
    s += "\n[product]\n";
    for (&(k, i, j), e) in &m.c {
        s += &format!("c.{}.{}.{} = {}\n", k + 1, i + 1, j + 1, quote(e));
    }
    s += "\n[unit]\n";
    s += &format!("e = {}\n", list(m.e.iter().map(quote).collect()));
    for (name, f) in &m.fields {
        s += &format!("\n[field.{name}]\ncomponents = {}\n", list(f.iter().map(quote).collect()));
    }
    if let Some(g) = &m.metric {
        s += "\n[metric]\n";
        for (i, row) in g.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    s += &format!("g.{}.{} = {}\n", i + 1, j + 1, quote(e));
                }
            }
        }
    }
    for (name, h) in &m.densities {
        s += &format!("\n[density.{name}]\nexpr = {}\n", quote(h));
    }
    for (name, d) in &m.data {
        let rows: Vec<String> = d.iter().map(|r| list(r.iter().map(|&x| float(x)).collect())).collect();
        s += &format!("\n[data.{name}]\nseries = {}\n", list(rows));
    }
    s
}
