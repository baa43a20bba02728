//! Command-line front end. Exit codes: 0 when every verdict passes, 2 when
//! any verdict fails, 1 on usage or evaluation errors.

use crate::algebra::{builtin_example, check_algebra_axioms, check_cyclic, example_names, product_at, to_f64, FModel};
use crate::connection::{build_natural_connection, check_connection_axioms, ma_condition_number, assemble_ma, CounitChoice};
use crate::curvature::{check_3rc, obstruction_report, obstruction_tensors, riemann_tensor};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hodograph::{
    hodograph_grid_parallel, verify_hodograph_solution, GridSolution, GridSpec, HodographField, HodographProblem,
};
use crate::jet::{Jet, UniSeries};
use crate::metric::{
    check_dn, check_gfromnabla, check_invariance, check_nonlocal_conditions, check_riemannian_f, connection_from_metric,
    conservation_check, DensitySet, MetricJet,
};
use crate::modelfile::load_model;
use crate::report::{csv_field, num17, Report};
use crate::symmetry::{
    adapt_chart, check_symmetry_equation, solve_symmetry, transform_e_to_tsarev, transform_tsarev_to_e,
    tsarev_coefficients, tsarev_system, FieldRef, SeriesField,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "fman", version, about = "Cyclic F-manifold toolkit: natural connections, 3RC checks, symmetries, hodograph solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Algebra axioms and cyclicity of the flow field.
    Validate(RunConfig),
    /// Build the natural connection and check its defining properties.
    Connection(RunConfig),
    /// Curvature of the natural connection and the 3RC test.
    Curvature {
        #[command(flatten)]
        cfg: RunConfig,
        /// Run the 3RC test (on by default).
        #[arg(long)]
        check_3rc: bool,
        /// Also report the obstruction tensors in the adapted chart.
        #[arg(long)]
        obstruction: bool,
    },
    /// Series solution of the symmetry equation from Cauchy data on the unit curve.
    Symmetry {
        #[command(flatten)]
        cfg: RunConfig,
        /// Cauchy data stored in the model under this name.
        #[arg(long, conflicts_with = "cauchy")]
        data: Option<String>,
        /// Cauchy data as `a0 a1 ...;b0 b1 ...` (one list per component).
        #[arg(long)]
        cauchy: Option<String>,
    },
    /// Tsarev coefficients and the comparison with Tsarev data (semisimple models).
    Tsarev {
        #[command(flatten)]
        cfg: RunConfig,
        /// Field to test against Tsarev's linear system.
        #[arg(long)]
        symmetry: Option<String>,
        /// Cauchy data (model name) to convert into Tsarev data.
        #[arg(long, conflicts_with = "tsarev_data")]
        data: Option<String>,
        /// Tsarev data `a0 a1 ...;b0 b1 ...` to convert into Cauchy data.
        #[arg(long)]
        tsarev_data: Option<String>,
    },
    /// Solve x e + t X(u) = Y(u) on a grid and check u_t = X o u_x.
    Hodograph {
        #[command(flatten)]
        cfg: RunConfig,
        /// Symmetry Y: a field of the model, or stored Cauchy data solved as a series.
        #[arg(long)]
        symmetry: String,
        /// Initial guess for the first node (defaults to the point).
        #[arg(long)]
        guess: Option<String>,
    },
    /// Metric checks: invariance, DN conditions, Riemannian F-manifold condition, metric-connection bridge.
    Metric {
        #[command(flatten)]
        cfg: RunConfig,
        /// Affinor W = Y o with sign, as `NAME:EPS`; repeatable.
        #[arg(long = "affinor")]
        affinors: Vec<String>,
    },
    /// Conservation-law checks for the model's densities.
    Conserve(RunConfig),
    /// List builtin example models.
    ExampleList {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

/// Options shared by the model subcommands.
#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Model file (TOML).
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    model: Option<PathBuf>,
    /// Builtin example name (see `example-list`).
    #[arg(long)]
    example: Option<String>,
    /// Base point as comma-separated coordinates (defaults to the model's base point).
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Jet order.
    #[arg(long)]
    order: Option<usize>,
    /// Series order K.
    #[arg(long, default_value_t = 8)]
    series_order: usize,
    /// Tolerance for verdicts.
    #[arg(long)]
    tol: Option<f64>,
    /// Name of the flow field X (defaults to the model's designation).
    #[arg(long)]
    flow: Option<String>,
    /// Grid for sweeps: XSPEC,TSPEC with SPEC = lo:hi:count.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

struct Ctx {
    model: FModel,
    x: Vec<Expr>,
    point: Vec<f64>,
}

impl RunConfig {
    fn context(&self) -> Result<Ctx> {
        let model = match (&self.model, &self.example) {
            (Some(p), None) => load_model(p)?,
            (None, Some(e)) => builtin_example(e)?,
            _ => return Err(Error::Invalid("give exactly one of --model or --example".into())),
        };
        let x = match &self.flow {
            Some(f) => model.field(f)?.to_vec(),
            None => model.flow_field()?.to_vec(),
        };
        let point = match &self.point {
            Some(p) => parse_list(p)?,
            None => model.base.clone(),
        };
        if point.len() != model.dim() {
            return Err(Error::Dimension(format!("point has {} entries for dimension {}", point.len(), model.dim())));
        }
        Ok(Ctx { model, x, point })
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn order(&self, default: usize, min: usize) -> Result<usize> {
        let o = self.order.unwrap_or(default);
        if o < min {
            return Err(Error::OrderTooLow { need: min, got: o });
        }
        Ok(o)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Invalid(format!("`{t}` is not a number"))))
        .collect()
}

/// Series lists, zero-padded to order `k` (finite data are polynomials).
fn parse_series(s: &str, n: usize, k: usize) -> Result<Vec<UniSeries<f64>>> {
    let mut comps: Vec<Vec<f64>> = s.split(';').map(parse_list).collect::<Result<_>>()?;
    for c in &mut comps {
        if c.len() < k + 1 {
            c.resize(k + 1, 0.0);
        }
    }
    if comps.len() != n {
        return Err(Error::Dimension(format!("{} series given for dimension {n}", comps.len())));
    }
    Ok(comps.into_iter().map(UniSeries::new).collect())
}

fn stored_series(model: &FModel, name: &str) -> Result<Vec<UniSeries<f64>>> {
    let d = model.data.get(name).ok_or_else(|| Error::Model(format!("no data named `{name}`")))?;
    Ok(d.iter().map(|c| UniSeries::new(c.clone())).collect())
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num17(*x)).collect())
}

fn series_json(s: &[UniSeries<f64>]) -> Value {
    Value::Array(s.iter().map(|c| nums(c.coeffs())).collect())
}

fn jet_json(j: &Jet<f64>) -> Value {
    let lay = j.layout();
    Value::Array(
        (0..lay.len())
            .filter(|&i| j.coeffs()[i] != 0.0)
            .map(|i| json!({ "exponents": lay.exponents(i), "value": num17(j.coeffs()[i]) }))
            .collect(),
    )
}

/// What a subcommand produced.
#[derive(Default)]
struct Outcome {
    reports: Vec<Report>,
    data: Map<String, Value>,
    /// Primary CSV payload replacing the report rows in csv format.
    table: Option<String>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.reports.iter().all(Report::passed)
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut m = Map::new();
                m.insert("verdict".into(), Value::String(if self.passed() { "pass" } else { "fail" }.into()));
                m.insert("reports".into(), Value::Array(self.reports.iter().map(Report::to_json).collect()));
                for (k, v) in &self.data {
                    m.insert(k.clone(), v.clone());
                }
                serde_json::to_string_pretty(&Value::Object(m)).expect("JSON serialization") + "\n"
            }
            Format::Text => {
                let mut s: String = self.reports.iter().map(|r| r.to_text() + "\n").collect();
                for (k, v) in &self.data {
                    s += &format!("{k}: {v}\n");
                }
                s
            }
            Format::Csv => match &self.table {
                Some(t) => t.clone(),
                None => {
                    let mut s = String::from("check,item,residual,verdict\n");
                    for r in &self.reports {
                        for row in r.csv_rows() {
                            s += &row;
                            s.push('\n');
                        }
                    }
                    s
                }
            },
        }
    }
}

fn validate(cfg: &RunConfig) -> Result<Outcome> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-10);
    let order = cfg.order(1, 1)?;
    let mut out = Outcome::default();
    out.reports.push(check_algebra_axioms(&c.model, &c.point, order, tol)?);
    out.reports.push(check_cyclic(&c.model, &c.x, &c.point, tol)?);
    out.data.insert("model".into(), Value::String(c.model.name.clone()));
    out.data.insert("dimension".into(), Value::from(c.model.dim()));
    Ok(out)
}

fn connection(cfg: &RunConfig) -> Result<Outcome> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-10);
    let order = cfg.order(2, 1)?;
    let gamma = build_natural_connection(&c.model, &c.x, &c.point, order, &CounitChoice::Default)?;
    let mut out = Outcome::default();
    out.reports.push(check_connection_axioms(&gamma, &c.model, &c.x, &c.point, tol)?);
    let n = c.model.dim();
    let pj = product_at(&c.model, &c.point, 0)?;
    let xj = crate::algebra::eval_exprs::<f64>(&c.x, &c.model.coords, &c.point, 0)?;
    let a = pj.mult_operator(&xj);
    let op = assemble_ma(&a, &pj.e)?;
    out.data.insert("ma_condition_number".into(), num17(ma_condition_number(&op)));
    let mut g = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                g.push(json!({ "upper": i + 1, "lower": [j + 1, k + 1], "value": num17(gamma.get(i, j, k).value()) }));
            }
        }
    }
    out.data.insert("christoffel".into(), Value::Array(g));
    Ok(out)
}

fn curvature(cfg: &RunConfig, obstruction: bool) -> Result<Outcome> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-10);
    let order = cfg.order(2, 1)?;
    let gamma = build_natural_connection(&c.model, &c.x, &c.point, order, &CounitChoice::Default)?;
    let r = riemann_tensor(&gamma)?;
    let cv = to_f64(&product_at(&c.model, &c.point, 0)?.c_values());
    let mut out = Outcome::default();
    let mut rep = check_3rc(&r, &cv, tol);
    rep.order = order;
    out.reports.push(rep);
    out.data.insert("riemann_norm".into(), num17(r.norm()));
    out.data.insert("bianchi_residual".into(), num17(r.bianchi_residual()));
    if obstruction {
        let am = adapt_chart(&c.model)?;
        let chart = crate::symmetry::adapted_chart(&c.model)?;
        let p = chart.to_adapted_point(&c.point);
        let ax = chart.field_to_adapted(&c.model, &c.x)?;
        let ob = obstruction_tensors(&am, &ax, &p, order.max(2))?;
        out.reports.push(obstruction_report(&ob, tol));
    }
    Ok(out)
}

fn symmetry(cfg: &RunConfig, data: Option<&str>, cauchy: Option<&str>) -> Result<Outcome> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-9);
    let k = cfg.series_order;
    let d = match (data, cauchy) {
        (Some(name), _) => stored_series(&c.model, name)?,
        (None, Some(s)) => parse_series(s, c.model.dim(), k)?,
        (None, None) => return Err(Error::Invalid("give --data NAME or --cauchy SERIES".into())),
    };
    let field = solve_symmetry(&c.model, &c.x, &c.point, &d, k)?;
    let mut out = Outcome::default();
    if k >= 2 {
        out.reports.push(check_symmetry_equation(&c.model, &c.x, FieldRef::Series(&field), &c.point, tol)?);
    }
    out.data.insert("series_order".into(), Value::from(k));
    out.data.insert("compatible".into(), field.compatible.map_or(Value::Null, Value::Bool));
    out.data.insert("components".into(), Value::Array(field.comps.iter().map(jet_json).collect()));
    Ok(out)
}

fn tsarev(cfg: &RunConfig, symmetry: Option<&str>, data: Option<&str>, tdata: Option<&str>) -> Result<Outcome> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-9);
    let n = c.model.dim();
    let k = cfg.series_order;
    let mut out = Outcome::default();
    let a = tsarev_coefficients(&c.model, &c.x, &c.point, 0)?;
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rows.push(json!({ "i": i + 1, "j": j + 1, "value": num17(a[i * n + j].value()) }));
            }
        }
    }
    out.data.insert("tsarev_coefficients".into(), Value::Array(rows));
    if let Some(name) = symmetry {
        let w = c.model.field(name)?;
        out.reports.push(tsarev_system(&c.model, &c.x, FieldRef::Exprs(w), &c.point, tol)?.report);
    }
    if let Some(name) = data {
        let y0 = stored_series(&c.model, name)?;
        let phi = transform_e_to_tsarev(&c.model, &c.x, &y0, &c.point, k)?;
        out.data.insert("tsarev_data".into(), series_json(&phi));
    }
    if let Some(s) = tdata {
        let phi = parse_series(s, n, k)?;
        let y0 = transform_tsarev_to_e(&c.model, &c.x, &phi, &c.point, k)?;
        out.data.insert("cauchy_data".into(), series_json(&y0));
    }
    Ok(out)
}

fn hodograph(cfg: &RunConfig, symmetry: &str, guess: Option<&str>) -> Result<(Outcome, GridSolution)> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-3);
    let spec = GridSpec::parse(cfg.grid.as_deref().ok_or_else(|| Error::Invalid("hodograph needs --grid".into()))?)?;
    let y = if let Ok(f) = c.model.field(symmetry) {
        HodographField::Exprs(f.to_vec())
    } else {
        let d = stored_series(&c.model, symmetry)?;
        let s: SeriesField<f64> = solve_symmetry(&c.model, &c.x, &c.point, &d, cfg.series_order)?;
        HodographField::Series(s)
    };
    let guess = match guess {
        Some(g) => parse_list(g)?,
        None => c.point.clone(),
    };
    let problem = HodographProblem::new(c.model.clone(), c.x.clone(), y);
    let grid = hodograph_grid_parallel(&problem, spec, &guess)?;
    let mut out = Outcome::default();
    out.reports.push(verify_hodograph_solution(&c.model, &c.x, &grid, tol)?);
    out.data.insert("nodes".into(), Value::from(grid.nodes.len()));
    out.data.insert("converged".into(), Value::from(grid.converged()));
    out.table = Some(grid.csv());
    Ok((out, grid))
}

fn metric(cfg: &RunConfig, affinors: &[String]) -> Result<Outcome> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-9);
    let order = cfg.order(3, 2)?;
    let g = MetricJet::from_model(&c.model, &c.point, order)?;
    let mut out = Outcome::default();
    out.reports.push(check_invariance(&g, &c.model, &c.x, tol)?);
    let dn = check_dn(&g, &c.model, &c.x, tol)?;
    let rf = check_riemannian_f(&g, &c.model, tol)?;
    let from_g = connection_from_metric(&g, &c.model)?;
    out.reports.push(check_gfromnabla(&g, &from_g, &c.model, tol)?);
    let natural = build_natural_connection(&c.model, &c.x, &c.point, order - 1, &CounitChoice::Default)?;
    let mut bridge = Report::new("metric-bridge", c.point.clone(), order, tol);
    bridge.push("connection from metric - natural connection", from_g.max_diff(&natural));
    bridge.note("expected to vanish when the DN conditions hold and X is cyclic");
    let expect = dn.passed();
    out.reports.push(dn);
    out.reports.push(rf);
    if expect {
        out.reports.push(bridge);
    } else {
        out.data.insert("bridge_difference".into(), num17(bridge.max_residual()));
    }
    if !affinors.is_empty() {
        let mut list = Vec::new();
        for a in affinors {
            let (name, eps) = a
                .rsplit_once(':')
                .ok_or_else(|| Error::Invalid(format!("affinor `{a}` must be NAME:EPS")))?;
            let eps: f64 = eps.parse().map_err(|_| Error::Invalid(format!("bad sign in `{a}`")))?;
            list.push((c.model.field(name)?.to_vec(), eps));
        }
        out.reports.push(check_nonlocal_conditions(&g, &c.model, &list, tol)?);
    }
    Ok(out)
}

fn conserve(cfg: &RunConfig) -> Result<Outcome> {
    let c = cfg.context()?;
    let tol = cfg.tol(1e-9);
    let order = cfg.order(1, 1)?;
    let d = DensitySet::from_model(&c.model);
    if d.is_empty() {
        return Err(Error::Model("model has no densities".into()));
    }
    let gamma = build_natural_connection(&c.model, &c.x, &c.point, order, &CounitChoice::Default)?;
    let mut out = Outcome::default();
    out.reports.push(conservation_check(&c.model, &c.x, &gamma, &d, tol)?);
    let cv = to_f64(&product_at(&c.model, &c.point, 0)?.c_values());
    let three = check_3rc(&riemann_tensor(&gamma)?, &cv, tol);
    out.data.insert("check_3rc_verdict".into(), Value::String(if three.passed() { "pass" } else { "fail" }.into()));
    out.data.insert("densities".into(), Value::Array(d.names.iter().cloned().map(Value::String).collect()));
    Ok(out)
}

fn emit(cfg_out: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match cfg_out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run_with(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    1
                }
            };
        }
    };
    let result: Result<(Outcome, &RunConfig)> = match &cli.command {
        Command::ExampleList { format } => {
            let names = example_names();
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&names).expect("JSON serialization") + "\n",
                Format::Text => names.join("\n") + "\n" + "dh-<m1>-<m2>-...\n",
                Format::Csv => "name\n".to_string() + &names.iter().map(|n| csv_field(n) + "\n").collect::<String>(),
            };
            let _ = stdout.write_all(text.as_bytes());
            return 0;
        }
        Command::Validate(cfg) => validate(cfg).map(|o| (o, cfg)),
        Command::Connection(cfg) => connection(cfg).map(|o| (o, cfg)),
        Command::Curvature { cfg, obstruction, .. } => curvature(cfg, *obstruction).map(|o| (o, cfg)),
        Command::Symmetry { cfg, data, cauchy } => symmetry(cfg, data.as_deref(), cauchy.as_deref()).map(|o| (o, cfg)),
        Command::Tsarev { cfg, symmetry, data, tsarev_data } => {
            tsarev(cfg, symmetry.as_deref(), data.as_deref(), tsarev_data.as_deref()).map(|o| (o, cfg))
        }
        Command::Hodograph { cfg, symmetry, guess } => hodograph(cfg, symmetry, guess.as_deref()).map(|(mut o, _)| {
            // with --out the grid goes to the file and the report to stdout
            if let Some(p) = &cfg.out {
                if let Some(t) = o.table.take() {
                    if let Err(e) = std::fs::write(p, t) {
                        o.data.insert("write_error".into(), Value::String(e.to_string()));
                    }
                }
            }
            (o, cfg)
        }),
        Command::Metric { cfg, affinors } => metric(cfg, affinors).map(|o| (o, cfg)),
        Command::Conserve(cfg) => conserve(cfg).map(|o| (o, cfg)),
    };
    match result {
        Ok((out, cfg)) => {
            let hodograph_out = matches!(cli.command, Command::Hodograph { .. }) && cfg.out.is_some();
            let format = if hodograph_out && cfg.format == Format::Csv { Format::Text } else { cfg.format };
            let target = if hodograph_out { None } else { cfg.out.as_ref() };
            if let Err(e) = emit(target, &out.render(format), stdout) {
                let _ = writeln!(stderr, "error: {e}");
                return 1;
            }
            if out.data.contains_key("write_error") {
                let _ = writeln!(stderr, "error: {}", out.data["write_error"]);
                return 1;
            }
            if out.passed() {
                0
            } else {
                2
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

/// Runs the CLI on process streams.
pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
