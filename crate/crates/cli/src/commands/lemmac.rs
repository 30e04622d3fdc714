use clap::Args;
use nevlab::lattice::{lemma_c_integral_tol, lemma_c_lattice_sum, LEMMA_C_TOL};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{failed, print_checks, Check, Ctx};
use crate::config::flag_overrides;
use crate::error::{CliError, CliResult};
use crate::output::{csv_text, sci, Plot};

#[derive(Debug, Args)]
pub struct Flags {
    #[arg(long)]
    y_min: Option<f64>,
    #[arg(long)]
    y_max: Option<f64>,
    /// Number of geometrically spaced heights.
    #[arg(long)]
    steps: Option<usize>,
    /// Absolute quadrature tolerance of the log⁺ integral.
    #[arg(long)]
    tol: Option<f64>,
}

impl Flags {
    pub fn overrides(&self) -> Value {
        flag_overrides(&json!({ "y_min": self.y_min, "y_max": self.y_max, "steps": self.steps, "tol": self.tol }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub y_min: f64,
    pub y_max: f64,
    pub steps: usize,
    pub tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self { y_min: 0.1 / 256.0, y_max: 0.1, steps: 9, tol: LEMMA_C_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub y: f64,
    pub integral: f64,
    pub quad_error: f64,
    pub lattice_sum: f64,
    pub ratio_to_log: f64,
    pub lattice_ratio: f64,
}

/// y_max·(y_min/y_max)^{k/(steps−1)}, k = 0..steps.
pub fn heights(p: &Params) -> CliResult<Vec<f64>> {
    if p.steps == 0 {
        return Err(CliError::Parse("steps must be positive".into()));
    }
    if p.steps == 1 {
        return Ok(vec![p.y_max]);
    }
    Ok((0..p.steps).map(|k| p.y_max * (p.y_min / p.y_max).powf(k as f64 / (p.steps - 1) as f64)).collect())
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<()> {
    let mut rows = Vec::new();
    for y in heights(p)? {
        let i = lemma_c_integral_tol(y, p.tol)?;
        let l = lemma_c_lattice_sum(y)?;
        rows.push(Row { y, integral: i.value, quad_error: i.error, lattice_sum: l.sum, ratio_to_log: i.ratio, lattice_ratio: l.ratio });
    }
    let span = |f: fn(&Row) -> f64| {
        let lo = rows.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi / lo)
    };
    let (c_hat, spread) = span(|r| r.ratio_to_log);
    let (lattice_c, lattice_spread) = span(|r| r.lattice_ratio);
    let checks = vec![
        Check::new("positive ratios", c_hat > 0.0, format!("c_hat = {c_hat}")),
        Check::new("positive lattice ratios", lattice_c > 0.0, format!("min = {lattice_c}")),
    ];

    let mut out = ctx.out_dir()?;
    let table: Vec<Vec<String>> =
        rows.iter().map(|r| vec![sci(r.y), sci(r.integral), sci(r.lattice_sum), sci(r.ratio_to_log)]).collect();
    out.write("lemmac.csv", csv_text(&["y", "integral", "lattice_sum", "ratio_to_log"], &table).as_bytes())?;
    out.write_json(
        "summary.json",
        &json!({
            "c_hat": c_hat,
            "integral_spread": spread,
            "lattice_c": lattice_c,
            "lattice_spread": lattice_spread,
            "rows": rows,
            "checks": checks,
        }),
    )?;
    let mut plot = Plot::new("y", "ratio to log(1/y)", &["y", "integral", "lattice"]).log_x().series("integral", 2).series("lattice sum", 3);
    for r in &rows {
        plot.row(vec![r.y, r.ratio_to_log, r.lattice_ratio]);
    }
    out.plot("lemmac", &plot)?;

    print_checks(&checks);
    println!("c_hat: {c_hat}");
    println!("spread: {spread}");
    ctx.finish(out)?;
    failed(&checks)
}
