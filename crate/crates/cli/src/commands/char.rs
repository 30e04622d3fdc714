use std::sync::Arc;

use clap::{Args, ValueEnum};
use nevlab::charfun::{
    characteristic_table, classify_growth, exp_minus_iz_a_points, AsPolicy, ExpAffine, Meromorphic, Mobius, ShiftInvert,
};
use nevlab::C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{failed, print_checks, Check, Ctx};
use crate::config::flag_overrides;
use crate::error::CliResult;
use crate::output::Plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// e^{−iz}
    ExpIz,
    /// 1/(e^{−iz} − a)
    InvExpIz,
    /// (z − i)/(z + i)
    Mobius,
}

#[derive(Debug, Args)]
pub struct Flags {
    #[arg(long, value_enum)]
    function: Option<TestFunction>,
    /// Shift a as `re,im` for inv-exp-iz.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<f64>>,
    /// Relative tolerance of the radial S_o quadrature.
    #[arg(long)]
    outer_rel: Option<f64>,
    /// Relative tolerance of the angular S_o quadrature.
    #[arg(long)]
    inner_rel: Option<f64>,
}

impl Flags {
    pub fn overrides(&self) -> CliResult<Value> {
        let a = match &self.a {
            Some(s) => Some(super::parse_point(s)?),
            None => None,
        };
        Ok(flag_overrides(&json!({
            "function": self.function,
            "a": a,
            "r_grid": self.r_grid,
            "policy": { "outer_rel": self.outer_rel, "inner_rel": self.inner_rel },
        })))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub function: TestFunction,
    pub a: [f64; 2],
    pub r_grid: Vec<f64>,
    pub policy: AsPolicy,
    /// Poles of inv-exp-iz are listed up to this modulus.
    pub pole_radius: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            function: TestFunction::ExpIz,
            a: [2.0, 0.0],
            r_grid: vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            policy: AsPolicy::default(),
            pole_radius: 200.0,
        }
    }
}

pub fn build(p: &Params) -> CliResult<Arc<dyn Meromorphic>> {
    let i = C64::new(0.0, 1.0);
    Ok(match p.function {
        TestFunction::ExpIz => Arc::new(ExpAffine::exp_minus_iz()),
        TestFunction::InvExpIz => {
            let a = C64::new(p.a[0], p.a[1]);
            Arc::new(ShiftInvert { f: Arc::new(ExpAffine::exp_minus_iz()), a, pole_list: exp_minus_iz_a_points(a, p.pole_radius) })
        }
        TestFunction::Mobius => Arc::new(Mobius::new(C64::new(1.0, 0.0), -i, C64::new(1.0, 0.0), i)?),
    })
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<()> {
    let f = build(p)?;
    let table = characteristic_table(f.as_ref(), &p.r_grid, &p.policy)?;
    let s_o: Vec<f64> = table.rows.iter().map(|r| r.s_o).collect();
    let err: Vec<f64> = table.rows.iter().map(|r| r.err).collect();
    let indicator = classify_growth(&p.r_grid, &s_o, &err);
    let drops = table.monotonicity_violations();
    let checks = vec![
        Check::new(
            "row identity",
            table.rows.iter().all(|r| r.s == r.a + r.b + r.c),
            "S = A + B + C on every row".into(),
        ),
        Check::new("S_o monotonicity", drops.is_empty(), format!("{} drops beyond twice the error", drops.len())),
    ];

    let mut out = ctx.out_dir()?;
    out.write_with("char.csv", |b| table.write_csv(b))?;
    out.write_json("report.json", &json!({ "table": table, "indicator": indicator, "checks": checks }))?;
    let mut plot = Plot::new("r", "characteristic", &["r", "S", "S_o"]).log_x().series("S", 2).series("S_o", 3);
    for r in &table.rows {
        plot.row(vec![r.r, r.s, r.s_o]);
    }
    out.plot("char", &plot)?;

    print_checks(&checks);
    println!("function: {}", f.name());
    println!("indicator: {}", serde_json::to_value(indicator.verdict).unwrap().as_str().unwrap_or("?"));
    ctx.finish(out)?;
    failed(&checks)
}
