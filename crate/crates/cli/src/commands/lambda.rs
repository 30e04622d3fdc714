use clap::Args;
use nevlab::modular::{lambda_eval, spherical_derivative_lambda, ModularConfig};
use nevlab::C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Ctx;
use crate::config::flag_overrides;
use crate::error::{CliError, CliResult};
use crate::output::{csv_text, num};

#[derive(Debug, Args)]
pub struct Flags {
    /// Point as `re,im`; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    tau: Vec<String>,
    /// Rectangular grid `re0,re1,n_re,im0,im1,n_im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub re: [f64; 2],
    pub n_re: usize,
    pub im: [f64; 2],
    pub n_im: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub tau: Vec<[f64; 2]>,
    pub grid: Option<Grid>,
    pub modular: ModularConfig,
}

pub fn parse_point(s: &str) -> CliResult<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Parse(format!("expected `re,im`, got `{s}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let re = parts[0].parse::<f64>().map_err(|_| bad())?;
    let im = parts[1].parse::<f64>().map_err(|_| bad())?;
    Ok([re, im])
}

impl Flags {
    pub fn overrides(&self) -> CliResult<Value> {
        #[derive(Serialize)]
        struct O {
            tau: Option<Vec<[f64; 2]>>,
            grid: Option<Grid>,
        }
        let tau = if self.tau.is_empty() {
            None
        } else {
            Some(self.tau.iter().map(|s| parse_point(s)).collect::<CliResult<Vec<_>>>()?)
        };
        let grid = match &self.grid {
            None => None,
            Some(g) if g.len() == 6 => {
                let count = |v: f64| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(CliError::Parse(format!("grid count must be a positive integer, got {v}")))
                    }
                };
                Some(Grid { re: [g[0], g[1]], n_re: count(g[2])?, im: [g[3], g[4]], n_im: count(g[5])? })
            }
            Some(g) => return Err(CliError::Parse(format!("--grid takes 6 numbers, got {}", g.len()))),
        };
        Ok(flag_overrides(&O { tau, grid }))
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Points of the run: the explicit list followed by the grid, row by row in Im.
pub fn points(p: &Params) -> Vec<C64> {
    let mut pts: Vec<C64> = p.tau.iter().map(|t| C64::new(t[0], t[1])).collect();
    if let Some(g) = &p.grid {
        for y in axis(g.im[0], g.im[1], g.n_im) {
            for x in axis(g.re[0], g.re[1], g.n_re) {
                pts.push(C64::new(x, y));
            }
        }
    }
    pts
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<()> {
    let pts = points(p);
    if pts.is_empty() {
        return Err(CliError::Parse("no points: give --tau or --grid".into()));
    }
    let mut rows = Vec::with_capacity(pts.len());
    for tau in pts {
        let v = lambda_eval(tau, &p.modular)?;
        let rho = spherical_derivative_lambda(tau, &p.modular)?;
        rows.push(vec![num(tau.re), num(tau.im), num(v.value.re), num(v.value.im), num(rho)]);
    }
    let text = csv_text(&["re", "im", "lam_re", "lam_im", "rho"], &rows);
    if ctx.config.out.is_none() {
        print!("{text}");
        return Ok(());
    }
    let mut out = ctx.out_dir()?;
    out.write("lambda.csv", text.as_bytes())?;
    ctx.finish(out)
}
