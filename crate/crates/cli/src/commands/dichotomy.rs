use clap::{Args, ValueEnum};
use nevlab::counterexample::{dichotomy, profile_verdict, DichotomyConfig, Route};
use nevlab::profiles::Verdict;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Ctx;
use crate::config::{flag_overrides, ProfileSource};
use crate::error::{CliError, CliResult};
use crate::output::{csv_text, sci, Plot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Convergent log-integral; the witness is built on the tame minorant.
    A,
    /// Divergent log-integral; the witness is built on the tame majorant.
    B,
}

impl Direction {
    pub fn expected(self) -> Verdict {
        match self {
            Direction::A => Verdict::Convergent,
            Direction::B => Verdict::Divergent,
        }
    }

    pub fn route(self) -> Route {
        match self {
            Direction::A => Route::Minorant,
            Direction::B => Route::Majorant,
        }
    }
}

#[derive(Debug, Args)]
pub struct Flags {
    #[arg(long = "profile", allow_hyphen_values = true)]
    expr: Option<String>,
    #[arg(long)]
    table: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    direction: Option<Direction>,
    /// Run even when the profile's log-integral verdict contradicts the direction.
    #[arg(long)]
    force: bool,
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<f64>>,
    /// Octaves of the boundary log⁺ integral.
    #[arg(long)]
    octaves: Option<u32>,
    /// Boundary node count of the witness map.
    #[arg(long)]
    nodes: Option<usize>,
    /// Grid size of the spherical-derivative bound check; 0 skips it.
    #[arg(long)]
    sphere_grid: Option<usize>,
}

impl Flags {
    pub fn overrides(&self) -> Value {
        let mut v = flag_overrides(&json!({
            "direction": self.direction,
            "force": self.force.then_some(true),
            "run": {
                "r_grid": self.r_grid,
                "octaves": self.octaves,
                "map": { "nodes": self.nodes },
                "sphere_grid": self.sphere_grid,
            },
        }));
        if let Some(src) = ProfileSource::overrides(&self.expr, &self.table) {
            v["profile"] = src;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub profile: ProfileSource,
    pub direction: Direction,
    pub force: bool,
    pub run: DichotomyConfig,
}

impl Default for Params {
    fn default() -> Self {
        Self { profile: ProfileSource::new("exp(-sqrt(abs(x)))"), direction: Direction::A, force: false, run: DichotomyConfig::default() }
    }
}

fn label<T: Serialize>(v: T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<()> {
    let m = p.profile.load()?;
    let found = profile_verdict(&m);
    if found != p.direction.expected() && !p.force {
        return Err(CliError::Mismatch(format!(
            "log integral of {} is {}, direction {} needs {} (use --force to run anyway)",
            m.spec().describe(),
            label(found),
            label(p.direction),
            label(p.direction.expected()),
        )));
    }
    let rep = dichotomy(&m, p.direction.route(), &p.run)?;

    let mut out = ctx.out_dir()?;
    let ind = &rep.indicator;
    let rows: Vec<Vec<String>> = (0..ind.r_grid.len()).map(|i| vec![sci(ind.r_grid[i]), sci(ind.s_o[i]), sci(ind.s_o_err[i])]).collect();
    out.write("so.csv", csv_text(&["r", "value", "err"], &rows).as_bytes())?;
    out.write_with("boundary.csv", |b| rep.boundary.write_csv(b))?;
    out.write_json("report.json", &rep)?;
    let mut plot = Plot::new("r", "S_o(r; F)", &["r", "S_o", "err"]).log_x().series_with_errors("S_o", 2, 3);
    for i in 0..ind.r_grid.len() {
        plot.row(vec![ind.r_grid[i], ind.s_o[i], ind.s_o_err[i]]);
    }
    out.plot("so", &plot)?;
    let mut plot = Plot::new("T", "octave increment", &["T", "increment", "partial"]).log_x().series("increment", 2).series("partial", 3);
    for i in 0..rep.boundary.t.len() {
        plot.row(vec![rep.boundary.t[i], rep.boundary.increments[i], rep.boundary.partial[i]]);
    }
    out.plot("boundary", &plot)?;

    let b = &rep.boundary;
    println!("profile: {}", m.spec().describe());
    println!("log integral: {}", label(found));
    println!("witness: {}", rep.witness.describe());
    println!(
        "S_o: flat residual {:.4}, log slope {:.4} (t = {:.2}), power t = {:.2}",
        ind.flat_residual, ind.log_slope, ind.log_slope_t, ind.power_t
    );
    println!(
        "boundary integral: octave floor {:.4}, fitted {:.4}, series slope {:.4}, ratio {:.3}, cauchy {}",
        b.floor, b.fitted, rep.series_slope, rep.slope_ratio, b.cauchy
    );
    println!("agrees: {}", rep.agrees);
    ctx.finish(out)?;
    println!("verdict: {}", label(rep.verdict));
    Ok(())
}
