use clap::{Args, ValueEnum};
use nevlab::profiles::{audit_grid, is_tame, log_integral, tame_majorant, tame_minorant, Profile, DEFAULT_OCTAVES};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Ctx;
use crate::config::{flag_overrides, ProfileSource};
use crate::error::CliResult;
use crate::output::{csv_text, sci, Plot};

/// Which profile the command works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TameMode {
    /// The profile as given.
    None,
    /// The profile if it is tame, its tame minorant otherwise.
    Auto,
    Minorant,
    Majorant,
}

impl TameMode {
    pub fn apply(self, m: Profile) -> CliResult<Profile> {
        Ok(match self {
            TameMode::None => m,
            TameMode::Auto if is_tame(&m).is_tame => m,
            TameMode::Auto | TameMode::Minorant => tame_minorant(&m)?,
            TameMode::Majorant => tame_majorant(&m)?,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Flags {
    /// Profile expression in x.
    #[arg(long = "profile", allow_hyphen_values = true)]
    expr: Option<String>,
    /// Plateau table (x_lo, x_hi, value rows) instead of an expression.
    #[arg(long)]
    table: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    tame: Option<TameMode>,
    /// Upper end of the partial log-integrals.
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of dyadic octaves in the log-integral sums.
    #[arg(long)]
    k_max: Option<u32>,
}

impl Flags {
    pub fn overrides(&self) -> Value {
        let mut v = flag_overrides(&json!({
            "tame": self.tame,
            "t_max": self.t_max,
            "k_max": self.k_max,
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
    pub tame: TameMode,
    pub t_max: f64,
    pub k_max: u32,
}

impl Default for Params {
    fn default() -> Self {
        Self { profile: ProfileSource::new("exp(-sqrt(abs(x)))"), tame: TameMode::None, t_max: 2f64.powi(20), k_max: DEFAULT_OCTAVES }
    }
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<()> {
    let m = p.tame.apply(p.profile.load()?)?;
    let li = log_integral(&m, p.t_max, p.k_max);
    let tame = is_tame(&m);

    let mut out = ctx.out_dir()?;
    let grid = audit_grid();
    let rows: Vec<Vec<String>> = grid
        .iter()
        .map(|&x| vec![sci(x), sci(m.value(x)), sci(m.ln_value(x)), sci(m.deriv1(x)), sci(m.deriv2(x))])
        .collect();
    out.write("profile.csv", csv_text(&["x", "m", "ln_m", "m1", "m2"], &rows).as_bytes())?;
    let rows: Vec<Vec<String>> = li.dyadic_sum.iter().map(|(k, s)| vec![k.to_string(), sci(*s)]).collect();
    out.write("dyadic.csv", csv_text(&["K", "sum"], &rows).as_bytes())?;
    out.write_json(
        "report.json",
        &json!({
            "spec": m.spec(),
            "kind": m.kind(),
            "lipschitz": m.lipschitz(),
            "log_integral": li,
            "tameness": tame,
        }),
    )?;

    let mut plot = Plot::new("x", "ln m(x)", &["x", "ln_m"]).log_x().series("ln m", 2);
    for &x in grid.iter().filter(|&&x| x > 0.0) {
        plot.row(vec![x, m.ln_value(x)]);
    }
    out.plot("profile", &plot)?;
    let mut plot = Plot::new("K", "sum of 2^-k log^- m(2^k)", &["K", "sum"]).series("dyadic sum", 2);
    for (k, s) in &li.dyadic_sum {
        plot.row(vec![*k as f64, *s]);
    }
    out.plot("dyadic", &plot)?;

    println!("profile: {}", m.spec().describe());
    println!("log integral: {}", serde_json::to_value(li.verdict).unwrap().as_str().unwrap_or("?"));
    println!("tame: {}", tame.is_tame);
    ctx.finish(out)
}
