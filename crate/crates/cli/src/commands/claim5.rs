use clap::Args;
use nevlab::confmap::{build_map, GraphDomain, MapConfig, Side};
use nevlab::harmonic::{claim5_comparability, WosConfig};
use nevlab::C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::profile::TameMode;
use super::{failed, parse_point, print_checks, Check, Ctx};
use crate::config::{flag_overrides, ProfileSource};
use crate::error::CliResult;
use crate::output::Plot;

#[derive(Debug, Args)]
pub struct Flags {
    #[arg(long = "profile", allow_hyphen_values = true)]
    expr: Option<String>,
    #[arg(long)]
    table: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    tame: Option<TameMode>,
    /// Octave indices k.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<u32>>,
    /// Starting point as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Also transplant through the conformal map onto H(+n*).
    #[arg(long)]
    transplant: bool,
}

impl Flags {
    pub fn overrides(&self) -> CliResult<Value> {
        let z = match &self.z {
            Some(s) => Some(parse_point(s)?),
            None => None,
        };
        let mut v = flag_overrides(&json!({
            "tame": self.tame,
            "ks": self.ks,
            "z": z,
            "samples": self.samples,
            "transplant": self.transplant.then_some(true),
        }));
        if let Some(src) = ProfileSource::overrides(&self.expr, &self.table) {
            v["profile"] = src;
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub profile: ProfileSource,
    pub tame: TameMode,
    pub ks: Vec<u32>,
    pub z: [f64; 2],
    pub samples: usize,
    pub shell: f64,
    pub max_steps: usize,
    pub transplant: bool,
    pub map: MapConfig,
    /// Largest accepted max_k ρ_k / min_k ρ_k.
    pub band_limit: f64,
}

impl Default for Params {
    fn default() -> Self {
        let wos = WosConfig::new(0, 0);
        Self {
            profile: ProfileSource::new("exp(-abs(x))"),
            tame: TameMode::Majorant,
            ks: vec![4, 5, 6, 7, 8],
            z: [0.0, 4.0],
            samples: 100_000,
            shell: wos.shell,
            max_steps: wos.max_steps,
            transplant: false,
            map: MapConfig::default().with_nodes(1025),
            band_limit: 10.0,
        }
    }
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<()> {
    let n = p.tame.apply(p.profile.load()?)?;
    let cfg = WosConfig { shell: p.shell, max_steps: p.max_steps, ..WosConfig::new(p.samples, ctx.seed()) };
    let map = if p.transplant { Some(build_map(&GraphDomain::new(Side::Above, n.clone())?, &p.map)?) } else { None };
    let z = C64::new(p.z[0], p.z[1]);
    let rep = claim5_comparability(&n, &p.ks, z, &cfg, map.as_ref())?;
    let checks = vec![Check::new(
        "comparability band",
        rep.band <= p.band_limit,
        format!("max/min ratio {} (limit {})", rep.band, p.band_limit),
    )];

    let mut out = ctx.out_dir()?;
    out.write_with("claim5.csv", |b| rep.write_csv(b))?;
    out.write_json("report.json", &json!({ "profile": n.spec(), "report": rep, "checks": checks }))?;
    let mut plot = Plot::new("k", "rho_k", &["k", "ratio", "stderr"]).series_with_errors("rho_k", 2, 3);
    for r in &rep.rows {
        plot.row(vec![r.k as f64, r.ratio, r.ratio_stderr]);
    }
    out.plot("claim5", &plot)?;

    print_checks(&checks);
    for r in &rep.rows {
        println!("k = {}: rho = {:.6} ± {:.6}", r.k, r.ratio, r.ratio_stderr);
    }
    ctx.finish(out)?;
    failed(&checks)
}
