use clap::Args;
use nevlab::confmap::{
    boundary_curve, build_map, build_map_unchecked, default_probe_grid, deriv_bounds, kellogg_h_check, n_bound_check,
    sup_inverse_deriv, v_monotonicity, ConformalMap, GraphDomain, MapConfig, Side,
};
use nevlab::profiles::audit_grid;
use nevlab::C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::profile::TameMode;
use super::{failed, print_checks, Check, Ctx};
use crate::config::{flag_overrides, ProfileSource};
use crate::error::CliResult;
use crate::output::{csv_text, sci, Plot};

/// Node count below which the builder's resolution preconditions are waived.
const PRODUCTION_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Above,
    Below,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Above => Side::Above,
            SideArg::Below => Side::Below,
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
    tame: Option<TameMode>,
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    /// Boundary node count before refinement.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    x_max: Option<f64>,
}

impl Flags {
    pub fn overrides(&self) -> Value {
        let mut v = flag_overrides(&json!({
            "tame": self.tame,
            "side": self.side,
            "map": { "nodes": self.nodes, "x_max": self.x_max },
        }));
        if let Some(src) = ProfileSource::overrides(&self.expr, &self.table) {
            v["profile"] = src;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub round_trip: f64,
    pub reflection: f64,
    pub translation: f64,
    pub dilation: f64,
    pub axis: f64,
    pub far_field: f64,
    /// Relative change of sup|w′|/inf|w′| under node doubling.
    pub resolution_ratio: f64,
    /// Relative change of w on the probe grid under node doubling.
    pub resolution_map: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            round_trip: 1e-6,
            reflection: 1e-8,
            translation: 1e-6,
            dilation: 1e-6,
            axis: 1e-10,
            far_field: 1e-2,
            resolution_ratio: 0.05,
            resolution_map: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimParams {
    pub heights: Vec<f64>,
    pub points: usize,
    pub x_end: f64,
    pub bound_points: usize,
    pub bound_x_end: f64,
}

impl Default for ClaimParams {
    fn default() -> Self {
        Self { heights: vec![0.0, 0.1, 1.0], points: 100, x_end: 64.0, bound_points: 200, bound_x_end: 256.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub profile: ProfileSource,
    pub tame: TameMode,
    pub side: SideArg,
    pub map: MapConfig,
    /// Compactification constant A of the Kellogg check; the map's own A when null.
    pub kellogg_a: Option<f64>,
    pub kellogg_s: Vec<f64>,
    pub claims: ClaimParams,
    pub tol: Tolerances,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            profile: ProfileSource::new("exp(-sqrt(abs(x)))"),
            tame: TameMode::Auto,
            side: SideArg::Below,
            map: MapConfig::default(),
            kellogg_a: None,
            kellogg_s: (0..=8).map(|k| 0.5 * 2f64.powi(-k)).chain([1e-4]).collect(),
            claims: ClaimParams::default(),
            tol: Tolerances::default(),
        }
    }
}

/// 10 × 10 probe points, x ∈ [−20, 20], y ∈ [10⁻², 10²].
fn probe() -> Vec<C64> {
    let mut g = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            g.push(C64::new(-20.0 + 40.0 * i as f64 / 9.0, 10f64.powf(-2.0 + 4.0 * j as f64 / 9.0)));
        }
    }
    g
}

fn build(d: &GraphDomain, cfg: &MapConfig) -> CliResult<ConformalMap> {
    Ok(if cfg.nodes < PRODUCTION_NODES { build_map_unchecked(d, cfg)? } else { build_map(d, cfg)? })
}

#[derive(Debug, Serialize)]
struct Resolution {
    nodes: usize,
    refined_nodes: usize,
    max_map_change: f64,
    ratio_change: f64,
    converged: bool,
}

pub fn run(ctx: &Ctx, p: &Params) -> CliResult<()> {
    let m = p.tame.apply(p.profile.load()?)?;
    let side: Side = p.side.into();
    let domain = GraphDomain::new(side, m.clone())?;
    let map = build(&domain, &p.map)?;
    let mut warnings = Vec::new();
    if p.map.nodes < PRODUCTION_NODES {
        warnings.push(format!("{} nodes is below the production minimum {PRODUCTION_NODES}", p.map.nodes));
    }
    let mut checks = Vec::new();
    let d = &map.diagnostics;
    checks.push(Check::new("dilation", (d.dilation - 1.0).abs() < p.tol.dilation, format!("Im w(iy)/y = {}", d.dilation)));
    checks.push(Check::new("axis", d.axis_residual < p.tol.axis, format!("{:e}", d.axis_residual)));

    let mut round_trip: f64 = 0.0;
    let mut reflection: f64 = 0.0;
    let mut outside = 0;
    for i in 0..200 {
        let z = C64::new(-30.0 + 60.0 * (i % 20) as f64 / 19.0, 10f64.powf(-2.0 + 4.0 * (i / 20) as f64 / 9.0));
        let w = map.forward(z);
        if !map.domain().contains(w) {
            outside += 1;
        }
        round_trip = round_trip.max((map.inverse(w)? - z).norm() / z.norm());
        reflection = reflection.max((map.forward(C64::new(-z.re, z.im)) + w.conj()).norm());
    }
    checks.push(Check::new("round trip", round_trip < p.tol.round_trip && outside == 0, format!("{round_trip:e}, {outside} images outside")));
    checks.push(Check::new("reflection", reflection < p.tol.reflection, format!("{reflection:e}")));

    let ln0 = m.ln_value(0.0);
    let constant = audit_grid().iter().all(|&x| m.ln_value(x) == ln0);
    let mut translation = None;
    if constant {
        let shift = C64::new(0.0, side.sign() * m.value(0.0));
        let r = probe()
            .into_iter()
            .map(|z| (map.forward(z) - z - shift).norm().max((map.forward_deriv(z) - 1.0).norm()))
            .fold(0.0, f64::max);
        checks.push(Check::new("translation", r < p.tol.translation, format!("{r:e}")));
        translation = Some(r);
    }

    let bounds = deriv_bounds(&map, &default_probe_grid());
    checks.push(Check::new(
        "derivative bounds",
        bounds.inf > 0.0 && bounds.sup.is_finite(),
        format!("inf {} sup {}", bounds.inf, bounds.sup),
    ));
    let far = (map.forward_deriv(C64::new(0.0, 1000.0)) - 1.0).norm();
    checks.push(Check::new("far field", far < p.tol.far_field, format!("|w'(1000i) - 1| = {far:e}")));

    let kellogg = kellogg_h_check(&m, p.kellogg_a.unwrap_or(map.a_shift), &p.kellogg_s)?;
    // for m ≡ c the limit of H″ is −2i(A − c) rather than −2iA
    let (h2_target, h2_dev, kellogg_ok) = match (constant, kellogg.rows.last()) {
        (true, Some(r)) => {
            let target = 2.0 * (kellogg.a - m.value(0.0));
            let dev = (C64::new(r.h2.0, r.h2.1) + C64::new(0.0, target)).norm();
            (target, dev, kellogg.h1_deviation < kellogg.tolerance && dev < kellogg.tolerance)
        }
        _ => (2.0 * kellogg.a, kellogg.h2_deviation, kellogg.passed),
    };
    checks.push(Check::new(
        "kellogg",
        kellogg_ok,
        format!("|H'-1| {:e}, |H''+{h2_target}i| {h2_dev:e}, tol {:e}", kellogg.h1_deviation, kellogg.tolerance),
    ));

    let refined_cfg = p.map.with_nodes(2 * p.map.nodes - 1);
    let fine = build(&domain, &refined_cfg)?;
    let max_map_change = probe().into_iter().map(|z| (map.forward(z) - fine.forward(z)).norm() / fine.forward(z).norm()).fold(0.0, f64::max);
    let fine_bounds = deriv_bounds(&fine, &default_probe_grid());
    let ratio_change = (bounds.ratio / fine_bounds.ratio - 1.0).abs();
    let converged = max_map_change < p.tol.resolution_map && ratio_change < p.tol.resolution_ratio;
    if !converged {
        warnings.push(format!(
            "resolution: map changes by {max_map_change:e} and |w'| ratio by {ratio_change:e} under node doubling"
        ));
    }
    let resolution = Resolution { nodes: d.nodes, refined_nodes: fine.diagnostics.nodes, max_map_change, ratio_change, converged };

    let mut out = ctx.out_dir()?;
    let mut claims = Value::Null;
    if side == Side::Below {
        let mono = v_monotonicity(&map, &p.claims.heights, p.claims.points, p.claims.x_end)?;
        let c = sup_inverse_deriv(&map);
        let bound = n_bound_check(&map, c, p.claims.bound_points, p.claims.bound_x_end)?;
        checks.push(Check::new("boundary monotonicity", mono.violations.is_empty(), format!("{} violations", mono.violations.len())));
        checks.push(Check::new(
            "graph bound",
            bound.violations.is_empty(),
            format!("C = {c}, max n/(C m(x/C)) = {} on [0, {}]", bound.max_ratio, bound.x_end),
        ));
        let curve = boundary_curve(&map, 200)?;
        let mut plot = Plot::new("x", "height", &["x", "n", "m"]).series("n(x)", 2).series("m(x)", 3);
        for &(x, n) in &curve.samples {
            plot.row(vec![x, n, m.value(x)]);
        }
        out.plot("boundary", &plot)?;
        claims = json!({ "monotonicity": mono, "graph_bound": bound, "symmetric": curve.symmetric });
    }

    let rows: Vec<Vec<String>> =
        kellogg.rows.iter().map(|r| vec![sci(r.s), sci(r.h1.0), sci(r.h1.1), sci(r.h2.0), sci(r.h2.1)]).collect();
    out.write("kellogg.csv", csv_text(&["s", "h1_re", "h1_im", "h2_re", "h2_im"], &rows).as_bytes())?;
    let mut plot = Plot::new("s", "deviation", &["s", "h1", "h2"]).log_x().log_y().series("|H'-1|", 2).series("|H''-limit|", 3);
    for r in &kellogg.rows {
        let h2 = C64::new(r.h2.0, r.h2.1) + C64::new(0.0, h2_target);
        plot.row(vec![r.s, C64::new(r.h1.0 - 1.0, r.h1.1).norm(), h2.norm()]);
    }
    out.plot("kellogg", &plot)?;
    out.write_json(
        "diag.json",
        &json!({
            "profile": m.spec(),
            "side": side,
            "build": map.diagnostics,
            "round_trip": round_trip,
            "reflection": reflection,
            "translation": translation,
            "deriv_bounds": bounds,
            "far_field": far,
            "kellogg": kellogg,
            "resolution": resolution,
            "claims": claims,
            "checks": checks,
            "warnings": warnings,
        }),
    )?;

    print_checks(&checks);
    for w in &warnings {
        println!("warning: {w}");
    }
    ctx.finish(out)?;
    failed(&checks)
}
