//! Harmonic measure in graph domains by walk-on-spheres, and the comparisons
//! built on it: dt/t² comparability on dyadic plateaus, Herglotz domination
//! and the dyadic divergence series.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::confmap::{ConformalMap, GraphDomain, Side};
use crate::error::{Error, Result};
use crate::modular::C64;
use crate::profiles::Profile;
use crate::quad::{integrate, QuadConfig};

/// Lower boundary y = φ(x) of a domain {y > φ(x)}.
#[derive(Debug, Clone)]
pub enum WosBoundary {
    Flat,
    Constant(f64),
    Graph { profile: Profile, sign: f64 },
}

impl WosBoundary {
    pub fn above(profile: &Profile) -> Self {
        WosBoundary::Graph { profile: profile.clone(), sign: 1.0 }
    }

    pub fn height(&self, x: f64) -> f64 {
        match self {
            WosBoundary::Flat => 0.0,
            WosBoundary::Constant(c) => *c,
            WosBoundary::Graph { profile, sign } => sign * profile.value(x),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            WosBoundary::Graph { profile, .. } => profile.lipschitz(),
            _ => 0.0,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            WosBoundary::Flat => "H".into(),
            WosBoundary::Constant(c) => format!("H({c})"),
            WosBoundary::Graph { profile, sign } => {
                let s = if *sign > 0.0 { "+" } else { "-" };
                format!("H({s}m), m = {}", profile.spec().describe())
            }
        }
    }
}

impl From<&GraphDomain> for WosBoundary {
    fn from(d: &GraphDomain) -> Self {
        WosBoundary::Graph { profile: d.profile.clone(), sign: d.side.sign() }
    }
}

/// Boundary arc {t + iφ(t): lo ≤ t ≤ hi}; `hi` may be +∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetArc {
    pub lo: f64,
    pub hi: f64,
}

impl TargetArc {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WosConfig {
    pub samples: usize,
    pub seed: u64,
    /// Absorption shell width.
    pub shell: f64,
    pub max_steps: usize,
}

impl WosConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, shell: 1e-4, max_steps: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMeasureEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Walks that terminated and entered the estimate.
    pub samples: usize,
    /// Walks stopped by the step guard.
    pub excluded: usize,
    pub mean_steps: f64,
    pub domain: String,
    pub target: TargetArc,
    pub z: (f64, f64),
    pub seed: u64,
}

impl HarmonicMeasureEstimate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Walks per RNG stream; stream s serves walks s·CHUNK .. (s+1)·CHUNK.
const CHUNK: usize = 4096;

/// Exact ω_H([lo, hi], z) = (arg-difference)/π.
pub fn half_plane_measure(target: TargetArc, z: C64) -> f64 {
    let f = |t: f64| {
        if t == f64::INFINITY {
            PI / 2.0
        } else if t == f64::NEG_INFINITY {
            -PI / 2.0
        } else {
            ((t - z.re) / z.im).atan()
        }
    };
    (f(target.hi) - f(target.lo)) / PI
}

fn wos_with_streams(
    boundary: &WosBoundary,
    target: TargetArc,
    z: C64,
    cfg: &WosConfig,
    stream_base: u64,
) -> Result<HarmonicMeasureEstimate> {
    if !(z.im > boundary.height(z.re)) {
        return Err(Error::Domain(format!("{z} is not above the boundary")));
    }
    if cfg.samples == 0 {
        return Err(Error::Domain("need at least one walk".into()));
    }
    let scale = 1.0 / (1.0 + boundary.lipschitz().powi(2)).sqrt();
    let (mut hits, mut done, mut excluded, mut steps_total) = (0usize, 0usize, 0usize, 0usize);
    let mut remaining = cfg.samples;
    let mut stream = stream_base;
    while remaining > 0 {
        let batch = remaining.min(CHUNK);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        for _ in 0..batch {
            let (mut x, mut y) = (z.re, z.im);
            let mut absorbed = false;
            for step in 0..cfg.max_steps {
                // the graph is at distance ≥ (y − φ(x))/√(1+L²), so this disc stays inside
                let r = (y - boundary.height(x)) * scale;
                if r < cfg.shell {
                    absorbed = true;
                    steps_total += step;
                    break;
                }
                let a: f64 = rng.random_range(0.0..2.0 * PI);
                x += r * a.cos();
                y += r * a.sin();
            }
            if absorbed {
                done += 1;
                if target.contains(x) {
                    hits += 1;
                }
            } else {
                excluded += 1;
            }
        }
        remaining -= batch;
        stream += 1;
    }
    if done == 0 {
        return Err(Error::NonConvergence("no walk terminated".into()));
    }
    let p = hits as f64 / done as f64;
    Ok(HarmonicMeasureEstimate {
        value: p,
        stderr: (p * (1.0 - p) / done as f64).sqrt(),
        samples: done,
        excluded,
        mean_steps: steps_total as f64 / done as f64,
        domain: boundary.tag(),
        target,
        z: (z.re, z.im),
        seed: cfg.seed,
    })
}

/// Walk-on-spheres estimate of ω(target, z) in {y > φ(x)}.
pub fn wos_measure(boundary: &WosBoundary, target: TargetArc, z: C64, cfg: &WosConfig) -> Result<HarmonicMeasureEstimate> {
    wos_with_streams(boundary, target, z, cfg, 0)
}

/// ∫_lo^hi dt/t² = 1/lo − 1/hi.
pub fn inverse_square_mass(lo: f64, hi: f64) -> f64 {
    1.0 / lo - 1.0 / hi
}

/// Middle third J_k = [2^k, 2^k + 2^{k−3}] of the plateau interval
/// I_k = [2^k − 2^{k−3}, 2^k + 2^{k−2}].
pub fn middle_third(k: u32) -> (f64, f64) {
    let u = 2f64.powi(k as i32 - 3);
    (8.0 * u, 9.0 * u)
}

/// ω_{H(+m)}(arc over [lo, hi], z) by transplantation: ω_H of the real
/// preimages of the arc end points, seen from W(z).
pub fn transplanted_measure(map: &ConformalMap, lo: f64, hi: f64, z: C64) -> Result<f64> {
    if map.side != Side::Above {
        return Err(Error::Domain("transplantation is set up for maps onto H(+m)".into()));
    }
    let pre = |x: f64| map.boundary_preimage(x);
    let zeta = map.inverse(z)?;
    Ok(half_plane_measure(TargetArc::new(pre(lo), pre(hi)), zeta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim5Row {
    pub k: u32,
    pub n_k: f64,
    pub j_lo: f64,
    pub j_hi: f64,
    pub weight: f64,
    pub estimate: HarmonicMeasureEstimate,
    pub ratio: f64,
    pub ratio_stderr: f64,
    pub transplanted_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim5Report {
    pub z: (f64, f64),
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<Claim5Row>,
    /// max_k ρ_k / min_k ρ_k.
    pub band: f64,
}

impl Claim5Report {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "ratio", "stderr", "transplanted"])?;
        for r in &self.rows {
            out.write_record([
                r.k.to_string(),
                format!("{:.10e}", r.ratio),
                format!("{:.10e}", r.ratio_stderr),
                r.transplanted_ratio.map(|t| format!("{t:.10e}")).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// ρ_k = ω_{H(n*)}(J_k + i n_k, z) / ∫_{J_k} dt/t² for each k in `ks`.
///
/// Each k uses its own block of RNG streams, so rows are reproducible
/// individually. With `map` (onto H(+n*)) each row also carries the
/// transplanted value.
pub fn claim5_comparability(
    n_star: &Profile,
    ks: &[u32],
    z: C64,
    cfg: &WosConfig,
    map: Option<&ConformalMap>,
) -> Result<Claim5Report> {
    let plateaus = n_star
        .plateaus()
        .ok_or_else(|| Error::Domain("n* must be a plateau profile".into()))?;
    let boundary = WosBoundary::above(n_star);
    let mut rows = Vec::new();
    for &k in ks {
        let (lo, hi) = (7.0 * 2f64.powi(k as i32 - 3), 10.0 * 2f64.powi(k as i32 - 3));
        if !plateaus.iter().any(|p| p.lo == lo && p.hi == hi) {
            return Err(Error::Domain(format!("n* has no plateau on [{lo}, {hi}]")));
        }
        let (j_lo, j_hi) = middle_third(k);
        let weight = inverse_square_mass(j_lo, j_hi);
        let est = wos_with_streams(&boundary, TargetArc::new(j_lo, j_hi), z, cfg, (k as u64) << 32)?;
        let transplanted_ratio = match map {
            Some(m) => Some(transplanted_measure(m, j_lo, j_hi, z)? / weight),
            None => None,
        };
        rows.push(Claim5Row {
            k,
            n_k: n_star.value(2f64.powi(k as i32)),
            j_lo,
            j_hi,
            weight,
            ratio: est.value / weight,
            ratio_stderr: est.stderr / weight,
            estimate: est,
            transplanted_ratio,
        });
    }
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(Claim5Report { z: (z.re, z.im), samples: cfg.samples, seed: cfg.seed, rows, band: max / min })
}

/// Poisson extension (1/π)∫ u(t) y/((t−x)²+y²) dt, written as
/// (1/π)∫_{−π/2}^{π/2} u(x + y tan θ) dθ.
pub fn poisson_extension<U: Fn(f64) -> f64>(u: U, zeta: C64, breaks: &[f64], cfg: &QuadConfig) -> (f64, f64) {
    let tb: Vec<f64> = breaks.iter().map(|t| ((t - zeta.re) / zeta.im).atan()).collect();
    let h = PI / 2.0;
    let r = integrate(|th| u(zeta.re + zeta.im * th.tan()), -h, h, &tb, cfg);
    (r.value / PI, r.error / PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HerglotzProbe {
    pub zeta: (f64, f64),
    pub lhs: f64,
    pub rhs: f64,
    pub error: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerglotzReport {
    pub c: f64,
    pub boundary_samples: usize,
    pub probes: Vec<HerglotzProbe>,
    pub all_hold: bool,
}

/// P[u](ζ) ≤ P[v_b](ζ) + c·Im ζ at the probes, after auditing u ≤ v_b on
/// `audit_points`.
pub fn herglotz_domination_check<U: Fn(f64) -> f64, V: Fn(f64) -> f64>(
    u: U,
    vb: V,
    c: f64,
    probes: &[C64],
    audit_points: &[f64],
    breaks: &[f64],
) -> Result<HerglotzReport> {
    if c < 0.0 {
        return Err(Error::Domain(format!("c = {c} must be ≥ 0")));
    }
    for &t in audit_points {
        if u(t) > vb(t) {
            return Err(Error::Audit(format!("u({t}) = {} exceeds v({t}) = {}", u(t), vb(t))));
        }
    }
    let cfg = QuadConfig::new(1e-10, 1e-10).with_panels(20_000);
    let mut out = Vec::new();
    for &z in probes {
        let (pu, eu) = poisson_extension(&u, z, breaks, &cfg);
        let (pv, ev) = poisson_extension(&vb, z, breaks, &cfg);
        let rhs = pv + c * z.im;
        let error = eu + ev;
        out.push(HerglotzProbe { zeta: (z.re, z.im), lhs: pu, rhs, error, holds: pu <= rhs + error + 1e-12 });
    }
    let all_hold = out.iter().all(|p| p.holds);
    Ok(HerglotzReport { c, boundary_samples: audit_points.len(), probes: out, all_hold })
}

/// Piecewise-linear interpolant of (t, u) samples, constant beyond the ends.
pub fn sampled_function(samples: Vec<(f64, f64)>) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        let s = &samples;
        let k = s.partition_point(|p| p.0 <= x);
        if k == 0 {
            return s[0].1;
        }
        if k >= s.len() {
            return s[s.len() - 1].1;
        }
        let (a, b) = (s[k - 1], s[k]);
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSeries {
    /// 2^{−k}·log(1/n*(2^k)) for k = 0..=K.
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// First k with n*(2^k) < 1.
    pub first_small_index: Option<u32>,
}

impl DivergenceSeries {
    /// Least-squares slope of the partial sums against k over the upper half.
    pub fn tail_slope(&self) -> f64 {
        let n = self.partial_sums.len();
        let lo = n / 2;
        let xs: Vec<f64> = (lo..n).map(|k| k as f64).collect();
        let ys = &self.partial_sums[lo..];
        crate::charfun::linear_fit(&xs, ys).1
    }

    /// S_K − S_k.
    pub fn tail_beyond(&self, k: usize) -> f64 {
        self.partial_sums[self.partial_sums.len() - 1] - self.partial_sums[k]
    }
}

/// Partial sums of Σ_{k≤K} 2^{−k} log(1/n*(2^k)), evaluated in log form.
pub fn divergence_series(n_star: &Profile, k_max: u32) -> DivergenceSeries {
    let mut terms = Vec::new();
    let mut partial_sums = Vec::new();
    let mut first_small_index = None;
    let mut acc = 0.0;
    for k in 0..=k_max {
        let ln = n_star.ln_value(2f64.powi(k as i32));
        if ln < 0.0 && first_small_index.is_none() {
            first_small_index = Some(k);
        }
        let t = -ln * 2f64.powi(-(k as i32));
        acc += t;
        terms.push(t);
        partial_sums.push(acc);
    }
    DivergenceSeries { terms, partial_sums, first_small_index }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confmap::{build_map, MapConfig};
    use crate::profiles::{parse_profile, tame_majorant, tame_minorant};

    #[test]
    fn flat_examples() {
        let cfg = WosConfig::new(100_000, 1);
        let z = C64::new(0.0, 1.0);
        let a = wos_measure(&WosBoundary::Flat, TargetArc::new(-1.0, 1.0), z, &cfg).unwrap();
        assert!((a.value - 0.5).abs() < 3.0 * a.stderr, "{a:?}");
        let b = wos_measure(&WosBoundary::Flat, TargetArc::new(0.0, f64::INFINITY), z, &cfg).unwrap();
        assert!((b.value - 0.5).abs() < 3.0 * b.stderr);
        assert_eq!(a.excluded, 0);
    }

    #[test]
    fn shifted_domain() {
        let cfg = WosConfig::new(100_000, 2);
        let z = C64::new(1.0, 2.0);
        let want = half_plane_measure(TargetArc::new(-1.0, 1.0), z - C64::new(0.0, 1.0));
        assert!((want - 2f64.atan() / PI).abs() < 1e-15);
        let e = wos_measure(&WosBoundary::Constant(1.0), TargetArc::new(-1.0, 1.0), z, &cfg).unwrap();
        assert!((e.value - want).abs() < 3.0 * e.stderr);
    }

    #[test]
    fn seed_reproducible() {
        let cfg = WosConfig::new(20_000, 9);
        let z = C64::new(0.3, 0.7);
        let t = TargetArc::new(-0.5, 2.0);
        let a = wos_measure(&WosBoundary::Flat, t, z, &cfg).unwrap();
        let b = wos_measure(&WosBoundary::Flat, t, z, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stderr_scaling() {
        let z = C64::new(0.0, 1.0);
        let t = TargetArc::new(-1.0, 1.0);
        let a = wos_measure(&WosBoundary::Flat, t, z, &WosConfig::new(25_000, 3)).unwrap();
        let b = wos_measure(&WosBoundary::Flat, t, z, &WosConfig::new(100_000, 3)).unwrap();
        let r = a.stderr / b.stderr;
        assert!((r / 2.0 - 1.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn middle_third_mass() {
        // k = 4: J = [16, 18], 1/16 − 1/18 = 1/144
        let (lo, hi) = middle_third(4);
        assert_eq!((lo, hi), (16.0, 18.0));
        assert!((inverse_square_mass(lo, hi) - 1.0 / 144.0).abs() < 1e-17);
    }

    #[test]
    fn claim5_small_run() {
        let n = tame_majorant(&parse_profile("exp(-abs(x))").unwrap()).unwrap();
        let map = build_map(&GraphDomain::new(Side::Above, n.clone()).unwrap(), &MapConfig::default().with_nodes(1025)).unwrap();
        let r = claim5_comparability(&n, &[4, 5, 6], C64::new(0.0, 4.0), &WosConfig::new(200_000, 42), Some(&map)).unwrap();
        for row in &r.rows {
            assert!(row.ratio > 0.0 && row.ratio.is_finite());
            // Monte Carlo against transplantation through the conformal map
            let t = row.transplanted_ratio.unwrap();
            assert!((row.ratio - t).abs() < 4.0 * row.ratio_stderr + 0.02 * t, "{row:?}");
        }
        assert!(r.band < 10.0);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("k,ratio,stderr,transplanted\n"));
    }

    #[test]
    fn claim5_needs_plateaus() {
        let n = parse_profile("exp(-abs(x))").unwrap();
        assert!(claim5_comparability(&n, &[4], C64::new(0.0, 4.0), &WosConfig::new(10, 1), None).is_err());
    }

    #[test]
    fn transplantation_on_constant_domain() {
        let m = parse_profile("0.5").unwrap();
        let map = build_map(&GraphDomain::new(Side::Above, m).unwrap(), &MapConfig::default().with_nodes(513)).unwrap();
        let z = C64::new(1.0, 2.0);
        let got = transplanted_measure(&map, -1.0, 1.0, z).unwrap();
        let want = half_plane_measure(TargetArc::new(-1.0, 1.0), z - C64::new(0.0, 0.5));
        assert!((got - want).abs() < 1e-8);
    }

    #[test]
    fn herglotz_examples() {
        let probes: Vec<C64> = (0..20).map(|i| C64::new(-5.0 + 0.5 * i as f64, 0.2 + 0.1 * i as f64)).collect();
        let audit: Vec<f64> = (-100..=100).map(|i| i as f64 * 0.1).collect();
        let bump = |t: f64| 1.0 / (1.0 + t * t);
        let r = herglotz_domination_check(bump, bump, 0.0, &probes, &audit, &[]).unwrap();
        for p in &r.probes {
            assert!((p.lhs - p.rhs).abs() < 1e-9);
            // P[1/(1+t²)](x+iy) = (1+y)/(x² + (1+y)²)
            let (x, y) = p.zeta;
            assert!((p.lhs - (1.0 + y) / (x * x + (1.0 + y).powi(2))).abs() < 1e-9);
        }
        let r = herglotz_domination_check(|_| 0.0, |_| 0.0, 1.0, &probes, &audit, &[]).unwrap();
        assert!(r.all_hold);
        assert!(herglotz_domination_check(|_| 1.0, |_| 0.0, 1.0, &probes, &audit, &[]).is_err());
    }

    #[test]
    fn herglotz_on_lambda_boundary() {
        let n = tame_majorant(&parse_profile("exp(-abs(x))").unwrap()).unwrap();
        let map = build_map(&GraphDomain::new(Side::Above, n).unwrap(), &MapConfig::default().with_nodes(1025)).unwrap();
        let cfg = crate::modular::ModularConfig::default();
        let ts: Vec<f64> = (0..=2000).map(|i| -16.0 + 32.0 * i as f64 / 2000.0).collect();
        let samples: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let l = crate::modular::lambda_log(map.boundary_point(t), &cfg).unwrap();
                (t, l.ln_abs().max(0.0))
            })
            .collect();
        let u = sampled_function(samples.clone());
        let probes: Vec<C64> = (0..20).map(|i| C64::new(-8.0 + 0.8 * i as f64, 0.05 + 0.1 * i as f64)).collect();
        let v = sampled_function(samples);
        let r = herglotz_domination_check(u, v, 0.1, &probes, &ts, &ts).unwrap();
        assert!(r.all_hold);
        assert!(r.probes.iter().all(|p| p.rhs - p.lhs > 0.09 * p.zeta.1));
    }

    #[test]
    fn divergence_series_examples() {
        let e = divergence_series(&parse_profile("exp(-abs(x))").unwrap(), 30);
        assert!(e.terms.iter().all(|t| (t - 1.0).abs() < 1e-12));
        assert!((e.partial_sums[30] - 31.0).abs() < 1e-9);
        let s = divergence_series(&parse_profile("exp(-sqrt(abs(x)))").unwrap(), 60);
        for (k, t) in s.terms.iter().enumerate() {
            assert!((t - 2f64.powf(-(k as f64) / 2.0)).abs() < 1e-12);
        }
        assert!(s.tail_beyond(40) < 1e-3);
        let limit = 1.0 / (1.0 - 0.5f64.sqrt());
        assert!((s.partial_sums[60] - limit).abs() < 1e-8);
        let m = divergence_series(&tame_majorant(&parse_profile("exp(-abs(x))").unwrap()).unwrap(), 36);
        for k in 3..=36 {
            assert!((m.terms[k] - 0.125).abs() < 1e-12, "{k}");
        }
        assert!(m.tail_slope() >= 0.125 - 1e-12);
        assert_eq!(m.first_small_index, Some(1));
    }

    #[test]
    fn minorant_series_converges() {
        let s = divergence_series(&tame_minorant(&parse_profile("exp(-sqrt(abs(x)))").unwrap()).unwrap(), 40);
        assert!(s.terms[40] < 1e-4);
    }
}
