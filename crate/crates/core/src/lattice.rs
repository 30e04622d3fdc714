//! The SL₂(ℤ)-orbit of i, coprime pair counts and the lower bound for
//! ∫ log⁺|λ| along horizontal lines.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{self, anharmonic_index, apply_anharmonic, lambda_log, ModularConfig, C64};
use crate::quad::{integrate, QuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnimodularMatrix {
    pub alpha: i64,
    pub beta: i64,
    pub gamma: i64,
    pub delta: i64,
}

impl UnimodularMatrix {
    pub const IDENTITY: Self = Self { alpha: 1, beta: 0, gamma: 0, delta: 1 };

    pub fn new(alpha: i64, beta: i64, gamma: i64, delta: i64) -> Result<Self> {
        if alpha * delta - beta * gamma != 1 {
            return Err(Error::Domain(format!(
                "det [[{alpha},{beta}],[{gamma},{delta}]] ≠ 1"
            )));
        }
        Ok(Self { alpha, beta, gamma, delta })
    }

    pub fn det(&self) -> i64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn apply(&self, tau: C64) -> C64 {
        modular::mobius(self.entries(), tau)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            alpha: self.alpha * o.alpha + self.beta * o.gamma,
            beta: self.alpha * o.beta + self.beta * o.delta,
            gamma: self.gamma * o.alpha + self.delta * o.gamma,
            delta: self.gamma * o.beta + self.delta * o.delta,
        }
    }

    /// Numerator and denominator of Mi = (βδ+αγ)/(γ²+δ²) + i/(γ²+δ²).
    pub fn image_of_i(&self) -> (i64, i64) {
        (
            self.beta * self.delta + self.alpha * self.gamma,
            self.gamma * self.gamma + self.delta * self.delta,
        )
    }
}

/// Mi stored as the exact rationals re_num/den + i/den.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub matrix: UnimodularMatrix,
    pub re_num: i64,
    pub den: i64,
}

impl OrbitPoint {
    pub fn from_matrix(matrix: UnimodularMatrix) -> Self {
        let (re_num, den) = matrix.image_of_i();
        Self { matrix, re_num, den }
    }
    pub fn re(&self) -> f64 {
        self.re_num as f64 / self.den as f64
    }
    pub fn im(&self) -> f64 {
        1.0 / self.den as f64
    }
    pub fn point(&self) -> C64 {
        C64::new(self.re(), self.im())
    }
    /// λ(Mi), from the anharmonic action on λ(i) = 1/2.
    pub fn lambda_value(&self) -> C64 {
        apply_anharmonic(anharmonic_index(self.matrix.entries()), C64::new(0.5, 0.0))
    }
}

/// All M with Mi = i and entries bounded by `bound` in absolute value.
pub fn stabilizer_search(bound: i64) -> Vec<UnimodularMatrix> {
    let r = -bound..=bound;
    let mut out = Vec::new();
    for a in r.clone() {
        for b in r.clone() {
            for c in r.clone() {
                for d in r.clone() {
                    let m = UnimodularMatrix { alpha: a, beta: b, gamma: c, delta: d };
                    if m.det() == 1 && m.image_of_i() == (0, 1) {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

/// {±I, ±[[0,−1],[1,0]]}, by exhaustive search over entries |·| ≤ 2.
pub fn stabilizer_of_i() -> Vec<UnimodularMatrix> {
    let s = stabilizer_search(2);
    debug_assert_eq!(s.len(), 4);
    s
}

/// (g, x, y) with a·x + b·y = g = gcd(|a|, |b|) ≥ 0.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Coprime integer pairs (γ, δ) ≠ (0, 0) with γ² + δ² ≤ X, ordered by (γ²+δ², γ, δ).
pub fn coprime_pairs(x: f64) -> Vec<(i64, i64)> {
    let r = x.max(0.0).sqrt().floor() as i64;
    let mut v = Vec::new();
    for g in -r..=r {
        let rem = x - (g * g) as f64;
        let dmax = rem.max(0.0).sqrt().floor() as i64;
        for d in -dmax..=dmax {
            if num_integer::gcd(g, d) == 1 {
                v.push((g, d));
            }
        }
    }
    v.sort_by_key(|&(g, d)| (g * g + d * d, g, d));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoprimeStats {
    pub x: f64,
    pub count: u64,
    /// Σ 1/(γ²+δ²).
    pub inv_sum: f64,
    /// count/(πX).
    pub density: f64,
    /// inv_sum / ln X.
    pub log_ratio: f64,
}

/// Count and reciprocal-norm sum over coprime pairs in the disk γ²+δ² ≤ X.
pub fn coprime_stats(x: f64) -> Result<CoprimeStats> {
    if !(x >= 2.0) {
        return Err(Error::Domain(format!("coprime_stats needs X ≥ 2, got {x}")));
    }
    let r = x.sqrt().floor() as i64;
    let (mut count, mut inv_sum) = (0u64, 0.0);
    // one quadrant γ > 0, δ ≥ 0, times 4; summed by increasing norm per row
    for g in 1..=r {
        let dmax = (x - (g * g) as f64).max(0.0).sqrt().floor() as i64;
        let mut row = 0.0;
        for d in (0..=dmax).rev() {
            if num_integer::gcd(g, d) == 1 {
                count += 1;
                row += 1.0 / (g * g + d * d) as f64;
            }
        }
        inv_sum += row;
    }
    count *= 4;
    inv_sum *= 4.0;
    Ok(CoprimeStats {
        x,
        count,
        inv_sum,
        density: count as f64 / (std::f64::consts::PI * x),
        log_ratio: inv_sum / x.ln(),
    })
}

/// Orbit points with |Re| < 1 and Im ≥ `min_im`, one per distinct point.
///
/// Returns the points and the number of raw representatives before
/// deduplication; the ratio is 4 (the stabilizer order).
pub fn orbit_points(min_im: f64) -> (Vec<OrbitPoint>, usize) {
    // tolerance so that min_im = 1/n keeps the row n
    let nmax = (1.0 / min_im) * (1.0 + 1e-12);
    let mut raw = 0usize;
    let mut kept: HashMap<(i64, i64), OrbitPoint> = HashMap::new();
    for (g, d) in coprime_pairs(nmax) {
        // αδ − βγ = 1
        let (_, s, t) = extended_gcd(d, g);
        let (alpha, beta) = (s, -t);
        let n = g * g + d * d;
        let num = beta * d + alpha * g;
        // shifting (α, β) by k(γ, δ) moves the numerator by k·n
        let k0 = -num.div_euclid(n);
        // the stabilizer rotates (γ, δ) by quarter turns; keep γ ≥ 0, δ > 0
        let canonical = g >= 0 && d > 0;
        for k in [k0, k0 - 1] {
            let (a, b) = (alpha + k * g, beta + k * d);
            let m = UnimodularMatrix { alpha: a, beta: b, gamma: g, delta: d };
            let p = OrbitPoint::from_matrix(m);
            if p.re_num.abs() >= n {
                continue;
            }
            raw += 1;
            let slot = kept.entry((p.re_num, p.den)).or_insert(p);
            if canonical {
                *slot = p;
            }
        }
    }
    let mut out: Vec<OrbitPoint> = kept.into_values().collect();
    out.sort_by_key(|p| (p.den, p.matrix.gamma, p.matrix.delta, p.re_num));
    (out, raw)
}

/// Orbit points with |Re| < 1 and Im ≥ 2y.
pub fn orbit_in_strip(y: f64) -> Result<Vec<OrbitPoint>> {
    if !(y > 1e-6 && y <= 0.1) {
        return Err(Error::Domain(format!("orbit_in_strip needs y in (1e-6, 0.1], got {y}")));
    }
    Ok(orbit_points(2.0 * y).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    pub y: f64,
    pub sum: f64,
    pub ratio: f64,
    pub points: usize,
    /// Σ Im split by the value λ(τ_k) ∈ {1/2, 2, −1}.
    pub by_value: Vec<(f64, f64)>,
}

/// Σ Im τ_k over orbit points with Im τ_k ≥ 2y, and its ratio to log(1/y).
pub fn lemma_c_lattice_sum(y: f64) -> Result<LatticeSum> {
    if !(1e-6..=0.1).contains(&y) {
        return Err(Error::Domain(format!("lattice sum needs y in [1e-6, 0.1], got {y}")));
    }
    let (pts, _) = orbit_points(2.0 * y);
    let mut by_value: Vec<(f64, f64)> = vec![(0.5, 0.0), (2.0, 0.0), (-1.0, 0.0)];
    let mut sum = 0.0;
    for p in &pts {
        sum += p.im();
        let v = p.lambda_value().re;
        if let Some(slot) = by_value.iter_mut().find(|s| (s.0 - v).abs() < 1e-9) {
            slot.1 += p.im();
        }
    }
    Ok(LatticeSum {
        y,
        sum,
        ratio: sum / (1.0 / y).ln(),
        points: pts.len(),
        by_value,
    })
}

/// Fractions p/q in [lo, hi] with q ≤ qmax.
pub fn farey_points(lo: f64, hi: f64, qmax: i64) -> Vec<f64> {
    let mut v = Vec::new();
    for q in 1..=qmax.max(1) {
        let p0 = (lo * q as f64).ceil() as i64;
        let p1 = (hi * q as f64).floor() as i64;
        for p in p0..=p1 {
            if num_integer::gcd(p, q) == 1 {
                v.push(p as f64 / q as f64);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCIntegral {
    pub y: f64,
    pub value: f64,
    pub error: f64,
    pub ratio: f64,
    pub evals: usize,
}

/// Cusps p/q whose λ-peak at height y rises above log⁺ = 0 have q² ≲ 1.13/y.
pub fn cusp_denominator_bound(y: f64) -> i64 {
    ((1.2 / y).sqrt().ceil() as i64).max(2)
}

fn log_plus_lambda(x: f64, y: f64, cfg: &ModularConfig) -> f64 {
    match lambda_log(C64::new(x, y), cfg) {
        Ok(l) => l.ln_abs().max(0.0),
        Err(_) => f64::NAN,
    }
}

/// ∫_a^b log⁺|λ(x+iy)| dx with breakpoints at the peak-carrying cusps.
pub fn log_plus_integral(y: f64, a: f64, b: f64) -> Result<LemmaCIntegral> {
    log_plus_integral_tol(y, a, b, LEMMA_C_TOL)
}

/// Default absolute tolerance of the log⁺|λ| quadrature.
pub const LEMMA_C_TOL: f64 = 1e-4;

pub fn log_plus_integral_tol(y: f64, a: f64, b: f64, abs_tol: f64) -> Result<LemmaCIntegral> {
    let cfg = ModularConfig::default();
    let breaks = farey_points(a, b, cusp_denominator_bound(y));
    let qc = QuadConfig::new(abs_tol, 1e-10).with_panels(4 * breaks.len() + 50_000);
    let r = integrate(|x| log_plus_lambda(x, y, &cfg), a, b, &breaks, &qc);
    if !r.converged {
        return Err(Error::Quadrature {
            a,
            b,
            value: r.value,
            error: r.error,
            evals: r.evals,
            reason: format!("log⁺|λ| at y = {y}"),
        });
    }
    Ok(LemmaCIntegral {
        y,
        value: r.value,
        error: r.error,
        ratio: r.value / (1.0 / y).ln(),
        evals: r.evals,
    })
}

/// ∫₀² log⁺|λ(x+iy)| dx and its ratio to log(1/y).
pub fn lemma_c_integral(y: f64) -> Result<LemmaCIntegral> {
    lemma_c_integral_tol(y, LEMMA_C_TOL)
}

pub fn lemma_c_integral_tol(y: f64, abs_tol: f64) -> Result<LemmaCIntegral> {
    if !(1e-5..=0.1).contains(&y) {
        return Err(Error::Domain(format!("the log⁺|λ| scan needs y in [1e-5, 0.1], got {y}")));
    }
    log_plus_integral_tol(y, 0.0, 2.0, abs_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCRow {
    pub y: f64,
    pub integral: f64,
    pub integral_ratio: f64,
    pub quad_error: f64,
    pub lattice_sum: f64,
    pub lattice_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCScan {
    pub rows: Vec<LemmaCRow>,
    /// Smallest integral ratio across the scan.
    pub c_hat: f64,
    pub integral_spread: f64,
    pub lattice_c: f64,
    pub lattice_spread: f64,
}

/// Both sides of the bound at y = 10⁻¹·2⁻ʲ, j = 0..=jmax.
pub fn lemma_c_scan(jmax: u32) -> Result<LemmaCScan> {
    let mut rows = Vec::new();
    for j in 0..=jmax {
        let y = 0.1 * 2f64.powi(-(j as i32));
        let i = lemma_c_integral(y)?;
        let l = lemma_c_lattice_sum(y)?;
        rows.push(LemmaCRow {
            y,
            integral: i.value,
            integral_ratio: i.ratio,
            quad_error: i.error,
            lattice_sum: l.sum,
            lattice_ratio: l.ratio,
        });
    }
    let span = |f: &dyn Fn(&LemmaCRow) -> f64| {
        let lo = rows.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi / lo)
    };
    let (c_hat, integral_spread) = span(&|r| r.integral_ratio);
    let (lattice_c, lattice_spread) = span(&|r| r.lattice_ratio);
    Ok(LemmaCScan { rows, c_hat, integral_spread, lattice_c, lattice_spread })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenCheck {
    pub y: f64,
    /// (1/2π)∫ log|Λ(re^{iθ}) − a| dθ − log|Λ(0) − a|.
    pub circle_side: f64,
    /// Σ_{|q_k| < r} log(r/|q_k|) over the a-points.
    pub point_side: f64,
    pub a_points: usize,
    pub rel_diff: f64,
}

/// Jensen's formula for Λ(q) = λ(τ), q = e^{iπτ}, on |q| = e^{−πy}.
///
/// `a` must be one of the orbit values 1/2, 2, −1 so that the a-points are
/// orbit points of i.
pub fn jensen_check(a: f64, y: f64) -> Result<JensenCheck> {
    if ![0.5, 2.0, -1.0].contains(&a) {
        return Err(Error::Domain(format!("a-points are enumerated only for a ∈ {{1/2, 2, −1}}, got {a}")));
    }
    let cfg = ModularConfig::default();
    let f = |x: f64| -> f64 {
        match lambda_log(C64::new(x, y), &cfg) {
            Ok(l) if l.ln_abs() > 40.0 => l.ln_abs(),
            Ok(l) => (l.value() - a).norm().ln(),
            Err(_) => f64::NAN,
        }
    };
    let breaks = farey_points(-1.0, 1.0, cusp_denominator_bound(y));
    let qc = QuadConfig::new(1e-9, 1e-9).with_panels(breaks.len() + 40_000);
    // θ = πx, so (1/2π)∫dθ = (1/2)∫_{−1}^{1} dx
    let circle = 0.5 * integrate(f, -1.0, 1.0, &breaks, &qc).value - a.abs().ln();

    let (pts, _) = orbit_points(y);
    let mut point_side = 0.0;
    let mut count = 0;
    for p in pts.iter().filter(|p| p.im() > y) {
        if (p.lambda_value().re - a).abs() < 1e-9 {
            point_side += std::f64::consts::PI * (p.im() - y);
            count += 1;
        }
    }
    Ok(JensenCheck {
        y,
        circle_side: circle,
        point_side,
        a_points: count,
        rel_diff: (circle - point_side).abs() / point_side.abs().max(1e-300),
    })
}

/// Orbit dump with columns alpha,beta,gamma,delta,re,im.
pub fn write_orbit_csv<W: Write>(w: W, pts: &[OrbitPoint]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["alpha", "beta", "gamma", "delta", "re", "im"])?;
    for p in pts {
        let m = p.matrix;
        wr.write_record([
            m.alpha.to_string(),
            m.beta.to_string(),
            m.gamma.to_string(),
            m.delta.to_string(),
            format!("{:.17e}", p.re()),
            format!("{:.17e}", p.im()),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn save_orbit_csv(path: &Path, pts: &[OrbitPoint]) -> Result<()> {
    write_orbit_csv(std::fs::File::create(path)?, pts)
}

/// Read an orbit dump; points are recomputed from the matrices.
pub fn read_orbit_csv(path: &Path) -> Result<Vec<OrbitPoint>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let int = |i: usize| -> Result<i64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse { pos: i, msg: format!("bad integer in orbit row {rec:?}") })
        };
        let m = UnimodularMatrix::new(int(0)?, int(1)?, int(2)?, int(3)?)?;
        out.push(OrbitPoint::from_matrix(m));
    }
    Ok(out)
}
