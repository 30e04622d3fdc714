//! Half-plane Nevanlinna characteristics A, B, C, S and the Ahlfors–Shimizu
//! form S_o.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::C64;
use crate::quad::{integrate, QuadConfig, QuadResult};

/// Above this modulus log|f| goes through 1/f.
const BIG: f64 = 1e12;

/// A function meromorphic on a neighbourhood of the closed upper half-plane.
///
/// `poles` must list every pole in H with multiplicity; it is the caller's
/// responsibility that the list is complete up to the radius used.
pub trait Meromorphic: Send + Sync {
    fn eval(&self, z: C64) -> C64;
    fn deriv(&self, z: C64) -> C64;
    fn poles(&self) -> Vec<(C64, u32)> {
        Vec::new()
    }
    fn name(&self) -> String;

    /// ln|f(z)|, +∞ at poles.
    fn log_abs(&self, z: C64) -> f64 {
        let v = self.eval(z);
        if !v.is_finite() {
            return f64::INFINITY;
        }
        let n = v.norm();
        if n > BIG {
            -(1.0 / v).norm().ln()
        } else {
            n.ln()
        }
    }

    /// ρ_f = |f′|/(1+|f|²).
    fn spherical_derivative(&self, z: C64) -> f64 {
        let v = self.eval(z);
        let d = self.deriv(z);
        let n = v.norm();
        if n > 1e100 {
            d.norm() / n / n
        } else {
            d.norm() / (1.0 + n * n)
        }
    }
}

pub type MeroRef = Arc<dyn Meromorphic>;

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub C64);

impl Meromorphic for Constant {
    fn eval(&self, _: C64) -> C64 {
        self.0
    }
    fn deriv(&self, _: C64) -> C64 {
        C64::new(0.0, 0.0)
    }
    fn name(&self) -> String {
        format!("const({})", self.0)
    }
    fn spherical_derivative(&self, _: C64) -> f64 {
        0.0
    }
}

/// (az + b)/(cz + d).
#[derive(Debug, Clone, Copy)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mobius {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(Error::Domain("degenerate Möbius map".into()));
        }
        Ok(Self { a, b, c, d })
    }
    pub fn identity() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Self { a: o, b: z, c: z, d: o }
    }
}

impl Meromorphic for Mobius {
    fn eval(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }
    fn deriv(&self, z: C64) -> C64 {
        let den = self.c * z + self.d;
        (self.a * self.d - self.b * self.c) / (den * den)
    }
    fn poles(&self) -> Vec<(C64, u32)> {
        if self.c.norm() == 0.0 {
            return Vec::new();
        }
        let p = -self.d / self.c;
        if p.im > 0.0 {
            vec![(p, 1)]
        } else {
            Vec::new()
        }
    }
    fn name(&self) -> String {
        format!("mobius({},{},{},{})", self.a, self.b, self.c, self.d)
    }
    fn spherical_derivative(&self, z: C64) -> f64 {
        // |ad − bc|/(|cz+d|² + |az+b|²), finite at the pole
        let det = (self.a * self.d - self.b * self.c).norm();
        det / ((self.c * z + self.d).norm_sqr() + (self.a * z + self.b).norm_sqr())
    }
}

/// c·e^{kz}.
#[derive(Debug, Clone, Copy)]
pub struct ExpAffine {
    pub c: C64,
    pub k: C64,
}

impl ExpAffine {
    /// e^{−iz}, with |f(x+iy)| = e^{y}.
    pub fn exp_minus_iz() -> Self {
        Self { c: C64::new(1.0, 0.0), k: C64::new(0.0, -1.0) }
    }
}

impl Meromorphic for ExpAffine {
    fn eval(&self, z: C64) -> C64 {
        self.c * (self.k * z).exp()
    }
    fn deriv(&self, z: C64) -> C64 {
        self.k * self.eval(z)
    }
    fn name(&self) -> String {
        format!("{}*exp({}z)", self.c, self.k)
    }
    fn log_abs(&self, z: C64) -> f64 {
        self.c.norm().ln() + (self.k * z).re
    }
    fn spherical_derivative(&self, z: C64) -> f64 {
        if self.c.norm() == 0.0 {
            return 0.0;
        }
        self.k.norm() / (2.0 * self.log_abs(z).cosh())
    }
}

/// f₁·f₂ with a caller-supplied pole list.
#[derive(Clone)]
pub struct Product {
    pub f1: MeroRef,
    pub f2: MeroRef,
    pub pole_list: Vec<(C64, u32)>,
}

impl Meromorphic for Product {
    fn eval(&self, z: C64) -> C64 {
        self.f1.eval(z) * self.f2.eval(z)
    }
    fn deriv(&self, z: C64) -> C64 {
        self.f1.deriv(z) * self.f2.eval(z) + self.f1.eval(z) * self.f2.deriv(z)
    }
    fn poles(&self) -> Vec<(C64, u32)> {
        self.pole_list.clone()
    }
    fn name(&self) -> String {
        format!("({})*({})", self.f1.name(), self.f2.name())
    }
    fn log_abs(&self, z: C64) -> f64 {
        self.f1.log_abs(z) + self.f2.log_abs(z)
    }
}

/// f₁+f₂ with a caller-supplied pole list.
#[derive(Clone)]
pub struct Sum {
    pub f1: MeroRef,
    pub f2: MeroRef,
    pub pole_list: Vec<(C64, u32)>,
}

impl Meromorphic for Sum {
    fn eval(&self, z: C64) -> C64 {
        self.f1.eval(z) + self.f2.eval(z)
    }
    fn deriv(&self, z: C64) -> C64 {
        self.f1.deriv(z) + self.f2.deriv(z)
    }
    fn poles(&self) -> Vec<(C64, u32)> {
        self.pole_list.clone()
    }
    fn name(&self) -> String {
        format!("({})+({})", self.f1.name(), self.f2.name())
    }
}

/// 1/(f − a) with a caller-supplied pole list (the a-points of f).
#[derive(Clone)]
pub struct ShiftInvert {
    pub f: MeroRef,
    pub a: C64,
    pub pole_list: Vec<(C64, u32)>,
}

impl Meromorphic for ShiftInvert {
    fn eval(&self, z: C64) -> C64 {
        1.0 / (self.f.eval(z) - self.a)
    }
    fn deriv(&self, z: C64) -> C64 {
        let g = self.f.eval(z) - self.a;
        -self.f.deriv(z) / (g * g)
    }
    fn poles(&self) -> Vec<(C64, u32)> {
        self.pole_list.clone()
    }
    fn name(&self) -> String {
        format!("1/(({})-{})", self.f.name(), self.a)
    }
    fn log_abs(&self, z: C64) -> f64 {
        let lf = self.f.log_abs(z);
        if lf > 35.0 + self.a.norm().ln().max(0.0) {
            -lf
        } else {
            -(self.f.eval(z) - self.a).norm().ln()
        }
    }
    fn spherical_derivative(&self, z: C64) -> f64 {
        // ρ_{1/g} = ρ_g with g = f − a
        let lf = self.f.log_abs(z);
        if lf > 200.0 {
            // |g| ≈ |f|, so ρ ≈ |f′|/|f|²
            let v = self.f.eval(z);
            let d = self.f.deriv(z);
            if v.is_finite() && d.is_finite() {
                return d.norm() / v.norm() / v.norm();
            }
            return (d / v).norm() * (-lf).exp();
        }
        let g = self.f.eval(z) - self.a;
        self.f.deriv(z).norm() / (1.0 + g.norm_sqr())
    }
}

/// The a-points of e^{−iz} in H: −arg a − 2πk + i ln|a|, |·| < rmax.
pub fn exp_minus_iz_a_points(a: C64, rmax: f64) -> Vec<(C64, u32)> {
    let y = a.norm().ln();
    if y <= 0.0 {
        return Vec::new();
    }
    let x0 = -a.arg();
    let kmax = (rmax / (2.0 * PI)).ceil() as i64 + 1;
    (-kmax..=kmax)
        .map(|k| C64::new(x0 - 2.0 * PI * k as f64, y))
        .filter(|w| w.norm() < rmax)
        .map(|w| (w, 1))
        .collect()
}

/// A closure-backed function.
pub struct FnMeromorphic<F, D>
where
    F: Fn(C64) -> C64 + Send + Sync,
    D: Fn(C64) -> C64 + Send + Sync,
{
    pub f: F,
    pub df: D,
    pub pole_list: Vec<(C64, u32)>,
    pub label: String,
}

impl<F, D> Meromorphic for FnMeromorphic<F, D>
where
    F: Fn(C64) -> C64 + Send + Sync,
    D: Fn(C64) -> C64 + Send + Sync,
{
    fn eval(&self, z: C64) -> C64 {
        (self.f)(z)
    }
    fn deriv(&self, z: C64) -> C64 {
        (self.df)(z)
    }
    fn poles(&self) -> Vec<(C64, u32)> {
        self.pole_list.clone()
    }
    fn name(&self) -> String {
        self.label.clone()
    }
}

fn log_plus(f: &dyn Meromorphic, z: C64) -> f64 {
    f.log_abs(z).max(0.0)
}

/// Real parts of poles lying within 1e-8 of the real axis, and the angles of
/// those within 1e-8 of the circle |z| = r: quadrature breakpoints.
fn contour_breaks(f: &dyn Meromorphic, r: f64) -> (Vec<f64>, Vec<f64>) {
    let mut real = Vec::new();
    let mut arc = Vec::new();
    for (w, _) in f.poles() {
        if w.im < 1e-8 {
            real.push(w.re.abs());
        }
        if (w.norm() - r).abs() < 1e-8 {
            arc.push(w.arg());
        }
    }
    (real, arc)
}

fn characteristic_quad() -> QuadConfig {
    QuadConfig::new(1e-12, 1e-6).with_panels(20_000)
}

fn check(r: QuadResult, a: f64, b: f64, what: &str) -> Result<QuadResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(Error::Quadrature {
            a,
            b,
            value: r.value,
            error: r.error,
            evals: r.evals,
            reason: what.into(),
        })
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::Domain(format!("characteristics need r > 1, got {r}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// C(r) = 2 Σ_{1<|w|<r} (1/|w| − |w|/r²) sin(arg w), with multiplicity.
pub fn char_c(f: &dyn Meromorphic, r: f64) -> f64 {
    f.poles()
        .iter()
        .filter(|(w, _)| w.im > 0.0 && w.norm() > 1.0 && w.norm() < r)
        .map(|(w, k)| {
            let m = w.norm();
            2.0 * *k as f64 * (1.0 / m - m / (r * r)) * (w.im / m)
        })
        .sum()
}

/// A(r) = (1/π)∫₁^r (1/t² − 1/r²)[log⁺|f(t)| + log⁺|f(−t)|] dt.
pub fn char_a(f: &dyn Meromorphic, r: f64) -> Result<Estimate> {
    check_r(r)?;
    let (breaks, _) = contour_breaks(f, r);
    let g = |t: f64| {
        let w = 1.0 / (t * t) - 1.0 / (r * r);
        w * (log_plus(f, C64::new(t, 0.0)) + log_plus(f, C64::new(-t, 0.0)))
    };
    let q = check(integrate(g, 1.0, r, &breaks, &characteristic_quad()), 1.0, r, "A(r)")?;
    Ok(Estimate { value: q.value.max(0.0) / PI, error: q.error / PI })
}

/// B(r) = (2/(πr))∫₀^π log⁺|f(re^{iθ})| sin θ dθ.
pub fn char_b(f: &dyn Meromorphic, r: f64) -> Result<Estimate> {
    check_r(r)?;
    let (_, breaks) = contour_breaks(f, r);
    let g = |th: f64| log_plus(f, C64::from_polar(r, th)) * th.sin();
    let q = check(integrate(g, 0.0, PI, &breaks, &characteristic_quad()), 0.0, PI, "B(r)")?;
    let k = 2.0 / (PI * r);
    Ok(Estimate { value: k * q.value.max(0.0), error: k * q.error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsPolicy {
    pub outer_rel: f64,
    pub inner_rel: f64,
    pub max_panels: usize,
}

impl Default for AsPolicy {
    fn default() -> Self {
        Self { outer_rel: 1e-4, inner_rel: 1e-6, max_panels: 2000 }
    }
}

/// (1/π)∫₁^r (1/t − t/r²)[∫₀^π ρ(te^{iθ})² sin θ dθ] t dt for a density ρ.
pub fn ahlfors_shimizu_density<R: Fn(C64) -> f64>(rho: R, r: f64, policy: &AsPolicy) -> Result<Estimate> {
    check_r(r)?;
    let inner_cfg = QuadConfig::new(1e-300, policy.inner_rel).with_panels(policy.max_panels);
    let mut inner_fail = None;
    let mut inner = |t: f64| -> f64 {
        let q = integrate(
            |th: f64| {
                let p = rho(C64::from_polar(t, th));
                p * p * th.sin()
            },
            0.0,
            PI,
            &[PI / 2.0],
            &inner_cfg,
        );
        if !q.converged && inner_fail.is_none() {
            inner_fail = Some((t, q));
        }
        q.value
    };
    let outer_cfg = QuadConfig::new(1e-300, policy.outer_rel).with_panels(policy.max_panels);
    let breaks: Vec<f64> = (1..).map(|k| 2f64.powi(k)).take_while(|b| *b < r).collect();
    let q = integrate(|t| (1.0 / t - t / (r * r)) * t * inner(t), 1.0, r, &breaks, &outer_cfg);
    if let Some((t, iq)) = inner_fail {
        return Err(Error::Quadrature {
            a: 0.0,
            b: PI,
            value: iq.value,
            error: iq.error,
            evals: iq.evals,
            reason: format!("S_o inner integral at t = {t}"),
        });
    }
    let q = check(q, 1.0, r, "S_o outer integral")?;
    Ok(Estimate { value: q.value.max(0.0) / PI, error: q.error / PI })
}

/// Ahlfors–Shimizu characteristic S_o(r; f).
pub fn ahlfors_shimizu(f: &dyn Meromorphic, r: f64, policy: &AsPolicy) -> Result<Estimate> {
    ahlfors_shimizu_density(|z| f.spherical_derivative(z), r, policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRow {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub s: f64,
    pub s_o: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTable {
    pub function: String,
    pub rows: Vec<CharacteristicRow>,
}

impl CharacteristicTable {
    pub fn r_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }

    /// Indices where S_o drops by more than twice the combined error.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.rows
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].s_o < w[0].s_o - 2.0 * (w[0].err + w[1].err))
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "A", "B", "C", "S", "So", "err"])?;
        for r in &self.rows {
            wr.write_record(
                [r.r, r.a, r.b, r.c, r.s, r.s_o, r.err].map(|v| format!("{:.12e}", v + 0.0)),
            )?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// A, B, C, S = A+B+C and S_o on an increasing grid of radii > 1.
pub fn characteristic_table(f: &dyn Meromorphic, r_grid: &[f64], policy: &AsPolicy) -> Result<CharacteristicTable> {
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("r_grid must be strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let a = char_a(f, r)?;
        let b = char_b(f, r)?;
        let c = char_c(f, r);
        let so = ahlfors_shimizu(f, r, policy)?;
        rows.push(CharacteristicRow {
            r,
            a: a.value,
            b: b.value,
            c,
            s: a.value + b.value + c,
            s_o: so.value,
            err: a.error + b.error + so.error,
        });
    }
    Ok(CharacteristicTable { function: f.name(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityLine {
    /// "A", "B" or "C".
    pub characteristic: String,
    /// "product" or "sum".
    pub op: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub r: f64,
    pub lines: Vec<SubadditivityLine>,
    pub violations: usize,
}

/// D(f₁f₂) ≤ D(f₁)+D(f₂) and D(f₁+f₂) ≤ D(f₁)+D(f₂)+log 2 for D ∈ {A, B, C}.
pub fn subadditivity_check(
    f1: &dyn Meromorphic,
    f2: &dyn Meromorphic,
    product: &dyn Meromorphic,
    sum: &dyn Meromorphic,
    r: f64,
) -> Result<SubadditivityReport> {
    let mut lines = Vec::new();
    let ln2 = std::f64::consts::LN_2;
    let ab: [(&str, fn(&dyn Meromorphic, f64) -> Result<Estimate>); 2] = [("A", char_a), ("B", char_b)];
    for (name, d) in ab {
        let (e1, e2) = (d(f1, r)?, d(f2, r)?);
        for (op, g, extra) in [("product", product, 0.0), ("sum", sum, ln2)] {
            let e = d(g, r)?;
            let tol = e.error + e1.error + e2.error + 1e-12;
            let rhs = e1.value + e2.value + extra;
            lines.push(SubadditivityLine {
                characteristic: name.into(),
                op: op.into(),
                lhs: e.value,
                rhs,
                tolerance: tol,
                holds: e.value <= rhs + tol,
            });
        }
    }
    let (c1, c2) = (char_c(f1, r), char_c(f2, r));
    for (op, g, extra) in [("product", product, 0.0), ("sum", sum, ln2)] {
        let c = char_c(g, r);
        let rhs = c1 + c2 + extra;
        lines.push(SubadditivityLine {
            characteristic: "C".into(),
            op: op.into(),
            lhs: c,
            rhs,
            tolerance: 1e-12,
            holds: c <= rhs + 1e-12,
        });
    }
    let violations = lines.iter().filter(|l| !l.holds).count();
    Ok(SubadditivityReport { r, lines, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonReport {
    pub zeta: (f64, f64),
    pub span: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub tail_budget: f64,
    pub quadrature_error: f64,
    pub holds: bool,
    /// Set when the tail budget exceeds half the right-hand side.
    pub tail_dominates: bool,
}

/// log⁺|f(ζ)| ≤ (Im ζ/π)∫ log⁺|f(t)|/|t−ζ|² dt, integrated over [−T, T].
///
/// The tail budget is max(log⁺|f(±T)|) times the Poisson mass of |t| > T.
pub fn poisson_majorization_check(f: &dyn Meromorphic, zeta: C64, span: f64) -> Result<PoissonReport> {
    if !(zeta.im > 0.0) || !(span > 0.0) {
        return Err(Error::Domain("need Im ζ > 0 and T > 0".into()));
    }
    let (x, y) = (zeta.re, zeta.im);
    let lhs = log_plus(f, zeta);
    let g = |t: f64| log_plus(f, C64::new(t, 0.0)) / ((t - x).powi(2) + y * y);
    let mut breaks = vec![x];
    breaks.extend((0..=40).map(|k| y * 2f64.powi(k)).flat_map(|d| [x - d, x + d]));
    let q = integrate(g, -span, span, &breaks, &QuadConfig::new(1e-12, 1e-8).with_panels(20_000));
    let rhs = y / PI * q.value;
    let mass_out = 1.0 - (((span - x) / y).atan() + ((span + x) / y).atan()) / PI;
    let edge = log_plus(f, C64::new(span, 0.0)).max(log_plus(f, C64::new(-span, 0.0)));
    let tail_budget = edge * mass_out.max(0.0);
    let qerr = y / PI * q.error;
    Ok(PoissonReport {
        zeta: (x, y),
        span,
        lhs,
        rhs,
        tail_budget,
        quadrature_error: qerr,
        holds: lhs <= rhs + tail_budget + qerr + 1e-12,
        tail_dominates: tail_budget > 0.5 * rhs && tail_budget > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeVerdict {
    Bounded,
    Growing,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub r_grid: Vec<f64>,
    pub s_o: Vec<f64>,
    pub s_o_err: Vec<f64>,
    /// RMS deviation from the mean over the upper half of the grid, relative to the mean.
    pub flat_residual: f64,
    /// Least-squares slope of S_o against ln r over the whole grid, and its t-statistic.
    pub log_slope: f64,
    pub log_slope_t: f64,
    /// Exponent of a power-law fit S_o ∝ r^p, and its t-statistic.
    pub power_exponent: f64,
    pub power_t: f64,
    pub verdict: TypeVerdict,
}

/// Least-squares fit y = a + b·x; returns (a, b, t-statistic of b).
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let b = sxy / sxx;
    let a = ym - b * xm;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    let t = if se > 0.0 { b / se } else if b > 0.0 { f64::INFINITY } else { 0.0 };
    (a, b, t)
}

/// Verdict from S_o values on an increasing grid.
///
/// Bounded when S_o vanishes or its upper-half-grid values stay within 5%
/// RMS of their mean; growing when S_o increases against ln r, or as a power
/// of r, with slope t-statistic above 4; inconclusive otherwise.
pub fn classify_growth(r_grid: &[f64], s_o: &[f64], s_o_err: &[f64]) -> IndicatorReport {
    let n = r_grid.len();
    let half = &s_o[n / 2..];
    let mean = half.iter().sum::<f64>() / half.len() as f64;
    let rms = (half.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / half.len() as f64).sqrt();
    let flat_residual = if mean > 0.0 { rms / mean } else { 0.0 };
    let lr: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let (_, log_slope, log_slope_t) = if n >= 3 { linear_fit(&lr, s_o) } else { (0.0, 0.0, 0.0) };
    let pos: Vec<(f64, f64)> = lr.iter().zip(s_o).filter(|(_, v)| **v > 0.0).map(|(a, v)| (*a, v.ln())).collect();
    let (power_exponent, power_t) = if pos.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = pos.into_iter().unzip();
        let (_, p, t) = linear_fit(&x, &y);
        (p, t)
    } else {
        (0.0, 0.0)
    };
    let all_zero = s_o.iter().all(|v| v.abs() <= 1e-12);
    let verdict = if all_zero || flat_residual < 0.05 {
        TypeVerdict::Bounded
    } else if (log_slope > 0.0 && log_slope_t > 4.0) || (power_exponent > 0.0 && power_t > 4.0) {
        TypeVerdict::Growing
    } else {
        TypeVerdict::Inconclusive
    };
    IndicatorReport {
        r_grid: r_grid.to_vec(),
        s_o: s_o.to_vec(),
        s_o_err: s_o_err.to_vec(),
        flat_residual,
        log_slope,
        log_slope_t,
        power_exponent,
        power_t,
        verdict,
    }
}

/// Bounded-type indicator from S_o(r; f) on `r_grid`.
pub fn bounded_type_indicator(f: &dyn Meromorphic, r_grid: &[f64], policy: &AsPolicy) -> Result<IndicatorReport> {
    if r_grid.len() < 3 {
        return Err(Error::Domain("indicator needs at least three radii".into()));
    }
    let mut s = Vec::new();
    let mut e = Vec::new();
    for &r in r_grid {
        let v = ahlfors_shimizu(f, r, policy)?;
        s.push(v.value);
        e.push(v.error);
    }
    Ok(classify_growth(r_grid, &s, &e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn arc<M: Meromorphic + 'static>(m: M) -> MeroRef {
        Arc::new(m)
    }

    fn pole_at(w: C64, k: u32) -> FnMeromorphic<impl Fn(C64) -> C64 + Send + Sync, impl Fn(C64) -> C64 + Send + Sync> {
        let kk = k as i32;
        FnMeromorphic {
            f: move |z: C64| (z - w).powi(-kk),
            df: move |z: C64| -(kk as f64) * (z - w).powi(-kk - 1),
            pole_list: vec![(w, k)],
            label: format!("pole^{k}"),
        }
    }

    #[test]
    fn c_examples() {
        assert!((char_c(&pole_at(c(0.0, 2.0), 1), 4.0) - 0.75).abs() < 1e-15);
        assert!((char_c(&pole_at(c(0.0, 2.0), 2), 4.0) - 1.5).abs() < 1e-15);
        assert_eq!(char_c(&ExpAffine::exp_minus_iz(), 4.0), 0.0);
        // poles outside 1 < |w| < r do not count
        assert_eq!(char_c(&pole_at(c(0.0, 0.5), 1), 4.0), 0.0);
        assert_eq!(char_c(&pole_at(c(0.0, 5.0), 1), 4.0), 0.0);
    }

    #[test]
    fn bounded_functions_have_zero_a_b() {
        let f = Mobius::new(c(1.0, 0.0), c(-1.0, 0.0) * c(0.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        // (z − i)/(z + i) maps H into the unit disk; |f| = 1 on ℝ up to rounding
        for r in [2.0, 10.0] {
            assert!(char_a(&f, r).unwrap().value < 1e-14);
            assert_eq!(char_b(&f, r).unwrap().value, 0.0);
        }
    }

    #[test]
    fn b_of_exp_is_one() {
        let f = ExpAffine::exp_minus_iz();
        for r in [4.0, 16.0, 64.0] {
            let b = char_b(&f, r).unwrap();
            assert!((b.value - 1.0).abs() < 1e-6, "{r}: {}", b.value);
            assert_eq!(char_a(&f, r).unwrap().value, 0.0);
        }
    }

    #[test]
    fn a_of_identity_against_trapezoid() {
        let f = Mobius::identity();
        for r in [4.0, 30.0] {
            // oracle: (2/π)∫₁^r log t (1/t² − 1/r²) dt by 10⁶-panel trapezoid
            let oracle = 2.0 / PI
                * crate::quad::trapezoid(|t| t.ln() * (1.0 / (t * t) - 1.0 / (r * r)), 1.0, r, 1_000_000);
            let a = char_a(&f, r).unwrap().value;
            assert!((a / oracle - 1.0).abs() < 1e-5, "{a} {oracle}");
        }
    }

    #[test]
    fn s_o_of_constant_vanishes() {
        let s = ahlfors_shimizu(&Constant(c(3.0, 1.0)), 8.0, &AsPolicy::default()).unwrap();
        assert_eq!(s.value, 0.0);
        let rep = bounded_type_indicator(&Constant(c(2.0, 0.0)), &[2.0, 4.0, 8.0], &AsPolicy::default()).unwrap();
        assert_eq!(rep.verdict, TypeVerdict::Bounded);
    }

    fn midpoint_oracle(f: &dyn Meromorphic, r: f64, nt: usize, nth: usize) -> f64 {
        let (ht, hth) = ((r - 1.0) / nt as f64, PI / nth as f64);
        let mut s = 0.0;
        for i in 0..nt {
            let t = 1.0 + ht * (i as f64 + 0.5);
            let mut inner = 0.0;
            for j in 0..nth {
                let th = hth * (j as f64 + 0.5);
                inner += f.spherical_derivative(C64::from_polar(t, th)).powi(2) * th.sin();
            }
            s += (1.0 / t - t / (r * r)) * t * inner * hth;
        }
        s * ht / PI
    }

    #[test]
    fn s_o_matches_dense_grid() {
        let corpus: Vec<MeroRef> = vec![
            arc(Mobius::identity()),
            arc(ExpAffine::exp_minus_iz()),
            arc(Mobius::new(c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, -2.0)).unwrap()),
        ];
        for f in &corpus {
            let s = ahlfors_shimizu(f.as_ref(), 16.0, &AsPolicy::default()).unwrap();
            let o = midpoint_oracle(f.as_ref(), 16.0, 2000, 400);
            assert!((s.value / o - 1.0).abs() < 0.01, "{}: {} vs {}", f.name(), s.value, o);
        }
    }

    #[test]
    fn s_o_of_identity_is_monotone_and_bounded() {
        let f = Mobius::identity();
        let mut prev = 0.0;
        for r in [4.0, 16.0, 64.0] {
            let s = ahlfors_shimizu(&f, r, &AsPolicy::default()).unwrap();
            assert!(s.value >= prev - 2.0 * s.error);
            // image area of H ∩ {|z| > 1} on the sphere is finite
            assert!(s.value < 1.0);
            prev = s.value;
        }
        let rep = bounded_type_indicator(&f, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0], &AsPolicy::default()).unwrap();
        assert_eq!(rep.verdict, TypeVerdict::Bounded);
    }

    #[test]
    fn s_and_s_o_differ_by_bounded_amount_for_exp() {
        let f = ExpAffine::exp_minus_iz();
        let grid: Vec<f64> = (2..=7).map(|k| 2f64.powi(k)).collect();
        let t = characteristic_table(&f, &grid, &AsPolicy::default()).unwrap();
        let diffs: Vec<f64> = t.rows.iter().map(|r| r.s - r.s_o).collect();
        for r in &t.rows {
            assert_eq!(r.s, r.a + r.b + r.c);
        }
        assert!(t.monotonicity_violations().is_empty());
        let spread = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - diffs.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spread < 0.5, "{diffs:?}");
    }

    #[test]
    fn first_fundamental_theorem_for_exp() {
        let f: MeroRef = arc(ExpAffine::exp_minus_iz());
        let grid: Vec<f64> = (2..=7).map(|k| 2f64.powi(k)).collect();
        for a in [c(2.0, 0.0), c(-3.0, 1.0)] {
            let g = ShiftInvert { f: f.clone(), a, pole_list: exp_minus_iz_a_points(a, 200.0) };
            let mut diffs = Vec::new();
            for &r in &grid {
                let sf = char_a(f.as_ref(), r).unwrap().value + char_b(f.as_ref(), r).unwrap().value;
                let sg = char_a(&g, r).unwrap().value + char_b(&g, r).unwrap().value + char_c(&g, r);
                diffs.push(sg - sf);
            }
            let spread = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - diffs.iter().copied().fold(f64::INFINITY, f64::min);
            // bounded over the grid: no trend beyond a single constant
            assert!(diffs.iter().all(|d| d.abs() < 3.0), "{a}: {diffs:?}");
            assert!(spread < 1.0, "{a}: {diffs:?}");
        }
    }

    #[test]
    fn subadditivity_examples() {
        let one: MeroRef = arc(Constant(c(1.0, 0.0)));
        let p = Product { f1: one.clone(), f2: one.clone(), pole_list: vec![] };
        let s = Sum { f1: one.clone(), f2: one.clone(), pole_list: vec![] };
        let rep = subadditivity_check(one.as_ref(), one.as_ref(), &p, &s, 8.0).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.lines.iter().filter(|l| l.op == "product").all(|l| l.lhs == 0.0 && l.rhs == 0.0));

        let e: MeroRef = arc(ExpAffine::exp_minus_iz());
        let p = Product { f1: e.clone(), f2: e.clone(), pole_list: vec![] };
        let s = Sum { f1: e.clone(), f2: e.clone(), pole_list: vec![] };
        let rep = subadditivity_check(e.as_ref(), e.as_ref(), &p, &s, 8.0).unwrap();
        assert_eq!(rep.violations, 0);
        let bp = rep.lines.iter().find(|l| l.characteristic == "B" && l.op == "product").unwrap();
        assert!((bp.lhs - 2.0).abs() < 1e-6 && (bp.rhs - 2.0).abs() < 1e-6);
    }

    #[test]
    fn subadditivity_random_mobius() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut m = || {
                let mut g = || c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                Mobius::new(g(), g(), g(), g()).unwrap()
            };
            let (m1, m2) = (m(), m());
            let poles: Vec<(C64, u32)> = m1.poles().into_iter().chain(m2.poles()).collect();
            let (f1, f2): (MeroRef, MeroRef) = (arc(m1), arc(m2));
            let p = Product { f1: f1.clone(), f2: f2.clone(), pole_list: poles.clone() };
            let s = Sum { f1: f1.clone(), f2: f2.clone(), pole_list: poles };
            let rep = subadditivity_check(f1.as_ref(), f2.as_ref(), &p, &s, 8.0).unwrap();
            assert_eq!(rep.violations, 0, "{:?}", rep.lines);
        }
    }

    #[test]
    fn poisson_constant_and_negative_control() {
        let two = Constant(c(2.0, 0.0));
        let mut prev = 0.0;
        for t in [10.0, 100.0, 1e4] {
            let r = poisson_majorization_check(&two, c(0.0, 2.0), t).unwrap();
            assert!(r.holds);
            assert!(r.rhs > prev && r.rhs <= 2f64.ln());
            prev = r.rhs;
        }
        assert!((prev - 2f64.ln()).abs() < 1e-3);
        let r = poisson_majorization_check(&ExpAffine::exp_minus_iz(), c(0.0, 1.0), 100.0).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15);
        assert_eq!(r.rhs, 0.0);
        assert!(!r.holds);
    }

    #[test]
    fn spherical_derivative_covariance() {
        // ρ_{f∘S}(z) = ρ_f(Sz)|S′(z)| for real S with det > 0
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f = Mobius::new(c(1.0, 2.0), c(0.5, 0.0), c(1.0, 0.0), c(0.0, -1.5)).unwrap();
        for _ in 0..10 {
            let (a, b, cc): (f64, f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let d = (1.0 + b * cc) / a;
            let s = Mobius::new(c(a, 0.0), c(b, 0.0), c(cc, 0.0), c(d, 0.0)).unwrap();
            let comp = FnMeromorphic {
                f: |z: C64| f.eval(s.eval(z)),
                df: |z: C64| f.deriv(s.eval(z)) * s.deriv(z),
                pole_list: vec![],
                label: "f∘S".into(),
            };
            let z = c(rng.random_range(-3.0..3.0), rng.random_range(0.1..3.0));
            let lhs = Meromorphic::spherical_derivative(&comp, z);
            let rhs = f.spherical_derivative(s.eval(z)) * s.deriv(z).norm();
            assert!((lhs - rhs).abs() < 1e-8 * rhs.max(1.0));
        }
    }

    #[test]
    fn table_csv_header() {
        let t = characteristic_table(&Mobius::identity(), &[2.0, 4.0], &AsPolicy::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("r,A,B,C,S,So,err\n"));
        assert_eq!(s.lines().count(), 3);
    }

    #[test]
    fn classify_synthetic_growth() {
        let r: Vec<f64> = (1..=8).map(|k| 2f64.powi(k)).collect();
        let grow: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        let e = vec![0.0; r.len()];
        assert_eq!(classify_growth(&r, &grow, &e).verdict, TypeVerdict::Growing);
        let flat: Vec<f64> = r.iter().map(|x| 1.0 - 1.0 / x).collect();
        assert_eq!(classify_growth(&r, &flat, &e).verdict, TypeVerdict::Bounded);
    }
}
