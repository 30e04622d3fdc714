//! The witness F = λ∘W on H(−m) and both directions of the dichotomy.
//!
//! Far from the real axis F is evaluated pointwise through the Newton inverse
//! of the map. Where W(t) sits below [`HOMOGENIZATION_HEIGHT`] the values of
//! λ oscillate on the scale Im W, and integrals over a dyadic scale are
//! replaced by their horocycle means: ½∫₀² ρ_λ(x+iη)² dx = 1/(2η²) and
//! ½∫₀² log⁺|λ(x+iη)| dx = ln(1/η) + [`LOG_MEAN_OFFSET`]. Both models are
//! checked against quadrature in the tests.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::charfun::{classify_growth, IndicatorReport, Meromorphic, TypeVerdict};
use crate::confmap::{build_map, BuildDiagnostics, ConformalMap, GraphDomain, MapConfig, Side};
use crate::error::{Error, Result};
use crate::harmonic::divergence_series;
use crate::lattice::{cusp_denominator_bound, farey_points, log_plus_integral};
use crate::modular::{lambda_log, ModularConfig, C64};
use crate::profiles::{log_integral, tame_majorant, tame_minorant, Profile, ProfileSpec, Verdict};
use crate::quad::{integrate, QuadConfig};

/// Below this height λ∘W is integrated through horocycle means.
pub const HOMOGENIZATION_HEIGHT: f64 = 0.01;
/// Width in y of the layer above ℝ where W is linearized.
pub const LINEAR_LAYER: f64 = 1e-3;
/// lim_{η→0} [½∫₀² log⁺|λ(x+iη)| dx − ln(1/η)].
pub const LOG_MEAN_OFFSET: f64 = 0.970;

/// Horocycle mean of ρ_λ² at height η in the small-η model.
pub fn square_mean_model(eta: f64) -> f64 {
    0.5 / (eta * eta)
}

/// Horocycle mean of log⁺|λ| at height η in the small-η model, from ln η.
pub fn log_mean_model(ln_eta: f64) -> f64 {
    -ln_eta + LOG_MEAN_OFFSET
}

/// Radius below which S_o integrands are evaluated pointwise.
pub const POINTWISE_RADIUS: f64 = 4.0;

/// ln of the horocycle mean of ρ_λ² on η = HOMOGENIZATION_HEIGHT·2^{j/64}.
struct SquareMeanTable {
    ln_g: Vec<f64>,
}

const TABLE_PER_OCTAVE: f64 = 64.0;
const TABLE_OCTAVES: usize = 11;

fn square_mean_table() -> Result<&'static SquareMeanTable> {
    static TABLE: OnceLock<std::result::Result<SquareMeanTable, String>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let n = TABLE_PER_OCTAVE as usize * TABLE_OCTAVES;
        (0..=n)
            .map(|j| horocycle_square_mean(HOMOGENIZATION_HEIGHT * 2f64.powf(j as f64 / TABLE_PER_OCTAVE)).map(f64::ln))
            .collect::<Result<Vec<f64>>>()
            .map(|ln_g| SquareMeanTable { ln_g })
            .map_err(|e| e.to_string())
    });
    t.as_ref().map_err(|e| Error::NonConvergence(format!("horocycle table: {e}")))
}

/// Horocycle mean of ρ_λ² at height η: the small-η model below
/// [`HOMOGENIZATION_HEIGHT`], interpolated quadrature values above.
pub fn square_mean(eta: f64) -> Result<f64> {
    if eta < HOMOGENIZATION_HEIGHT {
        return Ok(square_mean_model(eta));
    }
    let g = &square_mean_table()?.ln_g;
    let x = (eta / HOMOGENIZATION_HEIGHT).log2() * TABLE_PER_OCTAVE;
    let last = g.len() - 1;
    let ln = if x >= last as f64 {
        // ln of the mean decays like −2πη; extrapolate linearly in η
        let e1 = HOMOGENIZATION_HEIGHT * 2f64.powf((last - 1) as f64 / TABLE_PER_OCTAVE);
        let e2 = HOMOGENIZATION_HEIGHT * 2f64.powf(last as f64 / TABLE_PER_OCTAVE);
        g[last] + (g[last] - g[last - 1]) / (e2 - e1) * (eta - e2)
    } else {
        let k = x.floor() as usize;
        let f = x - k as f64;
        g[k] + f * (g[k + 1] - g[k])
    };
    Ok(ln.exp())
}

/// ½∫₀² ρ_λ(x+iη)² dx by quadrature with Farey breakpoints.
pub fn horocycle_square_mean(eta: f64) -> Result<f64> {
    let cfg = ModularConfig::default();
    let breaks = farey_points(0.0, 2.0, cusp_denominator_bound(eta));
    let qc = QuadConfig::new(1e-12, 1e-8).with_panels(4 * breaks.len() + 50_000);
    let q = integrate(
        |x| match lambda_log(C64::new(x, eta), &cfg) {
            Ok(l) => l.spherical_derivative().powi(2),
            Err(_) => f64::NAN,
        },
        0.0,
        2.0,
        &breaks,
        &qc,
    );
    Ok(0.5 * q.into_result(0.0, 2.0)?)
}

/// ½∫₀² log⁺|λ(x+iη)| dx by quadrature.
pub fn horocycle_log_mean(eta: f64) -> Result<f64> {
    Ok(0.5 * log_plus_integral(eta, 0.0, 2.0)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmissionAudit {
    pub points: usize,
    /// min ln|F| and min ln|F − 1| over the sample.
    pub min_ln_abs: f64,
    pub min_ln_abs_minus_one: f64,
    pub passed: bool,
}

/// F = λ∘W for the normalized map W: H(−m) → H.
#[derive(Debug, Clone)]
pub struct OmittingFunction {
    map: ConformalMap,
    modular: ModularConfig,
    pub audit: OmissionAudit,
}

/// Map settings for the witness: coarse log-resolution of m is enough
/// because heights below [`HOMOGENIZATION_HEIGHT`] are read from m directly.
pub fn witness_map_config() -> MapConfig {
    MapConfig { log_step: 0.25, nodes: 1025, ..MapConfig::default() }
}

pub fn build_counterexample(m: &Profile, cfg: &MapConfig) -> Result<OmittingFunction> {
    let map = build_map(&GraphDomain::new(Side::Below, m.clone())?, cfg)?;
    OmittingFunction::from_map(map)
}

impl OmittingFunction {
    pub fn from_map(map: ConformalMap) -> Result<Self> {
        if map.side != Side::Below {
            return Err(Error::Domain("the witness lives on H(−m)".into()));
        }
        let mut f = Self {
            map,
            modular: ModularConfig::default(),
            audit: OmissionAudit { points: 0, min_ln_abs: f64::NAN, min_ln_abs_minus_one: f64::NAN, passed: false },
        };
        f.audit = f.omission_audit(500, 7)?;
        if !f.audit.passed {
            return Err(Error::Audit(format!("F takes an omitted value: {:?}", f.audit)));
        }
        Ok(f)
    }

    pub fn map(&self) -> &ConformalMap {
        &self.map
    }

    pub fn profile(&self) -> &Profile {
        self.map.profile()
    }

    /// (W(z), W′(z)).
    pub fn inner(&self, z: C64) -> Result<(C64, C64)> {
        let zeta = self.map.inverse(z)?;
        Ok((zeta, 1.0 / self.map.forward_deriv(zeta)))
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        Ok(lambda_log(self.map.inverse(z)?, &self.modular)?.value())
    }

    /// (F(z), F′(z)) with F′ = λ′(W)·W′.
    pub fn eval_with_deriv(&self, z: C64) -> Result<(C64, C64)> {
        let (zeta, dw) = self.inner(z)?;
        let l = lambda_log(zeta, &self.modular)?;
        let v = l.value();
        Ok((v, v * l.dln * dw))
    }

    pub fn ln_abs(&self, z: C64) -> Result<f64> {
        Ok(lambda_log(self.map.inverse(z)?, &self.modular)?.ln_abs())
    }

    /// ln|F − 1| through 1 − λ(τ) = λ(−1/τ).
    pub fn ln_abs_minus_one(&self, z: C64) -> Result<f64> {
        let zeta = self.map.inverse(z)?;
        Ok(lambda_log(-1.0 / zeta, &self.modular)?.ln_abs())
    }

    /// ρ_F(z) = ρ_λ(W(z))·|W′(z)|.
    pub fn spherical_derivative(&self, z: C64) -> Result<f64> {
        let (zeta, dw) = self.inner(z)?;
        Ok(lambda_log(zeta, &self.modular)?.spherical_derivative() * dw.norm())
    }

    fn omission_audit(&self, points: usize, seed: u64) -> Result<OmissionAudit> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.profile();
        let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..points {
            let x: f64 = rng.random_range(-64.0..64.0);
            let d = 10f64.powf(rng.random_range(-2.0..2.0));
            let z = C64::new(x, d - m.value(x));
            a = a.min(self.ln_abs(z)?);
            b = b.min(self.ln_abs_minus_one(z)?);
        }
        Ok(OmissionAudit {
            points,
            min_ln_abs: a,
            min_ln_abs_minus_one: b,
            passed: a > f64::NEG_INFINITY && b > f64::NEG_INFINITY,
        })
    }

    /// ξ(t) on ℝ with Re w(ξ) = t, and ln n(ξ) = ln Im W(t).
    ///
    /// Uses n = m(t)/(1 + R(ξ)), the small-height limit of the fixed point
    /// for Γ, which stays finite when m(t) underflows.
    pub fn real_axis_height(&self, t: f64) -> (f64, f64) {
        let xi = self.map.boundary_preimage(t);
        let r = self.map.boundary_stretch(xi);
        (xi, self.profile().ln_value(t) - (1.0 + r).ln())
    }

    fn catch<T: Copy>(slot: &RefCell<Option<Error>>, r: Result<T>, fallback: T) -> T {
        match r {
            Ok(v) => v,
            Err(e) => {
                slot.borrow_mut().get_or_insert(e);
                fallback
            }
        }
    }

    /// ∫₀^π ρ_F(te^{iθ})² sin θ dθ.
    ///
    /// Below [`POINTWISE_RADIUS`] ρ_F is evaluated pointwise wherever Im W is
    /// at least [`HOMOGENIZATION_HEIGHT`]. Beyond it ρ_λ² is replaced by its
    /// horocycle mean at Im W, which is exact up to the variation of the
    /// weight over one period of λ.
    pub fn ring_density(&self, t: f64, rel_tol: f64) -> Result<f64> {
        self.ring_density_with(t, rel_tol, POINTWISE_RADIUS)
    }

    pub fn ring_density_with(&self, t: f64, rel_tol: f64, pointwise_radius: f64) -> Result<f64> {
        let fail = RefCell::new(None);
        let qc = QuadConfig::new(1e-300, rel_tol).with_panels(4000);
        let run = |g: &dyn Fn(f64) -> f64, a: f64, b: f64| -> f64 {
            let q = integrate(g, a, b, &[], &qc);
            if !q.converged {
                let e = Error::Quadrature { a, b, value: q.value, error: q.error, evals: q.evals, reason: format!("ring density at t = {t}") };
                fail.borrow_mut().get_or_insert(e);
            }
            q.value
        };
        let pointwise = |th: f64| {
            let r = self.spherical_derivative(C64::from_polar(t, th));
            Self::catch(&fail, r, 0.0).powi(2) * th.sin()
        };
        let averaged = |th: f64| {
            let (zeta, dw) = Self::catch(&fail, self.inner(C64::from_polar(t, th)), (C64::new(0.0, 1.0), C64::new(0.0, 0.0)));
            Self::catch(&fail, square_mean(zeta.im), 0.0) * dw.norm_sqr() * th.sin()
        };
        let (xi, ln_n) = self.real_axis_height(t);
        let low = ln_n < HOMOGENIZATION_HEIGHT.ln();
        let (lin, th_lin) = if low {
            let n = ln_n.exp();
            let dw = 1.0 / self.map.forward_deriv(C64::new(xi, n.max(1e-300)));
            let (s, g) = (dw.re, dw.norm_sqr());
            let a = s * LINEAR_LAYER;
            let (log_term, frac) = if ln_n < -700.0 { (a.ln() - ln_n, 1.0) } else { ((a / n).ln_1p(), a / (n + a)) };
            (g / (2.0 * s * s * t * t) * (log_term - frac), LINEAR_LAYER / t)
        } else {
            (0.0, 0.0)
        };
        let half = if t >= pointwise_radius {
            lin + run(&averaged, th_lin, PI / 2.0)
        } else if low {
            let im_w = |th: f64| Self::catch(&fail, self.map.inverse(C64::from_polar(t, th)), C64::new(0.0, 1.0)).im;
            let th_star = if im_w(th_lin) >= HOMOGENIZATION_HEIGHT {
                th_lin
            } else {
                let (mut lo, mut hi) = (th_lin, PI / 2.0);
                while hi - lo > 1e-12 * hi {
                    let mid = 0.5 * (lo + hi);
                    if im_w(mid) < HOMOGENIZATION_HEIGHT {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            lin + run(&averaged, th_lin, th_star) + run(&pointwise, th_star, PI / 2.0)
        } else {
            run(&pointwise, 0.0, PI / 2.0)
        };
        if let Some(e) = fail.into_inner() {
            return Err(e);
        }
        Ok(2.0 * half)
    }

    /// log⁺|F(t)| at real t, replaced by the horocycle mean at Im W(t) when
    /// that height is below [`HOMOGENIZATION_HEIGHT`].
    pub fn boundary_log_plus(&self, t: f64) -> Result<f64> {
        let (_, ln_n) = self.real_axis_height(t);
        if ln_n >= HOMOGENIZATION_HEIGHT.ln() {
            Ok(self.ln_abs(C64::new(t, 0.0))?.max(0.0))
        } else {
            Ok(log_mean_model(ln_n))
        }
    }
}

impl Meromorphic for OmittingFunction {
    fn eval(&self, z: C64) -> C64 {
        OmittingFunction::eval(self, z).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    fn deriv(&self, z: C64) -> C64 {
        self.eval_with_deriv(z).map(|p| p.1).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }

    fn name(&self) -> String {
        format!("λ∘W on {}", self.map.domain().describe())
    }

    fn log_abs(&self, z: C64) -> f64 {
        self.ln_abs(z).unwrap_or(f64::NAN)
    }

    fn spherical_derivative(&self, z: C64) -> f64 {
        OmittingFunction::spherical_derivative(self, z).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoSettings {
    pub outer_rel: f64,
    pub inner_rel: f64,
    /// Radius below which ρ_F is evaluated pointwise.
    pub pointwise_radius: f64,
}

impl Default for SoSettings {
    fn default() -> Self {
        Self { outer_rel: 3e-3, inner_rel: 1e-4, pointwise_radius: POINTWISE_RADIUS }
    }
}

/// S_o(r; F) = (1/π)∫₁^r (1 − t²/r²) I(t) dt on an increasing grid, with
/// I(t) = [`OmittingFunction::ring_density`] memoized across radii.
pub fn witness_so(f: &OmittingFunction, r_grid: &[f64], settings: &SoSettings) -> Result<IndicatorReport> {
    if r_grid.len() < 3 || r_grid[0] <= 1.0 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("need an increasing grid of at least three radii above 1".into()));
    }
    let memo: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
    let fail = RefCell::new(None);
    let ring = |t: f64| -> f64 {
        if let Some(v) = memo.borrow().get(&t.to_bits()) {
            return *v;
        }
        let v = OmittingFunction::catch(&fail, f.ring_density_with(t, settings.inner_rel, settings.pointwise_radius), 0.0);
        memo.borrow_mut().insert(t.to_bits(), v);
        v
    };
    let qc = QuadConfig::new(1e-300, settings.outer_rel).with_panels(4000);
    let (mut i0, mut i2, mut e0, mut e2) = (0.0, 0.0, 0.0, 0.0);
    let mut lo = 1.0;
    let mut s_o = Vec::new();
    let mut err = Vec::new();
    for &r in r_grid {
        let breaks: Vec<f64> = (1..60).map(|k| 2f64.powi(k)).filter(|b| *b > lo && *b < r).collect();
        let a = integrate(&ring, lo, r, &breaks, &qc);
        let b = integrate(|t| t * t * ring(t), lo, r, &breaks, &qc);
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        if !a.converged || !b.converged {
            return Err(Error::Quadrature {
                a: lo,
                b: r,
                value: a.value,
                error: a.error.max(b.error),
                evals: a.evals + b.evals,
                reason: "S_o radial integral".into(),
            });
        }
        i0 += a.value;
        i2 += b.value;
        e0 += a.error;
        e2 += b.error;
        s_o.push((i0 - i2 / (r * r)) / PI);
        err.push((e0 + e2 / (r * r)) / PI);
        lo = r;
    }
    Ok(classify_growth(r_grid, &s_o, &err))
}

/// Radii 4, 8, …, 256.
pub fn default_r_grid() -> Vec<f64> {
    (2..=8).map(|k| 2f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLogIntegral {
    /// Upper ends T = 2^{k+1} of the octaves.
    pub t: Vec<f64>,
    /// ∫_{1≤|t|≤T} log⁺|F(t)|/t² dt.
    pub partial: Vec<f64>,
    /// Contribution of each octave 2^k ≤ |t| ≤ 2^{k+1}.
    pub increments: Vec<f64>,
    pub errors: Vec<f64>,
    /// Smallest and mean increment over the upper half of the octaves.
    pub floor: f64,
    pub fitted: f64,
    /// Last increment over the total.
    pub last_share: f64,
    pub cauchy: bool,
}

/// Partial integrals of log⁺|F(t)|/t² over 1 ≤ |t| ≤ 2^K, octave by octave.
pub fn boundary_log_integral(f: &OmittingFunction, octaves: u32) -> Result<BoundaryLogIntegral> {
    if octaves < 2 {
        return Err(Error::Domain("need at least two octaves".into()));
    }
    if 2f64.powi(octaves as i32) > f.map().x_max() {
        return Err(Error::Domain(format!("T = 2^{octaves} exceeds the map window {}", f.map().x_max())));
    }
    let fail = RefCell::new(None);
    let qc = QuadConfig::new(1e-300, 1e-7).with_panels(20_000);
    let (mut t, mut partial, mut increments, mut errors) = (vec![], vec![], vec![], vec![]);
    let mut acc = 0.0;
    for k in 0..octaves {
        let (a, b) = (2f64.powi(k as i32), 2f64.powi(k as i32 + 1));
        let q = integrate(
            |x: f64| 2.0 * OmittingFunction::catch(&fail, f.boundary_log_plus(x), 0.0) / (x * x),
            a,
            b,
            &[],
            &qc,
        );
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        let v = q.into_result(a, b)?;
        acc += v;
        t.push(b);
        partial.push(acc);
        increments.push(v);
        errors.push(q.error);
    }
    let upper = &increments[increments.len() / 2..];
    let floor = upper.iter().cloned().fold(f64::INFINITY, f64::min);
    let fitted = upper.iter().sum::<f64>() / upper.len() as f64;
    let last_share = if acc > 0.0 { increments[increments.len() - 1] / acc } else { 0.0 };
    Ok(BoundaryLogIntegral { t, partial, increments, errors, floor, fitted, last_share, cauchy: last_share < 0.05 })
}

impl BoundaryLogIntegral {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["T", "value", "increment", "err"])?;
        for i in 0..self.t.len() {
            wr.write_record([
                self.t[i].to_string(),
                format!("{:.12e}", self.partial[i]),
                format!("{:.12e}", self.increments[i]),
                format!("{:.3e}", self.errors[i]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalBoundReport {
    pub nx: usize,
    pub ny: usize,
    /// sup of ρ_F(x+iy)·(y + m(x)) on the grid and on its refinement.
    pub sup: f64,
    pub argsup: (f64, f64),
    pub refined_sup: f64,
    pub relative_change: f64,
    /// sup of ρ_F(iy)·y for 1 ≤ y ≤ 10³.
    pub far_field_sup: f64,
    pub finite: bool,
    pub stable: bool,
}

/// Smallest distance y + m(x) above the boundary used by the grid.
pub const GRID_FLOOR: f64 = 1e-3;
/// Half-width of the grid in x and its top height.
pub const GRID_SPAN: f64 = 256.0;

fn bound_sup(f: &OmittingFunction, nx: usize, ny: usize) -> Result<(f64, (f64, f64))> {
    let m = f.profile();
    let mut best = (0.0, (0.0, 0.0));
    for i in 0..nx {
        let x = -GRID_SPAN + 2.0 * GRID_SPAN * i as f64 / (nx - 1) as f64;
        let mx = m.value(x);
        for j in 0..ny {
            let d = GRID_FLOOR * (GRID_SPAN / GRID_FLOOR).powf(j as f64 / (ny - 1) as f64);
            let y = d - mx;
            let v = f.spherical_derivative(C64::new(x, y))? * d;
            if !v.is_finite() {
                return Ok((f64::INFINITY, (x, y)));
            }
            if v > best.0 {
                best = (v, (x, y));
            }
        }
    }
    Ok(best)
}

/// sup of ρ_F·(y + m(x)) over [−2⁸, 2⁸] × (−m(x), 2⁸] on an nx × ny grid
/// (x uniform, y + m log-spaced) and on the grid with every interval halved.
pub fn spherical_bound_check(f: &OmittingFunction, nx: usize, ny: usize) -> Result<SphericalBoundReport> {
    if nx < 2 || ny < 2 {
        return Err(Error::Domain("grid needs at least two points per axis".into()));
    }
    let (sup, argsup) = bound_sup(f, nx, ny)?;
    let (refined_sup, _) = bound_sup(f, 2 * nx - 1, 2 * ny - 1)?;
    let mut far: f64 = 0.0;
    for k in 0..=30 {
        let y = 10f64.powf(k as f64 / 10.0);
        far = far.max(f.spherical_derivative(C64::new(0.0, y))? * y);
    }
    let relative_change = (refined_sup - sup).abs() / sup;
    let finite = sup.is_finite() && refined_sup.is_finite() && far.is_finite();
    Ok(SphericalBoundReport {
        nx,
        ny,
        sup,
        argsup,
        refined_sup,
        relative_change,
        far_field_sup: far,
        finite,
        stable: finite && relative_change < 0.1,
    })
}

/// Which tame replacement of m the witness is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Tame minorant; S_o(r; F) is expected to stay bounded.
    Minorant,
    /// Tame majorant; the boundary log⁺ integral is expected to diverge.
    Majorant,
}

impl Route {
    pub fn for_verdict(v: Verdict) -> Option<Route> {
        match v {
            Verdict::Convergent => Some(Route::Minorant),
            Verdict::Divergent => Some(Route::Majorant),
            Verdict::Inconclusive => None,
        }
    }

    pub fn tame(self, m: &Profile) -> Result<Profile> {
        match self {
            Route::Minorant => tame_minorant(m),
            Route::Majorant => tame_majorant(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyConfig {
    pub r_grid: Vec<f64>,
    pub octaves: u32,
    pub map: MapConfig,
    pub so: SoSettings,
    /// Grid size of the spherical-bound check; 0 skips it.
    pub sphere_grid: usize,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self { r_grid: default_r_grid(), octaves: 12, map: witness_map_config(), so: SoSettings::default(), sphere_grid: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub profile: ProfileSpec,
    pub log_integral: Verdict,
    pub route: Route,
    pub witness: ProfileSpec,
    pub map: BuildDiagnostics,
    pub omission: OmissionAudit,
    pub indicator: IndicatorReport,
    pub boundary: BoundaryLogIntegral,
    /// Tail slope of Σ 2^{−k} log(1/n*(2^k)) for the witness profile.
    pub series_slope: f64,
    /// Fitted octave increment over the series slope.
    pub slope_ratio: f64,
    pub spherical: Option<SphericalBoundReport>,
    /// Bounded-type verdict of S_o(r; F).
    pub verdict: TypeVerdict,
    /// The verdict agrees with the log-integral verdict (bounded ⇔ convergent).
    pub agrees: bool,
}

/// The log-integral verdict of m used to pick the route.
pub fn profile_verdict(m: &Profile) -> Verdict {
    log_integral(m, 2f64.powi(20), 40).verdict
}

/// Run the witness experiment for m along `route`.
pub fn dichotomy(m: &Profile, route: Route, cfg: &DichotomyConfig) -> Result<DichotomyReport> {
    let verdict_m = profile_verdict(m);
    let n_star = route.tame(m)?;
    let f = build_counterexample(&n_star, &cfg.map)?;
    let indicator = witness_so(&f, &cfg.r_grid, &cfg.so)?;
    let boundary = boundary_log_integral(&f, cfg.octaves)?;
    let series_slope = divergence_series(&n_star, cfg.octaves).tail_slope();
    let slope_ratio = if series_slope > 0.0 { boundary.fitted / series_slope } else { f64::INFINITY };
    let spherical = if cfg.sphere_grid >= 2 {
        Some(spherical_bound_check(&f, cfg.sphere_grid, cfg.sphere_grid)?)
    } else {
        None
    };
    let verdict = indicator.verdict;
    let agrees = matches!(
        (verdict_m, verdict),
        (Verdict::Convergent, TypeVerdict::Bounded) | (Verdict::Divergent, TypeVerdict::Growing)
    );
    Ok(DichotomyReport {
        profile: m.spec().clone(),
        log_integral: verdict_m,
        route,
        witness: n_star.spec().clone(),
        map: f.map().diagnostics,
        omission: f.audit,
        indicator,
        boundary,
        series_slope,
        slope_ratio,
        spherical,
        verdict,
        agrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::lambda_eval;
    use crate::profiles::parse_profile;

    fn small() -> MapConfig {
        witness_map_config().with_nodes(1025)
    }

    #[test]
    fn horocycle_models() {
        // quadrature oracles at small heights; the offset was fitted at 1e-4
        let eta = 1e-3;
        let g = horocycle_square_mean(eta).unwrap() * eta * eta;
        assert!((g - 0.5).abs() < 2e-3, "{g}");
        let h = horocycle_log_mean(eta).unwrap() + eta.ln();
        assert!((h - LOG_MEAN_OFFSET).abs() < 0.01, "{h}");
        let h_edge = horocycle_log_mean(HOMOGENIZATION_HEIGHT).unwrap();
        assert!((h_edge - log_mean_model(HOMOGENIZATION_HEIGHT.ln())).abs() < 0.02);
    }

    #[test]
    fn constant_profile_is_shifted_lambda() {
        let c = 0.5;
        let f = build_counterexample(&parse_profile("0.5").unwrap(), &small()).unwrap();
        let cfg = ModularConfig::default();
        for &(x, y) in &[(0.3, 0.2), (-1.7, 1.0), (5.0, -0.3), (0.0, 3.0)] {
            let z = C64::new(x, y);
            let want = lambda_eval(C64::new(x, y + c), &cfg).unwrap().value;
            let got = f.eval(z).unwrap();
            assert!((got - want).norm() <= 1e-8 * (1.0 + want.norm()), "{z}: {got} vs {want}");
        }
    }

    #[test]
    fn one_minus_lambda_identity() {
        let f = build_counterexample(&parse_profile("0.5").unwrap(), &small()).unwrap();
        for &(x, y) in &[(0.3, 0.2), (1.1, 0.9)] {
            let z = C64::new(x, y);
            let direct = (f.eval(z).unwrap() - 1.0).norm().ln();
            assert!((f.ln_abs_minus_one(z).unwrap() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn chain_rule_matches_differences() {
        let m = tame_majorant(&parse_profile("exp(-abs(x))").unwrap()).unwrap();
        let f = build_counterexample(&m, &small()).unwrap();
        assert!(f.audit.passed);
        for &(x, y) in &[(0.4, 0.8), (-2.5, 1.5), (7.0, 0.5)] {
            let z = C64::new(x, y);
            let (_, d) = f.eval_with_deriv(z).unwrap();
            let h = 1e-5;
            let fd = (f.eval(z + h).unwrap() - f.eval(z - h).unwrap()) / (2.0 * h);
            assert!((fd - d).norm() <= 1e-5 * d.norm(), "{z}: {fd} vs {d}");
        }
    }

    #[test]
    fn real_axis_is_inside() {
        let m = tame_majorant(&parse_profile("exp(-abs(x))").unwrap()).unwrap();
        let f = build_counterexample(&m, &small()).unwrap();
        for t in [0.0, 1.0, 3.5, 20.0] {
            let v = f.eval(C64::new(t, 0.0)).unwrap();
            assert!(v.is_finite());
        }
        // the small-height formula matches the Γ fixed point where both apply
        for t in [3.0, 9.0] {
            let (xi, ln_n) = f.real_axis_height(t);
            let n = f.map().gamma_height(xi).unwrap();
            assert!((ln_n - n.ln()).abs() < 0.05, "{t}: {ln_n} vs {}", n.ln());
        }
    }

    #[test]
    fn constant_profile_boundary_integral_is_cauchy() {
        let f = build_counterexample(&parse_profile("0.2").unwrap(), &small()).unwrap();
        let b = boundary_log_integral(&f, 10).unwrap();
        assert!(b.cauchy, "{:?}", b.increments);
        // the map is the translation z ↦ z + 0.2i
        let cfg = ModularConfig::default();
        let breaks: Vec<f64> = (2..1024).map(|k| k as f64).collect();
        let want = integrate(
            |t: f64| 2.0 * lambda_log(C64::new(t, 0.2), &cfg).unwrap().ln_abs().max(0.0) / (t * t),
            1.0,
            1024.0,
            &breaks,
            &QuadConfig::new(1e-12, 1e-9).with_panels(20_000),
        )
        .value;
        let got = b.partial[b.partial.len() - 1];
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn majorant_increments_match_series() {
        let m = tame_majorant(&parse_profile("exp(-abs(x))").unwrap()).unwrap();
        let f = build_counterexample(&m, &witness_map_config()).unwrap();
        let b = boundary_log_integral(&f, 12).unwrap();
        let slope = divergence_series(&m, 12).tail_slope();
        assert!((slope - 0.125).abs() < 1e-12);
        assert!(b.floor > 0.0);
        let ratio = b.fitted / slope;
        assert!(ratio > 0.25 && ratio < 4.0, "{ratio} {:?}", b.increments);
    }

    #[test]
    fn constant_profile_so_is_bounded() {
        let f = build_counterexample(&parse_profile("0.5").unwrap(), &small()).unwrap();
        let rep = witness_so(&f, &[4.0, 8.0, 16.0, 32.0, 64.0], &SoSettings::default()).unwrap();
        assert!(rep.s_o.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert_eq!(rep.verdict, TypeVerdict::Bounded, "{:?}", rep.s_o);
    }

    #[test]
    fn spherical_bound_is_finite() {
        let m = tame_minorant(&parse_profile("exp(-sqrt(abs(x)))").unwrap()).unwrap();
        let f = build_counterexample(&m, &small()).unwrap();
        let r = spherical_bound_check(&f, 12, 12).unwrap();
        assert!(r.finite && r.sup > 0.0, "{r:?}");
        assert!(r.far_field_sup < 1.0);
    }
}
