//! Normalized conformal maps w: H → H(±m) = {y > ±m(x)} and their inverses.
//!
//! The map is written as w(ζ) = ζ + F(ζ) with
//! F(ζ) = (1/π)∫ v(t)/(t − ζ) dt, where v(t) = Im w(t) is the boundary height.
//! F is analytic in H, Im F = Poisson extension of v and Re F(t) = −𝓗v(t) on ℝ.
//! The boundary condition Im w(t) = ±m(Re w(t)) becomes the fixed-point problem
//! v(t) = ±m(t + u(t)), u = Re F on ℝ, solved on a graded node set with v
//! piecewise linear. Beyond ±X_max v is frozen at its end value; that tail is
//! integrated in closed form. Evenness of m makes v even and u odd, so w maps
//! the imaginary axis to itself, and F(iy) → const forces w(iy)/(iy) → 1.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::C64;
use crate::profiles::{make_profile, Profile, ProfileSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// H(+m) = {y > m(x)}.
    Above,
    /// H(−m) = {y > −m(x)}.
    Below,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GraphDomain {
    pub side: Side,
    pub profile: Profile,
}

impl GraphDomain {
    pub fn new(side: Side, profile: Profile) -> Result<Self> {
        profile.audit()?;
        Ok(Self { side, profile })
    }

    pub fn boundary_height(&self, x: f64) -> f64 {
        self.side.sign() * self.profile.value(x)
    }

    pub fn contains(&self, z: C64) -> bool {
        z.im > self.boundary_height(z.re)
    }

    pub fn describe(&self) -> String {
        let s = match self.side {
            Side::Above => "+",
            Side::Below => "-",
        };
        format!("H({s}m), m = {}", self.profile.spec().describe())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    /// Total boundary node count (rounded up to an odd number).
    pub nodes: usize,
    pub x_max: f64,
    /// Fixed-point stopping tolerance on max |Δv|.
    pub tol: f64,
    /// Accepted boundary residual max |v − ±m(t+u)|.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Newton tolerance for the inverse.
    pub newton_tol: f64,
    /// Largest |Δ ln m| between neighbouring nodes where m is resolved.
    pub log_step: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            nodes: 2049,
            x_max: 4096.0,
            tol: 1e-14,
            residual_tol: 1e-10,
            max_iter: 400,
            newton_tol: 1e-10,
            log_step: 0.01,
        }
    }
}

impl MapConfig {
    pub fn with_nodes(mut self, n: usize) -> Self {
        self.nodes = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildDiagnostics {
    pub nodes: usize,
    pub iterations: usize,
    pub max_residual: f64,
    /// Im w(iy)/y at y = 10⁶.
    pub dilation: f64,
    /// max |Re w(iy)|/|w(iy)| over y ∈ {10⁻², …, 10³}.
    pub axis_residual: f64,
}

/// Graded symmetric nodes on [−X, X]: uniform on [0, 1], geometric beyond.
pub fn graded_nodes(n: usize, x_max: f64) -> Vec<f64> {
    let half = (n.max(3) - 1).div_ceil(2);
    let n0 = (half / 4).max(2);
    let ng = half - n0;
    let rho = x_max.powf(1.0 / ng as f64);
    let mut pos = Vec::with_capacity(half);
    for i in 1..=n0 {
        pos.push(i as f64 / n0 as f64);
    }
    let mut t = 1.0;
    for i in 1..=ng {
        t = if i == ng { x_max } else { t * rho };
        pos.push(t);
    }
    let mut out: Vec<f64> = pos.iter().rev().map(|p| -p).collect();
    out.push(0.0);
    out.extend(pos);
    out
}

/// Heights below this, relative to 1 + |x|, are beneath coordinate resolution.
pub const HEIGHT_RESOLUTION: f64 = 1e-14;

/// Bisect segments until |Δ ln m| ≤ `step` wherever m is resolved.
pub fn refine_nodes(t: &[f64], m: &Profile, step: f64) -> Vec<f64> {
    let resolved = |x: f64| m.ln_value(x) >= (HEIGHT_RESOLUTION * (1.0 + x.abs())).ln();
    let mut pos: Vec<f64> = Vec::new();
    let half: Vec<f64> = t.iter().copied().filter(|x| *x >= 0.0).collect();
    for w in half.windows(2) {
        let (a, b) = (w[0], w[1]);
        pos.push(a);
        if !resolved(a) {
            continue;
        }
        let drop = m.ln_value(a) - m.ln_value(b);
        if drop > step {
            let k = (drop / step).ceil().min(1e5) as usize;
            // m is monotone, so place nodes by inverse interpolation of ln m
            let (la, lb) = (m.ln_value(a), m.ln_value(b));
            let mut lo = a;
            for j in 1..k {
                let target = la + (lb - la) * j as f64 / k as f64;
                let (mut p, mut q) = (lo, b);
                for _ in 0..60 {
                    let mid = 0.5 * (p + q);
                    if m.ln_value(mid) > target {
                        p = mid;
                    } else {
                        q = mid;
                    }
                }
                let x = 0.5 * (p + q);
                if x > lo && x < b {
                    pos.push(x);
                    lo = x;
                }
            }
        }
    }
    pos.push(*half.last().unwrap());
    let mut out: Vec<f64> = pos[1..].iter().rev().map(|p| -p).collect();
    out.extend(pos);
    out
}

/// u = K v / π at the nodes: principal-value Cauchy integral of the
/// piecewise-linear v plus the frozen tails. The nodes are symmetric, v is
/// even and u odd, so K is stored folded onto the nonnegative half.
struct HilbertKernel {
    centre: usize,
    half: usize,
    k: Vec<f64>,
}

impl HilbertKernel {
    fn new(t: &[f64]) -> Self {
        let n = t.len();
        let last = n - 1;
        let centre = n / 2;
        let half = n - centre;
        let x_max = t[last];
        let mut k = vec![0.0; half * half];
        let mut row = vec![0.0; n];
        for (i, out) in k.chunks_mut(half).enumerate() {
            let j = centre + i;
            let x = t[j];
            row.iter_mut().for_each(|r| *r = 0.0);
            for s in 0..last {
                if s == j || s + 1 == j {
                    continue;
                }
                let (a, b) = (t[s], t[s + 1]);
                let l = ((b - x) / (a - x)).abs().ln();
                let lam = (x - a) / (b - a);
                row[s] += (1.0 - lam) * l;
                row[s + 1] += lam * l;
                row[j] -= l;
            }
            // Σ β(b − a) = v_last − v_0
            row[last] += 1.0;
            row[0] -= 1.0;
            if j != last {
                let e = ((x_max - x) / (x_max + x)).ln();
                row[j] += e;
                row[last] -= e;
            }
            out[0] = row[centre];
            for m in 1..half {
                out[m] = row[centre + m] + row[centre - m];
            }
        }
        Self { centre, half, k }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let vp = &v[self.centre..];
        let mut u = vec![0.0; v.len()];
        for (i, row) in self.k.chunks(self.half).enumerate() {
            let ui = row.iter().zip(vp).map(|(a, b)| a * b).sum::<f64>() / PI;
            u[self.centre + i] = ui;
            if i > 0 {
                u[self.centre - i] = -ui;
            }
        }
        u
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalMap {
    pub version: u32,
    pub side: Side,
    pub profile_spec: ProfileSpec,
    pub config: MapConfig,
    /// Boundary nodes t_k and heights v_k = Im w(t_k).
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    /// Re w(t_k) − t_k.
    pub u: Vec<f64>,
    /// The constant A = 2m(0) > m(0) of the compactification.
    pub a_shift: f64,
    pub diagnostics: BuildDiagnostics,
    #[serde(skip)]
    profile: Option<Profile>,
    #[serde(skip)]
    slopes: Vec<f64>,
}

pub const MAP_FORMAT_VERSION: u32 = 1;

/// Build the normalized map onto `domain`.
pub fn build_map(domain: &GraphDomain, cfg: &MapConfig) -> Result<ConformalMap> {
    if cfg.nodes < 256 {
        return Err(Error::Domain(format!("need at least 256 nodes, got {}", cfg.nodes)));
    }
    if cfg.x_max < 1024.0 {
        return Err(Error::Domain(format!("need X_max ≥ 2^10, got {}", cfg.x_max)));
    }
    build_map_unchecked(domain, cfg)
}

/// [`build_map`] without the resolution preconditions, for refinement studies
/// below the production node count.
pub fn build_map_unchecked(domain: &GraphDomain, cfg: &MapConfig) -> Result<ConformalMap> {
    if cfg.nodes < 16 || !(cfg.x_max > 1.0) {
        return Err(Error::Domain(format!("degenerate node table: {} nodes, X_max {}", cfg.nodes, cfg.x_max)));
    }
    let s = domain.side.sign();
    let m = &domain.profile;
    let t = refine_nodes(&graded_nodes(cfg.nodes, cfg.x_max), m, cfg.log_step);
    let n = t.len();
    let k = HilbertKernel::new(&t);
    let mut v: Vec<f64> = t.iter().map(|&x| s * m.value(x)).collect();
    let mut u = k.apply(&v);
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        iterations = it;
        let mut nv: Vec<f64> = t.iter().zip(&u).map(|(&x, &du)| s * m.value(x + du)).collect();
        for j in 0..n / 2 {
            let a = 0.5 * (nv[j] + nv[n - 1 - j]);
            nv[j] = a;
            nv[n - 1 - j] = a;
        }
        let change = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = nv;
        u = k.apply(&v);
        if change <= cfg.tol * (1.0 + v.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
            break;
        }
    }
    let max_residual = t
        .iter()
        .zip(&u)
        .zip(&v)
        .map(|((&x, &du), &vv)| (vv - s * m.value(x + du)).abs())
        .fold(0.0, f64::max);
    if !(max_residual <= cfg.residual_tol) {
        return Err(Error::BuilderResidual { residual: max_residual, tol: cfg.residual_tol });
    }
    // the boundary map t ↦ t + u(t) must stay increasing for injectivity
    if t.windows(2).zip(u.windows(2)).any(|(tt, uu)| tt[1] + uu[1] <= tt[0] + uu[0]) {
        return Err(Error::BuilderResidual { residual: f64::INFINITY, tol: cfg.residual_tol });
    }
    let mut map = ConformalMap {
        version: MAP_FORMAT_VERSION,
        side: domain.side,
        profile_spec: m.spec().clone(),
        config: *cfg,
        t,
        v,
        u,
        a_shift: 2.0 * m.value(0.0),
        diagnostics: BuildDiagnostics {
            nodes: n,
            iterations,
            max_residual,
            dilation: f64::NAN,
            axis_residual: f64::NAN,
        },
        profile: Some(m.clone()),
        slopes: Vec::new(),
    };
    map.prepare();
    let big = 1e6;
    map.diagnostics.dilation = map.forward(C64::new(0.0, big)).im / big;
    map.diagnostics.axis_residual = [1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&y| {
            let w = map.forward(C64::new(0.0, y));
            w.re.abs() / w.norm()
        })
        .fold(0.0, f64::max);
    Ok(map)
}

impl ConformalMap {
    fn prepare(&mut self) {
        self.slopes = self
            .t
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect();
    }

    pub fn profile(&self) -> &Profile {
        self.profile.as_ref().expect("profile attached at build or load")
    }

    pub fn domain(&self) -> GraphDomain {
        GraphDomain { side: self.side, profile: self.profile().clone() }
    }

    pub fn x_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// F(ζ) and F′(ζ).
    fn cauchy(&self, z: C64) -> (C64, C64) {
        let t = &self.t;
        let n = t.len();
        let mut f = C64::new(0.0, 0.0);
        let mut df = C64::new(0.0, 0.0);
        let mut l0 = C64::new(t[0], 0.0).sub_ln(z);
        for k in 0..n - 1 {
            let l1 = C64::new(t[k + 1], 0.0).sub_ln(z);
            let dl = l1 - l0;
            let b = self.slopes[k];
            f += (self.v[k] + b * (z - t[k])) * dl;
            df += b * dl;
            l0 = l1;
        }
        let x = self.x_max();
        let vn = self.v[n - 1];
        // tails: v_N(iπ + Log(−X − ζ) − Log(X − ζ))
        f += vn * (C64::new(0.0, PI) + (C64::new(-x, 0.0) - z).ln() - (C64::new(x, 0.0) - z).ln());
        (f / PI, df / PI)
    }

    pub fn forward(&self, z: C64) -> C64 {
        z + self.cauchy(z).0
    }

    pub fn forward_deriv(&self, z: C64) -> C64 {
        1.0 + self.cauchy(z).1
    }

    pub fn forward_with_deriv(&self, z: C64) -> (C64, C64) {
        let (f, df) = self.cauchy(z);
        (z + f, 1.0 + df)
    }

    /// Boundary correspondence t ↦ w(t) = t + u(t) + i v(t) by interpolation.
    pub fn boundary_point(&self, x: f64) -> C64 {
        let t = &self.t;
        if x.abs() >= self.x_max() {
            // frozen tail: v constant, u from the closed form
            return self.forward(C64::new(x, 1e-12));
        }
        let k = t.partition_point(|s| *s <= x).clamp(1, t.len() - 1) - 1;
        let lam = (x - t[k]) / (t[k + 1] - t[k]);
        let u = self.u[k] * (1.0 - lam) + self.u[k + 1] * lam;
        let v = self.v[k] * (1.0 - lam) + self.v[k + 1] * lam;
        C64::new(x + u, v)
    }

    /// The real ξ whose boundary image w(ξ) has abscissa x (t ↦ Re w(t) is
    /// increasing on ℝ).
    pub fn boundary_preimage(&self, x: f64) -> f64 {
        let re = |t: f64| self.boundary_point(t).re;
        let (mut a, mut b) = (x - 1.0, x + 1.0);
        while re(a) > x {
            a -= 2.0 * (x - a).abs().max(1.0);
        }
        while re(b) < x {
            b += 2.0 * (b - x).abs().max(1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if re(mid) < x {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// R(ξ) = lim_{η→0} excess(ξ, η)/η, the finite-part Hilbert derivative of v.
    pub fn boundary_stretch(&self, xi: f64) -> f64 {
        let eta = 1e-8;
        self.poisson_excess(xi, eta) / eta
    }

    /// W(z) by damped Newton on w(ζ) = z.
    pub fn inverse(&self, z: C64) -> Result<C64> {
        let s = self.side.sign();
        let mut zeta = C64::new(z.re, (z.im - s * self.profile().value(z.re)).max(1e-3 * (1.0 + z.im.abs())));
        let tol = self.config.newton_tol * (1.0 + z.norm());
        let (mut w, mut dw) = self.forward_with_deriv(zeta);
        let mut res = (w - z).norm();
        for _ in 0..100 {
            if res <= tol {
                return Ok(zeta);
            }
            let step = (w - z) / dw;
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = zeta - lam * step;
                if cand.im > 0.0 {
                    let (cw, cdw) = self.forward_with_deriv(cand);
                    let cres = (cw - z).norm();
                    if cres < res || cres <= tol {
                        zeta = cand;
                        w = cw;
                        dw = cdw;
                        res = cres;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res <= tol {
            Ok(zeta)
        } else {
            Err(Error::NewtonDivergence { re: z.re, im: z.im })
        }
    }

    /// W′(z) = 1/w′(W(z)).
    pub fn inverse_deriv(&self, z: C64) -> Result<C64> {
        Ok(1.0 / self.forward_deriv(self.inverse(z)?))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    /// Load a saved map; the boundary residual is re-audited.
    pub fn load_json(path: &Path) -> Result<Self> {
        let mut map: ConformalMap = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if map.version != MAP_FORMAT_VERSION {
            return Err(Error::Parse { pos: 0, msg: format!("unsupported map version {}", map.version) });
        }
        let p = make_profile(&map.profile_spec)?;
        let s = map.side.sign();
        let u = HilbertKernel::new(&map.t).apply(&map.v);
        let res = map
            .t
            .iter()
            .zip(&u)
            .zip(&map.v)
            .map(|((&x, &du), &vv)| (vv - s * p.value(x + du)).abs())
            .fold(0.0, f64::max);
        if !(res <= map.config.residual_tol) {
            return Err(Error::BuilderResidual { residual: res, tol: map.config.residual_tol });
        }
        map.u = u;
        map.profile = Some(p);
        map.prepare();
        Ok(map)
    }
}

trait SubLn {
    fn sub_ln(self, z: C64) -> C64;
}

impl SubLn for C64 {
    /// Log(self − z) on the principal branch.
    fn sub_ln(self, z: C64) -> C64 {
        (self - z).ln()
    }
}

/// Probe grid: |Re| up to 10³ and heights from 10⁻³ to 10³.
pub fn default_probe_grid() -> Vec<C64> {
    let xs: [f64; 15] = [0.0, 0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0, 300.0, 1000.0];
    let ys: [f64; 9] = [1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0, 1000.0];
    let mut g = Vec::new();
    for &x in &xs {
        for &y in &ys {
            if (x * x + y * y).sqrt() <= 1000.0 * 1.0001 {
                g.push(C64::new(x, y));
                if x > 0.0 {
                    g.push(C64::new(-x, y));
                }
            }
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivBounds {
    pub inf: f64,
    pub sup: f64,
    pub ratio: f64,
}

/// inf and sup of |w′| over `grid`.
pub fn deriv_bounds(map: &ConformalMap, grid: &[C64]) -> DerivBounds {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &z in grid {
        let d = map.forward_deriv(z).norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    DerivBounds { inf: lo, sup: hi, ratio: hi / lo }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KelloggRow {
    pub s: f64,
    pub h1: (f64, f64),
    pub h2: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KelloggReport {
    pub a: f64,
    pub rows: Vec<KelloggRow>,
    /// |H′ − 1| and |H″ + 2iA| at the last grid entry.
    pub h1_deviation: f64,
    pub h2_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// H′ and H″ of H(s) = s/φ(s), φ(s) = 1 + is(A − m(1/s)), from m′ and m″.
pub fn kellogg_h_check(m: &Profile, a: f64, s_grid: &[f64]) -> Result<KelloggReport> {
    if !(a > m.value(0.0)) {
        return Err(Error::Domain(format!("need A > m(0) = {}, got {a}", m.value(0.0))));
    }
    if s_grid.is_empty() || s_grid.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        return Err(Error::Domain("s grid must lie in (0, 1]".into()));
    }
    let i = C64::new(0.0, 1.0);
    let mut rows = Vec::new();
    for &s in s_grid {
        let x = 1.0 / s;
        let (m0, m1, m2) = (m.value(x), m.deriv1(x), m.deriv2(x));
        let phi = 1.0 + i * s * (a - m0);
        let dphi = i * (a - m0 + m1 / s);
        let ddphi = -i * m2 / (s * s * s);
        let h1 = 1.0 / phi - s * dphi / (phi * phi);
        let h2 = -2.0 * dphi / (phi * phi) + 2.0 * s * dphi * dphi / (phi * phi * phi) - s * ddphi / (phi * phi);
        rows.push(KelloggRow { s, h1: (h1.re, h1.im), h2: (h2.re, h2.im) });
    }
    let last = rows.last().unwrap();
    let h1_deviation = (C64::new(last.h1.0, last.h1.1) - 1.0).norm();
    let h2_deviation = (C64::new(last.h2.0, last.h2.1) + 2.0 * i * a).norm();
    let tolerance = 1e-2 * (1.0 + 2.0 * a);
    Ok(KelloggReport {
        a,
        rows,
        h1_deviation,
        h2_deviation,
        tolerance,
        passed: h1_deviation < 1e-2 && h2_deviation < tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    /// Samples (x, n(x)) for x ≥ 0, increasing in x.
    pub samples: Vec<(f64, f64)>,
    /// max |W(−t) + conj W(t)| over the sampled t.
    pub symmetry_residual: f64,
    pub symmetric: bool,
}

impl BoundaryCurve {
    /// n(x) by linear interpolation, even in x; constant beyond the last sample.
    pub fn n(&self, x: f64) -> f64 {
        let x = x.abs();
        let s = &self.samples;
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

impl ConformalMap {
    /// v(ξ) by linear interpolation; frozen beyond ±X_max.
    pub fn boundary_height(&self, xi: f64) -> f64 {
        let t = &self.t;
        if xi.abs() >= self.x_max() {
            return self.v[t.len() - 1];
        }
        let k = t.partition_point(|s| *s <= xi).clamp(1, t.len() - 1) - 1;
        self.v[k] + self.slopes[k] * (xi - t[k])
    }

    /// Im F(ξ+iη) − v(ξ), summed with v(ξ) subtracted so that it stays accurate
    /// relative to η when both are tiny.
    pub fn poisson_excess(&self, xi: f64, eta: f64) -> f64 {
        let t = &self.t;
        let n = t.len();
        let v0 = self.boundary_height(xi);
        let mut acc = 0.0;
        for k in 0..n - 1 {
            let (a, b) = (t[k] - xi, t[k + 1] - xi);
            let beta = self.slopes[k];
            let c0 = self.v[k] - beta * a - v0;
            let datan = if a * b > -eta * eta {
                ((b - a) * eta).atan2(eta * eta + a * b)
            } else {
                (b / eta).atan() - (a / eta).atan()
            };
            acc += c0 * datan + 0.5 * beta * eta * ((b * b + eta * eta) / (a * a + eta * eta)).ln();
        }
        let x = self.x_max();
        acc += (self.v[n - 1] - v0) * ((eta / (x - xi)).atan() + (eta / (x + xi)).atan());
        acc / PI
    }

    /// n(ξ) = Im W on Γ = W(ℝ): the root η > 0 of η + v(ξ) + excess(ξ, η) = 0.
    pub fn gamma_height(&self, xi: f64) -> Result<f64> {
        if self.side != Side::Below {
            return Err(Error::Domain("Γ is defined for maps onto H(−m)".into()));
        }
        let v0 = self.boundary_height(xi);
        if v0 >= 0.0 {
            return Ok(0.0);
        }
        let mut eta = -v0;
        let mut change = f64::INFINITY;
        for _ in 0..100 {
            let r = self.poisson_excess(xi, eta) / eta;
            let next = -v0 / (1.0 + r);
            if !(next > 0.0) {
                break;
            }
            change = (next - eta).abs() / next;
            eta = next;
            if change <= 1e-13 {
                break;
            }
        }
        if change <= 1e-9 {
            Ok(eta)
        } else {
            Err(Error::NewtonDivergence { re: xi, im: eta })
        }
    }
}

/// Γ = W(ℝ) = {x + i n(x)} for a map onto H(−m).
pub fn boundary_curve(map: &ConformalMap, samples: usize) -> Result<BoundaryCurve> {
    if map.side != Side::Below {
        return Err(Error::Domain("the boundary curve is defined for H(−m)".into()));
    }
    let xmax = map.x_max() / 2.0;
    let n = samples.max(8);
    let mut pts = Vec::with_capacity(n);
    let mut sym: f64 = 0.0;
    for k in 0..n {
        // cubic grading: dense near 0
        let s = k as f64 / (n - 1) as f64;
        let x = xmax * s * s * s;
        let h = map.gamma_height(x)?;
        if x > 0.0 {
            sym = sym.max((map.gamma_height(-x)? - h).abs());
        }
        pts.push((x, h));
    }
    for p in pts.windows(2) {
        if p[1].1 > p[0].1 + 1e-8 {
            return Err(Error::Audit(format!("n increases between x = {} and x = {}", p[0].0, p[1].0)));
        }
    }
    // w maps Γ back onto ℝ
    for &(x, h) in pts.iter().step_by((n / 16).max(1)) {
        let w = map.forward(C64::new(x, h));
        if w.im.abs() > 1e-9 {
            return Err(Error::Audit(format!("Im w = {:e} on Γ at x = {x}", w.im)));
        }
    }
    Ok(BoundaryCurve { samples: pts, symmetry_residual: sym, symmetric: sym < 1e-8 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub heights: Vec<f64>,
    pub points_per_row: usize,
    pub violations: Vec<(f64, f64)>,
    pub slack: f64,
}

/// V(x, y) = Im W(x+iy) non-increasing in x ≥ 0 along rows y ∈ `heights`.
/// The row y = 0 is V(x, 0) = Im W(x), computed by Newton like the others.
pub fn v_monotonicity(map: &ConformalMap, heights: &[f64], points: usize, x_end: f64) -> Result<MonotonicityReport> {
    let slack = 1e-8;
    let mut violations = Vec::new();
    for &y in heights {
        let mut prev: Option<f64> = None;
        for k in 0..points {
            let s = k as f64 / (points - 1) as f64;
            let x = x_end * s * s;
            let v = map.inverse(C64::new(x, y))?.im;
            if let Some(p) = prev {
                if v > p + slack {
                    violations.push((x, y));
                }
            }
            prev = Some(v);
        }
    }
    Ok(MonotonicityReport { heights: heights.to_vec(), points_per_row: points, violations, slack })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBoundReport {
    pub c: f64,
    pub x_end: f64,
    pub points: usize,
    pub max_ratio: f64,
    pub violations: Vec<f64>,
}

/// Right end of the window where m(x) ≥ HEIGHT_RESOLUTION·(1 + x), capped at `x_end`.
pub fn resolved_window(m: &Profile, x_end: f64) -> f64 {
    let ok = |x: f64| m.ln_value(x) >= (HEIGHT_RESOLUTION * (1.0 + x)).ln();
    if ok(x_end) {
        return x_end;
    }
    let (mut a, mut b) = (0.0, x_end);
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        if ok(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

/// n(x) ≤ C·m(x/C) at `points` abscissae in [0, X], with C = sup |W′| and
/// X = `x_end` shortened to where m stays above coordinate resolution.
pub fn n_bound_check(map: &ConformalMap, c: f64, points: usize, x_end: f64) -> Result<GraphBoundReport> {
    let m = map.profile();
    let x_end = resolved_window(m, x_end);
    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for k in 0..points {
        let s = k as f64 / (points - 1) as f64;
        let x = x_end * s * s;
        let r = map.gamma_height(x)? / (c * m.value(x / c));
        max_ratio = max_ratio.max(r);
        if r > 1.0 {
            violations.push(x);
        }
    }
    Ok(GraphBoundReport { c, x_end, points, max_ratio, violations })
}

/// sup |W′| = 1/inf |w′(ζ)| sampled on the probe grid and along the boundary.
pub fn sup_inverse_deriv(map: &ConformalMap) -> f64 {
    let mut grid = default_probe_grid();
    grid.extend((0..200).map(|k| C64::new(map.x_max() / 4.0 * (k as f64 / 199.0).powi(3), 1e-6)));
    1.0 / deriv_bounds(map, &grid).inf
}

pub fn build_for_spec(side: Side, spec: &ProfileSpec, cfg: &MapConfig) -> Result<ConformalMap> {
    build_map(&GraphDomain::new(side, make_profile(spec)?)?, cfg)
}
