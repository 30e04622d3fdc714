//! The elliptic modular function λ = θ₂⁴/θ₃⁴ on the upper half-plane.
//!
//! Points are first reduced into the standard fundamental domain of SL₂(ℤ)
//! (|Re σ| ≤ 1/2, |σ| ≥ 1). Each generator acts on λ through one of the six
//! anharmonic maps, which are tracked as an integer Möbius matrix. Values are
//! carried as logarithms so that evaluations near cusps, where λ is
//! exponentially close to 0, 1 or ∞, keep full relative precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);
const LN16: f64 = 2.772_588_722_239_781;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularConfig {
    /// Series truncation: stop once a term falls below this fraction of the sum.
    pub trunc_rel: f64,
    /// Nome guard ε_q: series are refused when |q| ≥ 1 − ε_q.
    pub q_guard: f64,
    /// Points with Im τ below this are rejected as near-real.
    pub min_im: f64,
    pub max_reductions: usize,
}

impl Default for ModularConfig {
    fn default() -> Self {
        Self {
            trunc_rel: 1e-18,
            q_guard: 1e-3,
            min_im: 1e-6,
            max_reductions: 64,
        }
    }
}

/// λ and dλ/dτ at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaValue {
    pub value: C64,
    pub derivative: C64,
    /// Set when reduction stopped early and the series ran at a large nome.
    pub precision_warning: bool,
}

/// ln λ and d(ln λ)/dτ. The imaginary part of `ln` is defined modulo 2π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaLog {
    pub ln: C64,
    pub dln: C64,
    pub precision_warning: bool,
}

impl LambdaLog {
    pub fn ln_abs(&self) -> f64 {
        self.ln.re
    }

    pub fn value(&self) -> C64 {
        self.ln.exp()
    }

    /// Spherical derivative |λ′|/(1+|λ|²), written to avoid overflow.
    pub fn spherical_derivative(&self) -> f64 {
        let l = self.ln.re;
        if l.abs() > 700.0 {
            return 0.5 * self.dln.norm() * (-l.abs()).exp() * 2.0;
        }
        self.dln.norm() / (2.0 * l.cosh())
    }
}

pub fn nome(tau: C64) -> Result<C64> {
    check_upper(tau)?;
    Ok((I * std::f64::consts::PI * tau).exp())
}

fn check_upper(tau: C64) -> Result<()> {
    if !tau.re.is_finite() || !tau.im.is_finite() {
        return Err(Error::Domain(format!("non-finite point {tau}")));
    }
    if tau.im <= 0.0 {
        return Err(Error::Domain(format!("Im τ = {} is not positive", tau.im)));
    }
    Ok(())
}

fn check_nome(q: C64, cfg: &ModularConfig) -> Result<()> {
    if !(q.norm() < 1.0 - cfg.q_guard) {
        return Err(Error::NonConvergence(format!(
            "|q| = {} exceeds the guard 1 - {}",
            q.norm(),
            cfg.q_guard
        )));
    }
    Ok(())
}

/// Σ_{n≥0} q^{f(n)} and Σ f(n) q^{f(n)} for an increasing exponent sequence,
/// given ln q.
fn power_series(lq: C64, exps: impl Iterator<Item = u64>, cfg: &ModularConfig) -> (C64, C64) {
    let mut s = C64::new(0.0, 0.0);
    let mut ds = C64::new(0.0, 0.0);
    for e in exps {
        let t = if e == 0 {
            C64::new(1.0, 0.0)
        } else {
            (lq * e as f64).exp()
        };
        s += t;
        ds += t * e as f64;
        // t underflows to 0 once it is negligible against any non-zero sum
        if t.norm() <= cfg.trunc_rel * s.norm() {
            break;
        }
    }
    (s, ds)
}

/// θ₃(q) = 1 + 2 Σ_{n≥1} q^{n²}.
pub fn theta3(q: C64, cfg: &ModularConfig) -> Result<C64> {
    check_nome(q, cfg)?;
    if q.norm() == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let (s, _) = power_series(q.ln(), (1..).map(|n: u64| n * n), cfg);
    Ok(1.0 + 2.0 * s)
}

/// θ₂(q) = 2 Σ_{n≥0} q^{(n+1/2)²}, with q^{1/4} on the principal branch.
pub fn theta2(q: C64, cfg: &ModularConfig) -> Result<C64> {
    check_nome(q, cfg)?;
    if q.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let (s, _) = power_series(q.ln(), (0..).map(|n: u64| n * (n + 1)), cfg);
    Ok(2.0 * q.powf(0.25) * s)
}

/// Integer Möbius map a ↦ (αa+β)/(γa+δ) acting on λ-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ValueMap([i64; 4]);

impl ValueMap {
    const ID: ValueMap = ValueMap([1, 0, 0, 1]);
    /// λ(σ+1) = λ(σ)/(λ(σ)−1)
    const SHIFT: ValueMap = ValueMap([1, 0, 1, -1]);
    /// λ(−1/σ) = 1 − λ(σ)
    const INVERT: ValueMap = ValueMap([-1, 1, 0, 1]);

    fn then(self, o: ValueMap) -> ValueMap {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        ValueMap([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

/// ln(a·e^L + b) for small integers a, b, and dln/dL.
fn ln_affine(a: i64, b: i64, l: C64) -> (C64, C64) {
    let (af, bf) = (a as f64, b as f64);
    match (a, b) {
        (0, _) => (C64::new(bf, 0.0).ln(), C64::new(0.0, 0.0)),
        (_, 0) => (C64::new(af, 0.0).ln() + l, C64::new(1.0, 0.0)),
        _ => {
            if l.re > 0.0 {
                let t = (bf / af) * (-l).exp();
                let r = 1.0 / (1.0 + t);
                (C64::new(af, 0.0).ln() + l + (1.0 + t).ln(), r)
            } else {
                let t = (af / bf) * l.exp();
                let r = t / (1.0 + t);
                (C64::new(bf, 0.0).ln() + (1.0 + t).ln(), r)
            }
        }
    }
}

/// ln λ in the reduced region via ln λ = ln 16 + iπσ + 4 ln(P/θ₃),
/// P = Σ q^{n(n+1)}. Derivative from the term-wise differentiated series.
fn ln_lambda_series(sigma: C64, cfg: &ModularConfig) -> Result<(C64, C64)> {
    let pi = std::f64::consts::PI;
    let q = (I * pi * sigma).exp();
    check_nome(q, cfg)?;
    let lq = I * pi * sigma;
    let (p, dp) = power_series(lq, (0..).map(|n: u64| n * (n + 1)), cfg);
    let (t, dt) = power_series(lq, (1..).map(|n: u64| n * n), cfg);
    let th3 = 1.0 + 2.0 * t;
    let dth3 = 2.0 * dt;
    // q d/dq of ln(P/θ₃); dq/dσ = iπ q
    let dlog_q = dp / p - dth3 / th3;
    let ln = LN16 + I * pi * sigma + 4.0 * (p / th3).ln();
    let dln = I * pi * (1.0 + 4.0 * dlog_q);
    Ok((ln, dln))
}

/// ln λ(τ) with reduction to the SL₂(ℤ) fundamental domain.
pub fn lambda_log(tau: C64, cfg: &ModularConfig) -> Result<LambdaLog> {
    check_upper(tau)?;
    if tau.im < cfg.min_im {
        return Err(Error::Domain(format!(
            "Im τ = {:e} is below the near-real cutoff {:e}",
            tau.im, cfg.min_im
        )));
    }
    let mut sigma = tau;
    let mut map = ValueMap::ID;
    let mut dsigma = C64::new(1.0, 0.0);
    let mut warning = true;
    for _ in 0..cfg.max_reductions {
        let n = (sigma.re + 0.5).floor();
        if n != 0.0 {
            sigma.re -= n;
            if (n as i64).rem_euclid(2) == 1 {
                map = map.then(ValueMap::SHIFT);
            }
        }
        if sigma.norm_sqr() < 1.0 - 1e-15 {
            let inv = -1.0 / sigma;
            dsigma *= 1.0 / (sigma * sigma);
            sigma = inv;
            map = map.then(ValueMap::INVERT);
        } else {
            warning = false;
            break;
        }
    }
    let (l, dl) = ln_lambda_series(sigma, cfg)?;
    let [a, b, c, d] = map.0;
    let (ln_num, r_num) = ln_affine(a, b, l);
    let (ln_den, r_den) = ln_affine(c, d, l);
    Ok(LambdaLog {
        ln: ln_num - ln_den,
        dln: (r_num - r_den) * dl * dsigma,
        precision_warning: warning,
    })
}

pub fn lambda_eval(tau: C64, cfg: &ModularConfig) -> Result<LambdaValue> {
    let l = lambda_log(tau, cfg)?;
    let value = l.ln.exp();
    Ok(LambdaValue {
        value,
        derivative: value * l.dln,
        precision_warning: l.precision_warning,
    })
}

pub fn spherical_derivative_lambda(tau: C64, cfg: &ModularConfig) -> Result<f64> {
    Ok(lambda_log(tau, cfg)?.spherical_derivative())
}

/// Direct θ-quotient at τ without reduction. Slow near the real axis; kept as
/// a cross-check for the reduced path.
pub fn lambda_unreduced(tau: C64, cfg: &ModularConfig) -> Result<C64> {
    let q = nome(tau)?;
    check_nome(q, cfg)?;
    let (p, _) = power_series(q.ln(), (0..).map(|n: u64| n * (n + 1)), cfg);
    let th3 = theta3(q, cfg)?;
    Ok(16.0 * q * (p / th3).powi(4))
}

/// The anharmonic orbit {a, 1/a, 1−a, 1/(1−a), a/(a−1), (a−1)/a}.
pub fn six_values(a: C64) -> Result<[C64; 6]> {
    let one = C64::new(1.0, 0.0);
    if a == C64::new(0.0, 0.0) || a == one {
        return Err(Error::Domain(format!("six_values undefined at {a}")));
    }
    Ok([a, one / a, one - a, one / (one - a), a / (a - one), (a - one) / a])
}

/// Distance from `v` to the nearest of the six anharmonic images of `a`,
/// relative to max(1, |v|).
pub fn six_value_mismatch(a: C64, v: C64) -> Result<f64> {
    let six = six_values(a)?;
    Ok(six
        .iter()
        .map(|s| (s - v).norm() / v.norm().max(1.0))
        .fold(f64::INFINITY, f64::min))
}

pub fn mobius(m: [i64; 4], tau: C64) -> C64 {
    let [a, b, c, d] = m.map(|x| x as f64);
    (a * tau + b) / (c * tau + d)
}

/// The anharmonic map g with λ∘M = g∘λ, as an index into [`six_values`] order.
///
/// The action only depends on M mod 2; the table is generated by a breadth-first
/// walk over words in T = [[1,1],[0,1]] and S = [[0,−1],[1,0]].
pub fn anharmonic_index(m: [i64; 4]) -> usize {
    let key = m.map(|x| x.rem_euclid(2) as u8);
    let table = coset_table();
    table
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, g)| *g)
        .expect("SL2(Z/2) has exactly six elements")
}

fn coset_table() -> &'static [([u8; 4], usize); 6] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[([u8; 4], usize); 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        // anharmonic maps as integer matrices, in six_values order
        let maps = [
            ValueMap([1, 0, 0, 1]),
            ValueMap([0, 1, 1, 0]),
            ValueMap([-1, 1, 0, 1]),
            ValueMap([0, 1, -1, 1]),
            ValueMap([1, 0, 1, -1]),
            ValueMap([1, -1, 1, 0]),
        ];
        let index_of = |g: ValueMap| -> usize {
            let [a, b, c, d] = g.0;
            maps.iter()
                .position(|h| {
                    let [e, f, gg, hh] = h.0;
                    // projective equality
                    a * f - b * e == 0
                        && a * gg - c * e == 0
                        && a * hh - d * e == 0
                        && b * gg - c * f == 0
                        && b * hh - d * f == 0
                        && c * hh - d * gg == 0
                })
                .expect("closed under composition")
        };
        let reduce = |g: ValueMap| maps[index_of(g)];
        let mul2 = |x: [u8; 4], y: [u8; 4]| {
            [
                (x[0] * y[0] + x[1] * y[2]) % 2,
                (x[0] * y[1] + x[1] * y[3]) % 2,
                (x[2] * y[0] + x[3] * y[2]) % 2,
                (x[2] * y[1] + x[3] * y[3]) % 2,
            ]
        };
        let gens = [([1u8, 1, 0, 1], ValueMap::SHIFT), ([0u8, 1, 1, 0], ValueMap::INVERT)];
        let mut found: Vec<([u8; 4], ValueMap)> = vec![([1, 0, 0, 1], ValueMap::ID)];
        let mut frontier = 0;
        while frontier < found.len() {
            let (k, g) = found[frontier];
            frontier += 1;
            for (gk, gg) in gens {
                // λ∘(M·G) = g_M ∘ g_G ∘ λ
                let nk = mul2(k, gk);
                if !found.iter().any(|(x, _)| *x == nk) {
                    found.push((nk, reduce(g.then(gg))));
                }
            }
        }
        assert_eq!(found.len(), 6);
        let mut out = [([0u8; 4], 0usize); 6];
        for (i, (k, g)) in found.into_iter().enumerate() {
            out[i] = (k, index_of(g));
        }
        out
    })
}

/// Apply the i-th anharmonic map to a value.
pub fn apply_anharmonic(index: usize, a: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    match index {
        0 => a,
        1 => one / a,
        2 => one - a,
        3 => one / (one - a),
        4 => a / (a - one),
        5 => (a - one) / a,
        _ => panic!("anharmonic index out of range"),
    }
}
