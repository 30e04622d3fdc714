use serde::{Deserialize, Serialize};

use super::Profile;
use crate::quad::{integrate, QuadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogIntegralReport {
    /// (T, ∫₁^T log⁻m(t)/t² dt) at T = 2, 4, … and T_max.
    pub partial: Vec<(f64, f64)>,
    /// (K, Σ_{k≤K} 2^{−k} log⁻m(2^k)) for K = 0..=K_max.
    pub dyadic_sum: Vec<(u32, f64)>,
    pub increments: Vec<f64>,
    /// exp(slope) of a least-squares fit of ln(increment) over the last 6 octaves.
    pub ratio_fit: f64,
    pub ratio_fit_residual: f64,
    /// Smallest of the last 6 increments.
    pub floor_fit: f64,
    pub quadrature_error: f64,
    pub verdict: Verdict,
}

fn log_minus(m: &Profile, t: f64) -> f64 {
    (-m.ln_value(t)).max(0.0)
}

/// Least-squares line through (i, y_i); returns (slope, rms residual).
pub(crate) fn line_fit(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (v - ym);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let rss: f64 = y
        .iter()
        .enumerate()
        .map(|(i, v)| (v - ym - slope * (i as f64 - xm)).powi(2))
        .sum();
    (slope, (rss / n).sqrt())
}

/// Partial log-integrals and dyadic sums with a convergence verdict.
///
/// Convergent when the last six dyadic increments decay with a fitted ratio
/// below 0.95 (or vanish). Divergent when they are positive and either do not
/// decay (ratio ≥ 0.99) or never drop below half their mean. Inconclusive
/// otherwise.
pub fn log_integral(m: &Profile, t_max: f64, k_max: u32) -> LogIntegralReport {
    let t_max = t_max.max(2.0);
    let k_max = k_max.max(4);
    let cfg = QuadConfig::new(1e-300, 1e-8).with_panels(2000);
    let mut breaks: Vec<f64> = m
        .plateaus()
        .map(|p| p.iter().flat_map(|q| [q.lo, q.hi]).collect())
        .unwrap_or_default();
    breaks.retain(|b| *b > 1.0 && *b < t_max);

    let mut partial = Vec::new();
    let mut acc = 0.0;
    let mut err = 0.0;
    let mut lo = 1.0;
    while lo < t_max {
        let hi = (2.0 * lo).min(t_max);
        let r = integrate(|t| log_minus(m, t) / (t * t), lo, hi, &breaks, &cfg);
        acc += r.value;
        err += r.error;
        partial.push((hi, acc));
        lo = hi;
    }

    let mut dyadic_sum = Vec::with_capacity(k_max as usize + 1);
    let mut increments = Vec::with_capacity(k_max as usize + 1);
    let mut s = 0.0;
    for k in 0..=k_max {
        let d = 2f64.powi(-(k as i32)) * log_minus(m, 2f64.powi(k as i32));
        s += d;
        increments.push(d);
        dyadic_sum.push((k, s));
    }

    let tail = &increments[increments.len() - 6..];
    let floor_fit = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let (ratio_fit, ratio_fit_residual, verdict) = if tail.iter().all(|d| *d == 0.0) {
        (0.0, 0.0, Verdict::Convergent)
    } else if tail.iter().any(|d| *d == 0.0) {
        // mixed zeros: increments vanish intermittently, treat as decaying
        (0.0, f64::NAN, Verdict::Inconclusive)
    } else {
        let logs: Vec<f64> = tail.iter().map(|d| d.ln()).collect();
        let (slope, res) = line_fit(&logs);
        let ratio = slope.exp();
        let v = if ratio < 0.95 {
            Verdict::Convergent
        } else if ratio >= 0.99 || floor_fit >= 0.5 * tail.iter().sum::<f64>() / 6.0 {
            Verdict::Divergent
        } else {
            Verdict::Inconclusive
        };
        (ratio, res, v)
    };

    LogIntegralReport {
        partial,
        dyadic_sum,
        increments,
        ratio_fit,
        ratio_fit_residual,
        floor_fit,
        quadrature_error: err,
        verdict,
    }
}
