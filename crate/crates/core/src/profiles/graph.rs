//! Graphs y = φ(x) and the distance bound for points above them.

use serde::{Deserialize, Serialize};

use super::Profile;

/// A Lipschitz graph y = φ(x), optionally restricted to a window of x.
pub trait Graph {
    fn height(&self, x: f64) -> f64;
    /// Upper bound for sup |φ′|.
    fn lipschitz(&self) -> f64;
    fn window(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantGraph(pub f64);

impl Graph for ConstantGraph {
    fn height(&self, _: f64) -> f64 {
        self.0
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
}

/// y = slope·x + offset on a clipped window.
#[derive(Debug, Clone, Copy)]
pub struct LineGraph {
    pub slope: f64,
    pub offset: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Graph for LineGraph {
    fn height(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }
    fn lipschitz(&self) -> f64 {
        self.slope.abs()
    }
    fn window(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// y = sign·m(x).
#[derive(Debug, Clone)]
pub struct ProfileGraph<'a> {
    pub profile: &'a Profile,
    pub sign: f64,
}

impl<'a> ProfileGraph<'a> {
    pub fn above(profile: &'a Profile) -> Self {
        ProfileGraph { profile, sign: 1.0 }
    }
    pub fn below(profile: &'a Profile) -> Self {
        ProfileGraph { profile, sign: -1.0 }
    }
}

impl Graph for ProfileGraph<'_> {
    fn height(&self, x: f64) -> f64 {
        self.sign * self.profile.value(x)
    }
    fn lipschitz(&self) -> f64 {
        self.profile.lipschitz()
    }
}

pub struct FnGraph<F: Fn(f64) -> f64> {
    pub f: F,
    pub lipschitz: f64,
}

impl<F: Fn(f64) -> f64> Graph for FnGraph<F> {
    fn height(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceCheck {
    pub exact: f64,
    pub bound: f64,
    pub lipschitz: f64,
    pub holds: bool,
}

/// Brute-force distance from (x, y) to the graph against (y − φ(x))/√(1+L²).
///
/// Candidates are confined to |t − x| ≤ y − φ(x), the distance to the point
/// straight below. A 4001-point scan is followed by golden-section refinement
/// around the three best samples.
pub fn graph_distance_check<G: Graph + ?Sized>(g: &G, x: f64, y: f64) -> DistanceCheck {
    let l = g.lipschitz();
    let gap = y - g.height(x);
    let bound = gap / (1.0 + l * l).sqrt();
    let (wlo, whi) = g.window();
    let lo = (x - gap).max(wlo);
    let hi = (x + gap).min(whi);
    let dist = |t: f64| ((t - x).powi(2) + (y - g.height(t)).powi(2)).sqrt();

    let n = 4000;
    let h = (hi - lo) / n as f64;
    let mut samples: Vec<(f64, f64)> = (0..=n).map(|i| {
        let t = lo + h * i as f64;
        (dist(t), t)
    }).collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = samples[0].0;
    for &(_, t0) in samples.iter().take(3) {
        let (mut a, mut b) = ((t0 - h).max(lo), (t0 + h).min(hi));
        let r = 0.618_033_988_749_894_8;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (dist(c), dist(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = dist(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = dist(d);
            }
        }
        best = best.min(fc).min(fd);
    }
    DistanceCheck {
        exact: best,
        bound,
        lipschitz: l,
        holds: best >= bound * (1.0 - 1e-6),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{parse_profile, tame_majorant, tame_minorant};
    use rand::{Rng, SeedableRng};

    #[test]
    fn flat_graph_equality() {
        let c = graph_distance_check(&ConstantGraph(0.0), 3.0, 2.0);
        assert!((c.exact - 2.0).abs() < 1e-12);
        assert_eq!(c.bound, 2.0);
    }

    #[test]
    fn line_graph_is_sharp() {
        let a = 1.7;
        let line = LineGraph { slope: 1.0, offset: 0.0, lo: -10.0, hi: 10.0 };
        let c = graph_distance_check(&line, 0.0, a);
        assert!((c.bound - a / 2f64.sqrt()).abs() < 1e-15);
        assert!((c.exact - a / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn negative_exponential_graph() {
        // oracle: brute force over a uniform 2·10⁶ grid
        let phi = |t: f64| -(-t.abs()).exp();
        let g = FnGraph { f: phi, lipschitz: 1.0 };
        let c = graph_distance_check(&g, 0.0, 1.0);
        let brute = (0..=2_000_000)
            .map(|i| -2.0 + 4.0 * i as f64 / 2e6)
            .map(|t| (t * t + (1.0 - phi(t)).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!((c.exact - brute).abs() < 1e-9);
        assert!(c.exact >= 2.0 / 2f64.sqrt());
        assert!(c.holds);
    }

    #[test]
    fn claim_one_on_corpus() {
        let mut graphs = Vec::new();
        for s in ["exp(-sqrt(abs(x)))", "exp(-abs(x))", "1/(1+abs(x))", "exp(-x^2)"] {
            let m = parse_profile(s).unwrap();
            graphs.push(tame_minorant(&m).unwrap());
            graphs.push(tame_majorant(&m).unwrap());
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for i in 0..1000 {
            let p = &graphs[i % graphs.len()];
            let g = if i % 2 == 0 { ProfileGraph::above(p) } else { ProfileGraph::below(p) };
            let x: f64 = rng.random_range(-20.0..20.0);
            let y = g.height(x) + 10f64.powf(rng.random_range(-3.0..1.0));
            let c = graph_distance_check(&g, x, y);
            assert!(c.holds, "{i}: {c:?}");
        }
    }
}
