use serde::{Deserialize, Serialize};

use super::{Plateau, Profile, ProfileSpec};
use crate::error::{Error, Result};

/// Number of dyadic plateaus built above |x| ≤ 1 (k = 3..=octaves).
pub const DEFAULT_OCTAVES: u32 = 40;

const LN2: f64 = std::f64::consts::LN_2;

/// Plateau k covers 2^k − 2^{k−3} ≤ |x| ≤ 2^k + 2^{k−2}.
fn dyadic_plateau(k: u32) -> (f64, f64) {
    let p = 2f64.powi(k as i32);
    (p - p / 8.0, p + p / 4.0)
}

pub(crate) fn build_minorant(m: &Profile, octaves: u32) -> Profile {
    let mut p = vec![Plateau {
        lo: 0.0,
        hi: 1.0,
        ln_level: m.ln_value(8.0),
    }];
    for k in 3..=octaves {
        let (lo, hi) = dyadic_plateau(k);
        let a = m.ln_value(2f64.powi(k as i32 + 3));
        let b = -((k + 3) as f64) * LN2;
        p.push(Plateau {
            lo,
            hi,
            ln_level: a.min(b),
        });
    }
    Profile::from_plateaus(
        ProfileSpec::Minorant {
            base: Box::new(m.spec().clone()),
            octaves,
        },
        p,
    )
}

pub(crate) fn build_majorant(m: &Profile, octaves: u32) -> Result<Profile> {
    // the majorant needs m → 0; audited along the dyadic grid
    let tail: Vec<f64> = (14..=20).map(|j| m.ln_value(2f64.powi(j))).collect();
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    if !decreasing || !(tail[tail.len() - 1] < m.ln_value(1.0) - LN2) {
        return Err(Error::Audit(format!(
            "majorant requires m(x) → 0 along the dyadic grid; m(2^20) = {:e}",
            tail[tail.len() - 1].exp()
        )));
    }
    let mut p = vec![Plateau {
        lo: 0.0,
        hi: 1.0,
        ln_level: m.ln_value(0.0),
    }];
    for k in 3..=octaves {
        let (lo, hi) = dyadic_plateau(k);
        p.push(Plateau {
            lo,
            hi,
            ln_level: m.ln_value(2f64.powi(k as i32 - 3)),
        });
    }
    Ok(Profile::from_plateaus(
        ProfileSpec::Majorant {
            base: Box::new(m.spec().clone()),
            octaves,
        },
        p,
    ))
}

/// Tame minorant m_* ≤ m with plateaus at m(8) and min{m(2^{k+3}), 2^{−k−3}}.
pub fn tame_minorant(m: &Profile) -> Result<Profile> {
    let p = build_minorant(m, DEFAULT_OCTAVES);
    p.audit()?;
    Ok(p)
}

/// Tame majorant m^* ≥ m with plateaus at m(0) and m(2^{k−3}).
pub fn tame_majorant(m: &Profile) -> Result<Profile> {
    let p = build_majorant(m, DEFAULT_OCTAVES)?;
    p.audit()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub x: f64,
    pub m: f64,
    pub ln_m: f64,
    pub x_m1: f64,
    pub x2_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TamenessReport {
    pub is_tame: bool,
    pub decay_witness: Vec<DecayRow>,
    pub plateau_ok: bool,
    pub decay_ok: bool,
    /// Smallest x beyond which every witness column is non-increasing.
    pub threshold_x: Option<f64>,
    pub first_violation: Option<f64>,
}

/// Index from which a per-octave maximum sequence is non-increasing.
fn monotone_from(v: &[f64]) -> usize {
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    i
}

/// Tameness audit.
///
/// Witness rows sit at x = 2^j and at the transition midpoints 1.5·2^j,
/// j = 0..20. The decay conditions hold when each column's per-octave maximum
/// is non-increasing from octave 15 or earlier and m itself strictly drops
/// over that tail. Plateau constancy is checked to 1e-12 on |x| ≤ 1 and on
/// every dyadic plateau with k ≤ 20.
pub fn is_tame(m: &Profile) -> TamenessReport {
    let mut first_violation: Option<f64> = None;
    let mut note = |x: f64| {
        if first_violation.map_or(true, |v| x < v) {
            first_violation = Some(x);
        }
    };

    let mut intervals = vec![(0.0, 1.0)];
    intervals.extend((3..=20).map(dyadic_plateau));
    let mut plateau_ok = true;
    'outer: for (lo, hi) in intervals {
        let base = m.ln_value(lo);
        for i in 1..=16 {
            let x = lo + (hi - lo) * i as f64 / 16.0;
            let l = m.ln_value(x);
            if !(l - base).abs().le(&1e-12) {
                plateau_ok = false;
                note(x);
                break 'outer;
            }
        }
    }

    let mut rows = Vec::with_capacity(42);
    for j in 0..=20 {
        for f in [1.0, 1.5] {
            let x = f * 2f64.powi(j);
            rows.push(DecayRow {
                x,
                m: m.value(x),
                ln_m: m.ln_value(x),
                x_m1: (x * m.deriv1(x)).abs(),
                x2_m2: (x * x * m.deriv2(x)).abs(),
            });
        }
    }
    let octave_max = |f: &dyn Fn(&DecayRow) -> f64| -> Vec<f64> {
        rows.chunks(2).map(|c| f(&c[0]).max(f(&c[1]))).collect()
    };
    let cols = [
        octave_max(&|r: &DecayRow| r.m),
        octave_max(&|r: &DecayRow| r.x_m1),
        octave_max(&|r: &DecayRow| r.x2_m2),
    ];
    let start = cols.iter().map(|c| monotone_from(c)).max().unwrap_or(0);
    let finite = rows.iter().all(|r| r.ln_m.is_finite() && r.x_m1.is_finite() && r.x2_m2.is_finite());
    let ln_at = |octave: usize| rows[2 * octave].ln_m.max(rows[2 * octave + 1].ln_m);
    let m_drops = ln_at(20) < ln_at(start.min(20));
    let decay_ok = finite && start <= 15 && m_drops;
    if !decay_ok {
        note(2f64.powi(start.min(20) as i32));
    }
    let is_tame = plateau_ok && decay_ok;
    TamenessReport {
        is_tame,
        decay_witness: rows,
        plateau_ok,
        decay_ok,
        threshold_x: if decay_ok { Some(2f64.powi(start as i32)) } else { None },
        first_violation: if is_tame { None } else { first_violation },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::parse_profile;

    #[test]
    fn minorant_of_constant() {
        let one = parse_profile("1").unwrap();
        let lo = tame_minorant(&one).unwrap();
        assert!((lo.value(0.5) - 1.0).abs() < 1e-15);
        for k in 3..=12 {
            let x = 2f64.powi(k);
            assert!((lo.value(x) / 2f64.powi(-k - 3) - 1.0).abs() < 1e-12);
        }
        let rep = is_tame(&lo);
        assert!(rep.is_tame, "{rep:?}");
        assert!(rep.plateau_ok);
    }

    #[test]
    fn minorant_plateau_value_for_root_profile() {
        let m = parse_profile("exp(-sqrt(abs(x)))").unwrap();
        let lo = tame_minorant(&m).unwrap();
        assert!((lo.value(8.0) - (-8.0f64).exp()).abs() < 1e-18);
        assert!((lo.value(8.0) - 3.3546e-4).abs() < 1e-8);
        assert!(is_tame(&lo).is_tame);
    }

    #[test]
    fn majorant_plateau_value_and_guard() {
        let m = parse_profile("exp(-abs(x))").unwrap();
        let hi = tame_majorant(&m).unwrap();
        assert!((hi.value(8.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((hi.value(0.3) - 1.0).abs() < 1e-15);
        assert!(is_tame(&hi).is_tame);
        assert!(matches!(tame_majorant(&parse_profile("1").unwrap()), Err(Error::Audit(_))));
    }

    #[test]
    fn raw_profiles_are_not_tame() {
        for s in ["exp(-abs(x))", "1/(1+x^2)"] {
            let r = is_tame(&parse_profile(s).unwrap());
            assert!(!r.is_tame);
            assert!(!r.plateau_ok);
            assert!(r.first_violation.is_some());
        }
        assert!(!is_tame(&parse_profile("0.5").unwrap()).is_tame);
    }

    #[test]
    fn ordering_and_monotone_transitions() {
        let corpus = [
            "exp(-abs(x)^0.25)",
            "exp(-sqrt(abs(x)))",
            "exp(-abs(x))",
            "exp(-x^2)",
            "1/(1+abs(x))",
            "min(1, 1/log(e+abs(x)))",
        ];
        for s in corpus {
            let m = parse_profile(s).unwrap();
            let lo = tame_minorant(&m).unwrap();
            let hi = tame_majorant(&m).unwrap();
            for i in 0..1000 {
                let x = -4096.0 + 8192.0 * (i as f64 + 0.5) / 1000.0;
                let (a, b, c) = (lo.ln_value(x), m.ln_value(x), hi.ln_value(x));
                assert!(a <= b + 1e-12 && b <= c + 1e-12, "{s} at {x}");
            }
            for i in 0..10_000 {
                let x = 4096.0 * (i as f64 / 10_000.0).powi(2);
                assert!(lo.deriv1(x) <= 0.0 && hi.deriv1(x) <= 0.0, "{s} at {x}");
            }
        }
    }

    #[test]
    fn transitions_are_c2_at_the_joins() {
        let lo = tame_minorant(&parse_profile("exp(-sqrt(abs(x)))").unwrap()).unwrap();
        for t in lo.transitions().iter().take(8) {
            for x in [t.lo, t.hi] {
                assert!(lo.deriv1(x).abs() < 1e-300 + 1e-14 * t.max_slope());
                assert!(lo.deriv2(x).abs() < 1e-14);
            }
        }
    }
}
