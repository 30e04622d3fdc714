//! Boundary profiles: even, positive, non-increasing functions on ℝ.

mod expr;
mod graph;
mod logint;
mod tame;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expr::{Expr, LogReal};
pub use graph::{graph_distance_check, ConstantGraph, DistanceCheck, FnGraph, Graph, LineGraph, ProfileGraph};
pub use logint::{log_integral, LogIntegralReport, Verdict};
pub use tame::{is_tame, tame_majorant, tame_minorant, DecayRow, TamenessReport, DEFAULT_OCTAVES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    AnalyticClosure,
    PiecewiseTame,
}

/// One row of a plateau table: the profile equals `value` on `lo ≤ |x| ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauRow {
    pub x_lo: f64,
    pub x_hi: f64,
    pub value: f64,
}

/// Serializable recipe from which a [`Profile`] is rebuilt deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    Expr { expr: String },
    Table { rows: Vec<PlateauRow> },
    Minorant { base: Box<ProfileSpec>, octaves: u32 },
    Majorant { base: Box<ProfileSpec>, octaves: u32 },
}

impl ProfileSpec {
    pub fn expr(s: &str) -> Self {
        ProfileSpec::Expr { expr: s.to_string() }
    }

    pub fn describe(&self) -> String {
        match self {
            ProfileSpec::Expr { expr } => expr.clone(),
            ProfileSpec::Table { rows } => format!("table({} rows)", rows.len()),
            ProfileSpec::Minorant { base, .. } => format!("minorant({})", base.describe()),
            ProfileSpec::Majorant { base, .. } => format!("majorant({})", base.describe()),
        }
    }
}

/// Constant level on `lo ≤ |x| ≤ hi`, stored as a logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
    pub ln_level: f64,
}

/// Quintic smoothstep joining two consecutive plateaus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub lo: f64,
    pub hi: f64,
    pub ln_from: f64,
    pub ln_to: f64,
}

impl Transition {
    pub fn max_slope(&self) -> f64 {
        1.875 * (self.ln_from.exp() - self.ln_to.exp()).abs() / (self.hi - self.lo)
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Expr(Expr),
    Piecewise(Vec<Plateau>),
}

#[derive(Debug, Clone)]
pub struct Profile {
    spec: ProfileSpec,
    repr: Repr,
    lipschitz: f64,
}

fn smoothstep(s: f64) -> f64 {
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

fn smoothstep_d1(s: f64) -> f64 {
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

fn smoothstep_d2(s: f64) -> f64 {
    60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

enum Locus {
    Plateau(usize),
    Transition(usize, f64),
}

fn locate(p: &[Plateau], ax: f64) -> Locus {
    let i = p.partition_point(|q| q.lo <= ax).saturating_sub(1);
    if ax <= p[i].hi || i + 1 == p.len() {
        Locus::Plateau(i)
    } else {
        let (a, b) = (p[i].hi, p[i + 1].lo);
        Locus::Transition(i, ((ax - a) / (b - a)).clamp(0.0, 1.0))
    }
}

/// Dyadic audit grid on x ≥ 0: 0, a uniform block on [0, 4], and 2^{j/4} up to 2^20.
pub fn audit_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=64).map(|i| i as f64 / 16.0).collect();
    g.extend((-40..=80).map(|j| 2f64.powf(j as f64 / 4.0)));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

impl Profile {
    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        let p = match spec {
            ProfileSpec::Expr { expr } => {
                let e = Expr::parse(expr)?;
                Profile::assemble(spec.clone(), Repr::Expr(e))
            }
            ProfileSpec::Table { rows } => Profile::assemble(spec.clone(), Repr::Piecewise(table_plateaus(rows)?)),
            ProfileSpec::Minorant { base, octaves } => {
                let b = Profile::from_spec(base)?;
                tame::build_minorant(&b, *octaves)
            }
            ProfileSpec::Majorant { base, octaves } => {
                let b = Profile::from_spec(base)?;
                tame::build_majorant(&b, *octaves)?
            }
        };
        p.audit()?;
        Ok(p)
    }

    pub(crate) fn from_plateaus(spec: ProfileSpec, plateaus: Vec<Plateau>) -> Self {
        Profile::assemble(spec, Repr::Piecewise(plateaus))
    }

    fn assemble(spec: ProfileSpec, repr: Repr) -> Self {
        let mut p = Profile {
            spec,
            repr,
            lipschitz: 0.0,
        };
        p.lipschitz = p.estimate_lipschitz();
        p
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn kind(&self) -> ProfileKind {
        match self.repr {
            Repr::Expr(_) => ProfileKind::AnalyticClosure,
            Repr::Piecewise(_) => ProfileKind::PiecewiseTame,
        }
    }

    pub fn plateaus(&self) -> Option<&[Plateau]> {
        match &self.repr {
            Repr::Piecewise(p) => Some(p),
            Repr::Expr(_) => None,
        }
    }

    /// Smoothing records, one per gap between consecutive plateaus.
    pub fn transitions(&self) -> Vec<Transition> {
        self.plateaus()
            .map(|p| {
                p.windows(2)
                    .map(|w| Transition {
                        lo: w[0].hi,
                        hi: w[1].lo,
                        ln_from: w[0].ln_level,
                        ln_to: w[1].ln_level,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// ln m(x); NaN where a closed form cannot be evaluated.
    pub fn ln_value(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Expr(e) => match e.eval_log(x) {
                Ok(v) if v.sign > 0 => v.ln,
                _ => f64::NAN,
            },
            Repr::Piecewise(p) => match locate(p, x.abs()) {
                Locus::Plateau(i) => p[i].ln_level,
                Locus::Transition(i, s) => {
                    let (la, lb) = (p[i].ln_level, p[i + 1].ln_level);
                    let up = smoothstep(s);
                    let down = smoothstep(1.0 - s);
                    logaddexp(down.ln() + la, up.ln() + lb)
                }
            },
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Piecewise(p) => match locate(p, x.abs()) {
                Locus::Plateau(i) => p[i].ln_level.exp(),
                Locus::Transition(i, s) => {
                    let (a, b) = (p[i].ln_level.exp(), p[i + 1].ln_level.exp());
                    a * smoothstep(1.0 - s) + b * smoothstep(s)
                }
            },
            Repr::Expr(_) => self.ln_value(x).exp(),
        }
    }

    fn fd_step(x: f64) -> f64 {
        1e-4 * (1.0 + x.abs())
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Piecewise(p) => match locate(p, x.abs()) {
                Locus::Plateau(_) => 0.0,
                Locus::Transition(i, s) => {
                    let w = p[i + 1].lo - p[i].hi;
                    let d = (p[i + 1].ln_level.exp() - p[i].ln_level.exp()) * smoothstep_d1(s) / w;
                    d * x.signum()
                }
            },
            Repr::Expr(_) => {
                let h = Self::fd_step(x);
                (self.value(x + h) - self.value(x - h)) / (2.0 * h)
            }
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Piecewise(p) => match locate(p, x.abs()) {
                Locus::Plateau(_) => 0.0,
                Locus::Transition(i, s) => {
                    let w = p[i + 1].lo - p[i].hi;
                    (p[i + 1].ln_level.exp() - p[i].ln_level.exp()) * smoothstep_d2(s) / (w * w)
                }
            },
            Repr::Expr(_) => {
                let h = Self::fd_step(x);
                (self.value(x + h) - 2.0 * self.value(x) + self.value(x - h)) / (h * h)
            }
        }
    }

    /// sup |m′|: exact for piecewise profiles, a grid estimate otherwise.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn estimate_lipschitz(&self) -> f64 {
        match &self.repr {
            Repr::Piecewise(_) => self.transitions().iter().map(Transition::max_slope).fold(0.0, f64::max),
            Repr::Expr(_) => {
                let mut g: Vec<f64> = (1..=4000).map(|i| i as f64 * 1e-3).collect();
                g.extend((0..=400).map(|j| 2f64.powf(2.0 + j as f64 * 0.05)));
                g.iter().map(|&x| self.deriv1(x).abs()).filter(|v| v.is_finite()).fold(0.0, f64::max)
            }
        }
    }

    /// Positivity, evenness and monotonicity on the audit grid.
    pub fn audit(&self) -> Result<()> {
        let grid = audit_grid();
        let mut prev = f64::INFINITY;
        for &x in &grid {
            let l = self.ln_value(x);
            if !l.is_finite() {
                return Err(Error::ProfileRejected {
                    x,
                    reason: "value is not positive and finite".into(),
                });
            }
            let lm = self.ln_value(-x);
            // |m(x) − m(−x)| ≤ 1e-12 m(x)
            if !lm.is_finite() || (l - lm).abs() > 1e-12 {
                return Err(Error::ProfileRejected {
                    x,
                    reason: "not even".into(),
                });
            }
            if l > prev + 1e-12 * prev.abs().max(1.0) {
                return Err(Error::ProfileRejected {
                    x,
                    reason: "increasing on x ≥ 0".into(),
                });
            }
            prev = l;
        }
        Ok(())
    }
}

fn table_plateaus(rows: &[PlateauRow]) -> Result<Vec<Plateau>> {
    if rows.is_empty() {
        return Err(Error::ProfileRejected {
            x: 0.0,
            reason: "empty plateau table".into(),
        });
    }
    if rows[0].x_lo != 0.0 {
        return Err(Error::ProfileRejected {
            x: rows[0].x_lo,
            reason: "first plateau must start at x = 0".into(),
        });
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if !(r.x_lo <= r.x_hi) || !(r.value > 0.0) || !r.value.is_finite() {
            return Err(Error::ProfileRejected {
                x: r.x_lo,
                reason: format!("malformed row {i}"),
            });
        }
        if let Some(prev) = rows.get(i.wrapping_sub(1)).filter(|_| i > 0) {
            if r.x_lo <= prev.x_hi {
                return Err(Error::ProfileRejected {
                    x: r.x_lo,
                    reason: "plateaus overlap or are unsorted".into(),
                });
            }
        }
        out.push(Plateau {
            lo: r.x_lo,
            hi: r.x_hi,
            ln_level: r.value.ln(),
        });
    }
    Ok(out)
}

/// Parse a closed-form descriptor or a plateau table and audit the result.
pub fn make_profile(spec: &ProfileSpec) -> Result<Profile> {
    Profile::from_spec(spec)
}

pub fn parse_profile(expr: &str) -> Result<Profile> {
    Profile::from_spec(&ProfileSpec::expr(expr))
}

/// Read plateau rows `x_lo,x_hi,value` (optional header, `#` comments).
pub fn read_plateau_table(path: &Path) -> Result<Vec<PlateauRow>> {
    let text = std::fs::read_to_string(path)?;
    parse_plateau_table(&text)
}

pub fn parse_plateau_table(text: &str) -> Result<Vec<PlateauRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse {
                pos: line,
                msg: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(PlateauRow {
                x_lo: v[0],
                x_hi: v[1],
                value: v[2],
            }),
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    pos: line,
                    msg: "non-numeric field".into(),
                })
            }
        }
    }
    Ok(rows)
}

pub fn write_plateau_table(path: &Path, profile: &Profile) -> Result<()> {
    let p = profile
        .plateaus()
        .ok_or_else(|| Error::Domain("profile has no plateau table".into()))?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x_lo", "x_hi", "value"])?;
    for q in p {
        w.write_record([q.lo.to_string(), q.hi.to_string(), q.ln_level.exp().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        assert!(parse_profile("exp(−sqrt(abs(x)))").is_ok());
        assert!(parse_profile("exp(-abs(x))").is_ok());
        match parse_profile("x²+1") {
            Err(Error::ProfileRejected { reason, .. }) => assert!(reason.contains("increasing")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejections_name_the_failure() {
        assert!(matches!(parse_profile("x"), Err(Error::ProfileRejected { .. })));
        assert!(matches!(parse_profile("exp(-x)"), Err(Error::ProfileRejected { .. })));
        assert!(matches!(parse_profile("-1"), Err(Error::ProfileRejected { .. })));
        assert!(matches!(parse_profile("exp("), Err(Error::Parse { .. })));
    }

    #[test]
    fn central_difference_derivatives() {
        let p = parse_profile("exp(-x^2/8)").unwrap();
        let x = 1.3;
        let exact = -x / 4.0 * (-x * x / 8.0f64).exp();
        assert!((p.deriv1(x) - exact).abs() < 1e-8);
        let exact2 = (x * x / 16.0 - 0.25) * (-x * x / 8.0f64).exp();
        assert!((p.deriv2(x) - exact2).abs() < 1e-6);
    }

    #[test]
    fn plateau_table_roundtrip() {
        let text = "x_lo,x_hi,value\n0,1,0.5\n2,3,0.25\n# tail\n5,8,0.1\n";
        let rows = parse_plateau_table(text).unwrap();
        assert_eq!(rows.len(), 3);
        let p = make_profile(&ProfileSpec::Table { rows }).unwrap();
        assert_eq!(p.kind(), ProfileKind::PiecewiseTame);
        assert!((p.value(0.5) - 0.5).abs() < 1e-15);
        assert!((p.value(-2.5) - 0.25).abs() < 1e-15);
        assert!((p.value(100.0) - 0.1).abs() < 1e-15);
        let mid = p.value(1.5);
        assert!(mid < 0.5 && mid > 0.25);
        assert!((p.value(1.5) - 0.375).abs() < 1e-12);
        let dir = std::env::temp_dir().join("nevlab_plateau_rt.csv");
        write_plateau_table(&dir, &p).unwrap();
        let back = read_plateau_table(&dir).unwrap();
        assert_eq!(back.len(), 3);
        assert!((back[1].value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bad_tables_rejected() {
        let inc = vec![
            PlateauRow { x_lo: 0.0, x_hi: 1.0, value: 0.1 },
            PlateauRow { x_lo: 2.0, x_hi: 3.0, value: 0.5 },
        ];
        assert!(make_profile(&ProfileSpec::Table { rows: inc }).is_err());
        let overlap = vec![
            PlateauRow { x_lo: 0.0, x_hi: 2.0, value: 0.5 },
            PlateauRow { x_lo: 1.0, x_hi: 3.0, value: 0.1 },
        ];
        assert!(make_profile(&ProfileSpec::Table { rows: overlap }).is_err());
        assert!(parse_plateau_table("0,1\n").is_err());
    }

    #[test]
    fn recipe_serializes() {
        let s = ProfileSpec::Minorant {
            base: Box::new(ProfileSpec::expr("exp(-sqrt(abs(x)))")),
            octaves: 40,
        };
        let j = serde_json::to_string(&s).unwrap();
        let back: ProfileSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.describe(), "minorant(exp(-sqrt(abs(x))))");
    }
}
