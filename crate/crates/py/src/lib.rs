//! Python bindings: `import nevlab`.

use nevlab::charfun::{ahlfors_shimizu, AsPolicy, Meromorphic};
use nevlab::confmap::{build_map, build_map_unchecked, ConformalMap, GraphDomain, MapConfig, Side};
use nevlab::counterexample::{
    boundary_log_integral, build_counterexample, dichotomy as run_dichotomy, profile_verdict, witness_map_config, witness_so,
    DichotomyConfig, OmittingFunction, Route, SoSettings,
};
use nevlab::harmonic::{claim5_comparability, divergence_series, half_plane_measure, wos_measure, TargetArc, WosBoundary, WosConfig};
use nevlab::lattice::{coprime_stats as core_coprime_stats, lemma_c_integral_tol, lemma_c_lattice_sum, LEMMA_C_TOL};
use nevlab::modular::{lambda_eval, six_values as core_six_values, spherical_derivative_lambda, ModularConfig};
use nevlab::profiles::{is_tame, log_integral, make_profile, tame_majorant, tame_minorant, PlateauRow, ProfileSpec};
use nevlab::{Error, C64};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Parse { .. } | Error::ProfileRejected { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A serializable report as plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn side(s: &str) -> PyResult<Side> {
    match s {
        "above" => Ok(Side::Above),
        "below" => Ok(Side::Below),
        _ => Err(PyValueError::new_err(format!("side must be 'above' or 'below', got {s:?}"))),
    }
}

fn route(s: &str) -> PyResult<Route> {
    match s {
        "minorant" => Ok(Route::Minorant),
        "majorant" => Ok(Route::Majorant),
        _ => Err(PyValueError::new_err(format!("route must be 'minorant' or 'majorant', got {s:?}"))),
    }
}

/// λ(τ) for Im τ > 0.
#[pyfunction]
fn lambda_value(tau: C64) -> PyResult<C64> {
    Ok(lambda_eval(tau, &ModularConfig::default()).map_err(err)?.value)
}

/// dλ/dτ.
#[pyfunction]
fn lambda_derivative(tau: C64) -> PyResult<C64> {
    Ok(lambda_eval(tau, &ModularConfig::default()).map_err(err)?.derivative)
}

/// |λ′|/(1 + |λ|²).
#[pyfunction]
fn lambda_spherical_derivative(tau: C64) -> PyResult<f64> {
    spherical_derivative_lambda(tau, &ModularConfig::default()).map_err(err)
}

/// The orbit of a λ-value under the six anharmonic substitutions.
#[pyfunction]
fn six_values(a: C64) -> PyResult<Vec<C64>> {
    Ok(core_six_values(a).map_err(err)?.to_vec())
}

/// An even positive height profile m(x).
#[pyclass(name = "Profile", frozen)]
struct PyProfile {
    inner: nevlab::profiles::Profile,
}

#[pymethods]
impl PyProfile {
    #[new]
    fn new(expr: &str) -> PyResult<Self> {
        Ok(Self { inner: make_profile(&ProfileSpec::expr(expr)).map_err(err)? })
    }

    /// Plateau profile from (x_lo, x_hi, value) rows.
    #[staticmethod]
    fn from_table(rows: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let rows = rows.into_iter().map(|(x_lo, x_hi, value)| PlateauRow { x_lo, x_hi, value }).collect();
        Ok(Self { inner: make_profile(&ProfileSpec::Table { rows }).map_err(err)? })
    }

    fn value(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    fn ln_value(&self, x: f64) -> f64 {
        self.inner.ln_value(x)
    }

    fn deriv1(&self, x: f64) -> f64 {
        self.inner.deriv1(x)
    }

    fn deriv2(&self, x: f64) -> f64 {
        self.inner.deriv2(x)
    }

    fn describe(&self) -> String {
        self.inner.spec().describe()
    }

    fn tame_minorant(&self) -> PyResult<Self> {
        Ok(Self { inner: tame_minorant(&self.inner).map_err(err)? })
    }

    fn tame_majorant(&self) -> PyResult<Self> {
        Ok(Self { inner: tame_majorant(&self.inner).map_err(err)? })
    }

    fn is_tame<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &is_tame(&self.inner))
    }

    /// Partial log-integrals and the convergent/divergent verdict.
    #[pyo3(signature = (t_max = 1048576.0, k_max = 40))]
    fn log_integral<'py>(&self, py: Python<'py>, t_max: f64, k_max: u32) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &log_integral(&self.inner, t_max, k_max))
    }

    /// Σ_{k≤K} 2^{−k} log(1/m(2^k)) for K = 0..=k_max.
    fn divergence_series<'py>(&self, py: Python<'py>, k_max: u32) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &divergence_series(&self.inner, k_max))
    }

    fn __repr__(&self) -> String {
        format!("Profile({:?})", self.describe())
    }
}

/// Normalized conformal map w of H onto {y > ±m(x)}.
#[pyclass(name = "ConformalMap", frozen)]
struct PyConformalMap {
    inner: ConformalMap,
}

#[pymethods]
impl PyConformalMap {
    #[new]
    #[pyo3(signature = (profile, side = "below", nodes = 2049, x_max = 4096.0))]
    fn new(py: Python<'_>, profile: &PyProfile, side: &str, nodes: usize, x_max: f64) -> PyResult<Self> {
        let d = GraphDomain::new(self::side(side)?, profile.inner.clone()).map_err(err)?;
        let cfg = MapConfig { nodes, x_max, ..MapConfig::default() };
        let inner = py.detach(|| if nodes < 256 { build_map_unchecked(&d, &cfg) } else { build_map(&d, &cfg) }).map_err(err)?;
        Ok(Self { inner })
    }

    fn forward(&self, z: C64) -> C64 {
        self.inner.forward(z)
    }

    fn forward_deriv(&self, z: C64) -> C64 {
        self.inner.forward_deriv(z)
    }

    fn inverse(&self, w: C64) -> PyResult<C64> {
        self.inner.inverse(w).map_err(err)
    }

    /// ξ with Re w(ξ) = x on the real axis.
    fn boundary_preimage(&self, x: f64) -> f64 {
        self.inner.boundary_preimage(x)
    }

    /// Height of the preimage of the real axis above ξ.
    fn gamma_height(&self, xi: f64) -> PyResult<f64> {
        self.inner.gamma_height(xi).map_err(err)
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.diagnostics)
    }
}

/// F = λ∘W, analytic on {y > −n(x)} and omitting 0 and 1.
#[pyclass(name = "Witness", frozen)]
struct PyWitness {
    inner: OmittingFunction,
}

#[pymethods]
impl PyWitness {
    /// `profile` must be tame; use `Profile.tame_minorant()` or `tame_majorant()`.
    #[new]
    #[pyo3(signature = (profile, nodes = None))]
    fn new(py: Python<'_>, profile: &PyProfile, nodes: Option<usize>) -> PyResult<Self> {
        let mut cfg = witness_map_config();
        if let Some(n) = nodes {
            cfg.nodes = n;
        }
        let inner = py.detach(|| build_counterexample(&profile.inner, &cfg)).map_err(err)?;
        Ok(Self { inner })
    }

    fn eval(&self, z: C64) -> PyResult<C64> {
        self.inner.eval(z).map_err(err)
    }

    fn ln_abs(&self, z: C64) -> PyResult<f64> {
        self.inner.ln_abs(z).map_err(err)
    }

    fn spherical_derivative(&self, z: C64) -> PyResult<f64> {
        self.inner.spherical_derivative(z).map_err(err)
    }

    fn omission_audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.audit)
    }

    /// S_o(r; F) on `r_grid` with the bounded-type verdict.
    fn characteristic<'py>(&self, py: Python<'py>, r_grid: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let rep = py.detach(|| witness_so(&self.inner, &r_grid, &SoSettings::default())).map_err(err)?;
        to_py(py, &rep)
    }

    /// ∫ log⁺|F(t)|/t² dt by octaves up to 2^octaves.
    #[pyo3(signature = (octaves = 12))]
    fn boundary_log_integral<'py>(&self, py: Python<'py>, octaves: u32) -> PyResult<Bound<'py, PyAny>> {
        let rep = py.detach(|| boundary_log_integral(&self.inner, octaves)).map_err(err)?;
        to_py(py, &rep)
    }
}

/// Full witness experiment; `route` defaults to the one picked by the log-integral verdict.
#[pyfunction]
#[pyo3(signature = (profile, route = None, r_grid = None, octaves = 12))]
fn dichotomy<'py>(
    py: Python<'py>,
    profile: &PyProfile,
    route: Option<&str>,
    r_grid: Option<Vec<f64>>,
    octaves: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let route = match route {
        Some(r) => self::route(r)?,
        None => Route::for_verdict(profile_verdict(&profile.inner))
            .ok_or_else(|| PyValueError::new_err("log-integral verdict is inconclusive; pass route explicitly"))?,
    };
    let mut cfg = DichotomyConfig { octaves, ..DichotomyConfig::default() };
    if let Some(g) = r_grid {
        cfg.r_grid = g;
    }
    let rep = py.detach(|| run_dichotomy(&profile.inner, route, &cfg)).map_err(err)?;
    to_py(py, &rep)
}

/// Ahlfors–Shimizu S_o(r) of e^{−iz}.
#[pyfunction]
fn ahlfors_shimizu_exp(r: f64) -> PyResult<f64> {
    let f = nevlab::charfun::ExpAffine::exp_minus_iz();
    let f: &dyn Meromorphic = &f;
    Ok(ahlfors_shimizu(f, r, &AsPolicy::default()).map_err(err)?.value)
}

/// ∫₀² log⁺|λ(x+iy)| dx with its ratio to log(1/y).
#[pyfunction]
#[pyo3(signature = (y, tol = LEMMA_C_TOL))]
fn lemma_c_integral<'py>(py: Python<'py>, y: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &lemma_c_integral_tol(y, tol).map_err(err)?)
}

/// Σ Im τ_k over the orbit of i in the strip, with its ratio to log(1/y).
#[pyfunction]
fn lemma_c_sum<'py>(py: Python<'py>, y: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &lemma_c_lattice_sum(y).map_err(err)?)
}

#[pyfunction]
fn coprime_stats<'py>(py: Python<'py>, x: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &core_coprime_stats(x).map_err(err)?)
}

/// Harmonic measure of [lo, hi] in H seen from z.
#[pyfunction]
fn half_plane_harmonic_measure(lo: f64, hi: f64, z: C64) -> f64 {
    half_plane_measure(TargetArc::new(lo, hi), z)
}

/// Walk-on-spheres estimate of ω(J + i m, z) in {y > m(x)}.
#[pyfunction]
#[pyo3(signature = (profile, lo, hi, z, samples = 100000, seed = 42))]
fn wos_harmonic_measure<'py>(
    py: Python<'py>,
    profile: &PyProfile,
    lo: f64,
    hi: f64,
    z: C64,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let b = WosBoundary::above(&profile.inner);
    let est = py.detach(|| wos_measure(&b, TargetArc::new(lo, hi), z, &WosConfig::new(samples, seed))).map_err(err)?;
    to_py(py, &est)
}

/// Comparability ratios ρ_k for a tame plateau profile.
#[pyfunction]
#[pyo3(signature = (profile, ks, z = C64::new(0.0, 4.0), samples = 100000, seed = 42))]
fn claim5<'py>(py: Python<'py>, profile: &PyProfile, ks: Vec<u32>, z: C64, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let rep = py.detach(|| claim5_comparability(&profile.inner, &ks, z, &WosConfig::new(samples, seed), None)).map_err(err)?;
    to_py(py, &rep)
}

#[pymodule]
#[pyo3(name = "nevlab")]
fn nevlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", nevlab::VERSION)?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyConformalMap>()?;
    m.add_class::<PyWitness>()?;
    m.add_function(wrap_pyfunction!(lambda_value, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_spherical_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(six_values, m)?)?;
    m.add_function(wrap_pyfunction!(dichotomy, m)?)?;
    m.add_function(wrap_pyfunction!(ahlfors_shimizu_exp, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_c_integral, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_c_sum, m)?)?;
    m.add_function(wrap_pyfunction!(coprime_stats, m)?)?;
    m.add_function(wrap_pyfunction!(half_plane_harmonic_measure, m)?)?;
    m.add_function(wrap_pyfunction!(wos_harmonic_measure, m)?)?;
    m.add_function(wrap_pyfunction!(claim5, m)?)?;
    Ok(())
}
