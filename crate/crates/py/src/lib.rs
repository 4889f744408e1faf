//! Python module `gausspaths`: paths, signatures, limit shapes, exponential
//! sums, the random model and moments. Structured reports come back as
//! plain dicts and lists.

use gauss_paths::{arith, atlas, expsums, moments, paths, random_model, Complex64, Error};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        Error::Budget(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(xs) => {
            let items = xs.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn report<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// A choice of ε_p ∈ {−1, 0, 1} for the primes p ≤ Z.
#[pyclass(name = "EpsilonSignature", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PySignature(arith::EpsilonSignature);

#[pymethods]
impl PySignature {
    #[new]
    fn new(z: u64, values: Vec<i8>) -> PyResult<Self> {
        arith::EpsilonSignature::new(z, &values).map(Self).map_err(to_py)
    }

    /// The signature (p/c) of a modulus.
    #[staticmethod]
    fn of_modulus(c: u64, z: u64) -> PyResult<Self> {
        paths::eps_signature(c, z).map(Self).map_err(to_py)
    }

    /// All 2·3^{π(Z)−1} signatures.
    #[staticmethod]
    fn all(z: u64) -> PyResult<Vec<Self>> {
        Ok(atlas::enumerate_signatures(z).map_err(to_py)?.into_iter().map(Self).collect())
    }

    #[getter]
    fn z(&self) -> u64 {
        self.0.z()
    }

    #[getter]
    fn primes(&self) -> Vec<u64> {
        self.0.primes().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<i8> {
        self.0.values().to_vec()
    }

    fn tag(&self) -> String {
        self.0.tag()
    }

    fn __repr__(&self) -> String {
        format!("EpsilonSignature({})", self.0)
    }
}

/// Values of a path on the grid t = i/R.
#[pyclass(name = "PathSample", frozen)]
struct PyPathSample(paths::PathSample);

#[pymethods]
impl PyPathSample {
    #[getter]
    fn resolution(&self) -> usize {
        self.0.resolution
    }

    #[getter]
    fn label(&self) -> &str {
        &self.0.label
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.0.values.clone()
    }

    #[getter]
    fn ts(&self) -> Vec<f64> {
        (0..self.0.values.len()).map(|i| self.0.t(i)).collect()
    }

    fn sup_distance(&self, other: &PyPathSample) -> PyResult<f64> {
        paths::sup_distance(&self.0, &other.0).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.values.len()
    }

    fn __repr__(&self) -> String {
        format!("PathSample(label={:?}, resolution={})", self.0.label, self.0.resolution)
    }
}

/// A truncated limit shape G♯ with its certified tail.
#[pyclass(name = "ShapeSpec", frozen)]
struct PyShapeSpec(atlas::ShapeSpec);

#[pymethods]
impl PyShapeSpec {
    #[new]
    #[pyo3(signature = (signature, tolerance = 1e-6))]
    fn new(signature: &PySignature, tolerance: f64) -> PyResult<Self> {
        atlas::ShapeSpec::new(&signature.0, tolerance).map(Self).map_err(to_py)
    }

    #[getter]
    fn truncation(&self) -> u64 {
        self.0.b
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.0.tail_bound
    }

    fn eval(&self, t: f64) -> PyResult<Complex64> {
        atlas::gsharp_eval(&self.0, t).map_err(to_py)
    }

    fn grid(&self, r: usize) -> PyResult<PyPathSample> {
        atlas::gsharp_grid(&self.0, r).map(PyPathSample).map_err(to_py)
    }
}

#[pyfunction]
fn jacobi(a: i64, n: u64) -> PyResult<i8> {
    arith::jacobi(a, n).map_err(to_py)
}

/// Squarefree c ≡ 1 mod 4 in [Q, 2Q], optionally restricted by a signature.
#[pyfunction]
#[pyo3(signature = (q, signature = None))]
fn family(q: u64, signature: Option<&PySignature>) -> PyResult<Vec<u64>> {
    Ok(arith::enumerate_family(q, signature.map(|s| &s.0)).map_err(to_py)?.members)
}

#[pyfunction]
fn path_eval(c: u64, t: f64) -> PyResult<Complex64> {
    paths::path_eval(c, t).map_err(to_py)
}

#[pyfunction]
fn path_grid(c: u64, r: usize) -> PyResult<PyPathSample> {
    paths::path_grid(c, r).map(PyPathSample).map_err(to_py)
}

#[pyfunction]
fn tilde_path_eval(c: u64, t: f64) -> PyResult<Complex64> {
    paths::tilde_path_eval(c, t).map_err(to_py)
}

#[pyfunction]
fn s_star(a: i64, m: u64, signature: &PySignature) -> PyResult<Complex64> {
    expsums::s_star_periodic(a, m, &signature.0).map_err(to_py)
}

#[pyfunction]
fn cusp_constants<'py>(py: Python<'py>, a: i64, q: u64, signature: &PySignature) -> PyResult<Bound<'py, PyAny>> {
    report(py, &expsums::cusp_constants(a, q, &signature.0).map_err(to_py)?)
}

#[pyfunction]
fn find_cusp_points(signature: &PySignature, qmax: u64) -> Vec<(u64, bool)> {
    expsums::find_cusp_points(&signature.0, qmax)
}

#[pyfunction]
#[pyo3(signature = (signature, a, q, offsets, tolerance = 1e-7))]
fn local_slope_probe(
    signature: &PySignature,
    a: i64,
    q: u64,
    offsets: Vec<f64>,
    tolerance: f64,
) -> PyResult<Vec<(f64, Complex64, f64)>> {
    let rows = expsums::local_slope_probe(&signature.0, a, q, &offsets, tolerance).map_err(to_py)?;
    Ok(rows.into_iter().map(|r| (r.offset, r.quotient, r.error_bound)).collect())
}

/// One draw of G*_ε (or G* without a signature) on the grid t = i/R.
#[pyfunction]
#[pyo3(signature = (n, r, seed, signature = None))]
fn sample_path(n: u64, r: usize, seed: u64, signature: Option<&PySignature>) -> PyResult<PyPathSample> {
    let x = random_model::sample_multiplicative(n + 1, signature.map(|s| &s.0), seed).map_err(to_py)?;
    random_model::sample_limit_path(&x, n, r).map(PyPathSample).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (signature, delta, trials, n = 10_000, r = 1024, seed = 0))]
fn estimate_deviation_prob<'py>(
    py: Python<'py>,
    signature: &PySignature,
    delta: f64,
    trials: usize,
    n: u64,
    r: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = py
        .detach(|| random_model::estimate_deviation_prob(&signature.0, delta, trials, n, r, seed))
        .map_err(to_py)?;
    report(py, &rep)
}

fn order(t: Vec<f64>, m: Vec<u32>, n: Vec<u32>) -> PyResult<moments::MomentOrder> {
    moments::MomentOrder::new(t, m, n).map_err(to_py)
}

/// The limit moment E ∏ conj(G*(t_i))^{m_i} G*(t_i)^{n_i}.
#[pyfunction]
#[pyo3(signature = (t, m, n, hmax = None, signature = None))]
fn limit_moment<'py>(
    py: Python<'py>,
    t: Vec<f64>,
    m: Vec<u32>,
    n: Vec<u32>,
    hmax: Option<u64>,
    signature: Option<&PySignature>,
) -> PyResult<Bound<'py, PyAny>> {
    let o = order(t, m, n)?;
    let hmax = hmax.unwrap_or_else(|| moments::default_hmax(o.degree()));
    let sig = signature.map(|s| s.0.clone());
    let lim = py.detach(|| moments::limit_moment(&o, hmax, sig.as_ref())).map_err(to_py)?;
    report(py, &lim)
}

#[pyfunction]
#[pyo3(signature = (t, m, n, q, signature = None))]
fn empirical_moment(t: Vec<f64>, m: Vec<u32>, n: Vec<u32>, q: u64, signature: Option<&PySignature>) -> PyResult<Complex64> {
    let o = order(t, m, n)?;
    let fam = arith::enumerate_family(q, signature.map(|s| &s.0)).map_err(to_py)?;
    Ok(moments::empirical_moment(&o, &fam).map_err(to_py)?.value)
}

#[pymodule]
fn gausspaths(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignature>()?;
    m.add_class::<PyPathSample>()?;
    m.add_class::<PyShapeSpec>()?;
    m.add_function(wrap_pyfunction!(jacobi, m)?)?;
    m.add_function(wrap_pyfunction!(family, m)?)?;
    m.add_function(wrap_pyfunction!(path_eval, m)?)?;
    m.add_function(wrap_pyfunction!(path_grid, m)?)?;
    m.add_function(wrap_pyfunction!(tilde_path_eval, m)?)?;
    m.add_function(wrap_pyfunction!(s_star, m)?)?;
    m.add_function(wrap_pyfunction!(cusp_constants, m)?)?;
    m.add_function(wrap_pyfunction!(find_cusp_points, m)?)?;
    m.add_function(wrap_pyfunction!(local_slope_probe, m)?)?;
    m.add_function(wrap_pyfunction!(sample_path, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_deviation_prob, m)?)?;
    m.add_function(wrap_pyfunction!(limit_moment, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_moment, m)?)?;
    Ok(())
}
