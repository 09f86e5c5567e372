//! Python module `monogamy_py`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use monogamy::bell::{self, Measurement, ProbabilityTable, Scenario};
use monogamy::extendibility::{self as ext, Family, Variant};
use monogamy::linalg::ComplexMatrix;
use monogamy::sdp::SdpStatus;
use monogamy::{entanglement, io, states, C64};

type Rows = Vec<Vec<C64>>;

fn err(e: monogamy::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Rows) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    ComplexMatrix::new(n, cols, rows.iter().flatten().copied().collect()).map_err(err)
}

fn to_rows(m: &ComplexMatrix) -> Rows {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

fn variant(name: &str) -> PyResult<Variant> {
    name.parse().map_err(err)
}

fn status(s: SdpStatus) -> &'static str {
    match s {
        SdpStatus::Feasible => "Feasible",
        SdpStatus::Infeasible => "Infeasible",
        SdpStatus::Borderline => "Borderline",
    }
}

#[pyclass(name = "DensityMatrix", module = "monogamy_py", from_py_object)]
#[derive(Clone)]
struct PyDensityMatrix {
    inner: states::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    #[new]
    fn new(dims: Vec<usize>, matrix: Rows) -> PyResult<Self> {
        let inner = states::DensityMatrix::from_matrix(dims, to_matrix(&matrix)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    fn matrix(&self) -> Rows {
        to_rows(self.inner.matrix())
    }

    fn trace(&self) -> f64 {
        self.inner.op().trace()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn partial_trace(&self, traced: Vec<usize>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.partial_trace(&traced).map_err(err)? })
    }

    fn tensor(&self, other: &Self) -> Self {
        Self { inner: self.inner.tensor(&other.inner) }
    }

    #[pyo3(signature = (index = 1))]
    fn negativity(&self, index: usize) -> PyResult<f64> {
        entanglement::negativity(&self.inner, index).map_err(err)
    }

    #[pyo3(signature = (index = 1))]
    fn ppt_min_eigenvalue(&self, index: usize) -> PyResult<f64> {
        entanglement::ppt_min_eigenvalue(&self.inner, index).map_err(err)
    }

    #[pyo3(signature = (label = None))]
    fn to_json(&self, label: Option<&str>) -> PyResult<String> {
        io::state_to_json(&self.inner, label).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: io::parse_state(text).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dims={:?})", self.inner.dims())
    }
}

#[pyclass(name = "ExtendibilityResult", module = "monogamy_py", skip_from_py_object)]
struct PyExtendibilityResult {
    #[pyo3(get)]
    k: usize,
    #[pyo3(get)]
    variant: String,
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    margin: f64,
    #[pyo3(get)]
    extension: Option<PyDensityMatrix>,
    #[pyo3(get)]
    certificate: Option<Vec<f64>>,
    #[pyo3(get)]
    face_dimension: Option<usize>,
}

#[pymethods]
impl PyExtendibilityResult {
    fn __repr__(&self) -> String {
        format!("ExtendibilityResult(k={}, variant={}, status={}, margin={:.3e})", self.k, self.variant, self.status, self.margin)
    }
}

impl From<ext::ExtendibilityResult> for PyExtendibilityResult {
    fn from(r: ext::ExtendibilityResult) -> Self {
        Self {
            k: r.k,
            variant: r.variant.to_string(),
            status: status(r.status).to_string(),
            margin: r.margin,
            extension: r.extension.map(|inner| PyDensityMatrix { inner }),
            certificate: r.certificate,
            face_dimension: r.face_dimension,
        }
    }
}

fn wrap(r: monogamy::Result<states::DensityMatrix>) -> PyResult<PyDensityMatrix> {
    r.map(|inner| PyDensityMatrix { inner }).map_err(err)
}

#[pyfunction]
fn werner(p: f64) -> PyResult<PyDensityMatrix> {
    wrap(states::werner(p))
}

#[pyfunction]
#[pyo3(signature = (d = 2))]
fn max_entangled(d: usize) -> PyResult<PyDensityMatrix> {
    wrap(states::max_entangled(d))
}

#[pyfunction]
fn bush_rumsfeld(eps: f64) -> PyResult<PyDensityMatrix> {
    wrap(states::bush_rumsfeld(eps))
}

#[pyfunction]
fn bdsw_tripartite() -> PyDensityMatrix {
    PyDensityMatrix { inner: states::bdsw_tripartite() }
}

#[pyfunction]
fn random_density(dims: Vec<usize>, seed: u64) -> PyResult<PyDensityMatrix> {
    wrap(states::random_density(&dims, seed))
}

#[pyfunction]
fn load_state(path: &str) -> PyResult<PyDensityMatrix> {
    wrap(io::load_state(path))
}

#[pyfunction]
#[pyo3(signature = (path, rho, label = None))]
fn save_state(path: &str, rho: &PyDensityMatrix, label: Option<&str>) -> PyResult<()> {
    io::save_state(path, &rho.inner, label).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (rho, k, variant = "perm"))]
fn check_extendible(py: Python<'_>, rho: &PyDensityMatrix, k: usize, variant: &str) -> PyResult<PyExtendibilityResult> {
    let v = self::variant(variant)?;
    let inner = rho.inner.clone();
    py.detach(move || ext::check_extendible(&inner, k, v)).map(Into::into).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (extension, rho, k, variant = "perm"))]
fn verify_extension(extension: &PyDensityMatrix, rho: &PyDensityMatrix, k: usize, variant: &str) -> PyResult<bool> {
    ext::verify_extension(&extension.inner, &rho.inner, k, self::variant(variant)?).map_err(err)
}

#[pyfunction]
fn hierarchy(py: Python<'_>, rho: &PyDensityMatrix, k_max: usize) -> PyResult<Vec<PyExtendibilityResult>> {
    let inner = rho.inner.clone();
    let h = py.detach(move || ext::hierarchy(&inner, k_max)).map_err(err)?;
    Ok(h.results.into_iter().map(Into::into).collect())
}

#[pyfunction]
#[pyo3(signature = (family, k, lo = 0.0, hi = 1.0))]
fn extendibility_threshold(py: Python<'_>, family: &str, k: usize, lo: f64, hi: f64) -> PyResult<f64> {
    let family: Family = family.parse().map_err(err)?;
    py.detach(move || ext::extendibility_threshold(family, k, lo, hi)).map(|t| t.threshold).map_err(err)
}

#[pyfunction]
fn chsh_max_2qubit(rho: &PyDensityMatrix) -> PyResult<f64> {
    bell::chsh_max_2qubit(&rho.inner).map_err(err)
}

fn measurements(raw: Vec<Vec<Rows>>) -> PyResult<Vec<Measurement>> {
    raw.iter().map(|povm| Measurement::new(povm.iter().map(to_matrix).collect::<PyResult<_>>()?).map_err(err)).collect()
}

fn table_rows(t: &ProbabilityTable) -> Vec<Vec<Vec<Vec<f64>>>> {
    t.entries().to_vec()
}

/// `p[x][y][a][b]` for the given POVM lists.
#[pyfunction]
fn joint_table(rho: &PyDensityMatrix, alice: Vec<Vec<Rows>>, bob: Vec<Vec<Rows>>) -> PyResult<Vec<Vec<Vec<Vec<f64>>>>> {
    let s = Scenario::new(measurements(alice)?, measurements(bob)?).map_err(err)?;
    Ok(table_rows(&bell::joint_table(&rho.inner, &s).map_err(err)?))
}

/// Table of the hidden-variable model built from an extension.
#[pyfunction]
fn lhv_table(extension: &PyDensityMatrix, alice: Vec<Vec<Rows>>, bob: Vec<Vec<Rows>>) -> PyResult<Vec<Vec<Vec<Vec<f64>>>>> {
    let s = Scenario::new(measurements(alice)?, measurements(bob)?).map_err(err)?;
    let model = bell::lhv_from_extension(&extension.inner, &s).map_err(err)?;
    Ok(table_rows(&bell::lhv_table(&model, &s).map_err(err)?))
}

#[pymodule]
fn monogamy_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyExtendibilityResult>()?;
    m.add_function(wrap_pyfunction!(werner, m)?)?;
    m.add_function(wrap_pyfunction!(max_entangled, m)?)?;
    m.add_function(wrap_pyfunction!(bush_rumsfeld, m)?)?;
    m.add_function(wrap_pyfunction!(bdsw_tripartite, m)?)?;
    m.add_function(wrap_pyfunction!(random_density, m)?)?;
    m.add_function(wrap_pyfunction!(load_state, m)?)?;
    m.add_function(wrap_pyfunction!(save_state, m)?)?;
    m.add_function(wrap_pyfunction!(check_extendible, m)?)?;
    m.add_function(wrap_pyfunction!(verify_extension, m)?)?;
    m.add_function(wrap_pyfunction!(hierarchy, m)?)?;
    m.add_function(wrap_pyfunction!(extendibility_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_max_2qubit, m)?)?;
    m.add_function(wrap_pyfunction!(joint_table, m)?)?;
    m.add_function(wrap_pyfunction!(lhv_table, m)?)?;
    Ok(())
}
