use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use infspec::error::Error;
use infspec::{experiments, geometry_probe, hyperbolic, optimizer, representation, surface_group};

create_exception!(infspec_py, BoundaryEscape, PyRuntimeError);
create_exception!(infspec_py, NonConvergence, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::BoundaryEscape(m) => BoundaryEscape::new_err(m),
        Error::NonConvergence(m) => NonConvergence::new_err(m),
        Error::Numeric(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "CurveWord", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyCurveWord(surface_group::CurveWord);

#[pymethods]
impl PyCurveWord {
    #[new]
    #[pyo3(signature = (text, genus=None))]
    fn new(text: &str, genus: Option<u32>) -> PyResult<Self> {
        surface_group::CurveWord::parse(text, genus).map(PyCurveWord).map_err(py_err)
    }

    #[getter]
    fn genus(&self) -> u32 {
        self.0.genus
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("CurveWord({:?}, genus={})", self.0.to_string(), self.0.genus)
    }

    fn inverse(&self) -> Self {
        PyCurveWord(self.0.inverse())
    }

    fn normalized(&self) -> PyResult<Self> {
        surface_group::normalize(&self.0).map(PyCurveWord).map_err(py_err)
    }

    fn self_intersection(&self) -> PyResult<u64> {
        surface_group::self_intersection_oracle(&self.0).map_err(py_err)
    }

    fn intersection(&self, other: &PyCurveWord) -> PyResult<u64> {
        surface_group::pair_intersection_oracle(&self.0, &other.0).map_err(py_err)
    }

    fn is_filling(&self) -> PyResult<bool> {
        surface_group::is_filling(&self.0).map_err(py_err)
    }

    fn is_separating(&self) -> PyResult<bool> {
        surface_group::is_separating(&self.0).map_err(py_err)
    }

    fn dehn_twist(&self, along: &PyCurveWord, power: i64) -> PyResult<Self> {
        surface_group::apply_dehn_twist(&self.0, &along.0, power).map(PyCurveWord).map_err(py_err)
    }
}

#[pyfunction]
fn family_word(genus: u32, m: u64, n: u64) -> PyResult<PyCurveWord> {
    surface_group::family_word(genus, m, n).map(PyCurveWord).map_err(py_err)
}

#[pyfunction]
fn gamma0(genus: u32) -> PyResult<PyCurveWord> {
    surface_group::gamma0(genus).map(PyCurveWord).map_err(py_err)
}

#[pyfunction]
fn eta(genus: u32) -> PyResult<PyCurveWord> {
    surface_group::eta(genus).map(PyCurveWord).map_err(py_err)
}

#[pyfunction]
fn self_intersection_formula(genus: u32, m: u64, n: u64) -> PyResult<u64> {
    surface_group::self_intersection_formula(genus, m, n).map_err(py_err)
}

#[pyclass(name = "FNCoords", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFNCoords(representation::FNCoords);

#[pymethods]
impl PyFNCoords {
    #[new]
    fn new(genus: u32, lengths: Vec<f64>, twists: Vec<f64>) -> PyResult<Self> {
        representation::FNCoords::new(genus, lengths, twists).map(PyFNCoords).map_err(py_err)
    }

    #[staticmethod]
    fn uniform(genus: u32, length: f64) -> PyResult<Self> {
        representation::FNCoords::uniform(genus, length).map(PyFNCoords).map_err(py_err)
    }

    #[getter]
    fn genus(&self) -> u32 {
        self.0.genus
    }

    #[getter]
    fn lengths(&self) -> Vec<f64> {
        self.0.lengths.clone()
    }

    #[getter]
    fn twists(&self) -> Vec<f64> {
        self.0.twists.clone()
    }

    fn eta_length(&self) -> f64 {
        self.0.eta_length()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        format!("FNCoords(genus={}, lengths={:?}, twists={:?})", self.0.genus, self.0.lengths, self.0.twists)
    }
}

#[pyfunction]
fn geodesic_length(coords: &PyFNCoords, word: &PyCurveWord) -> PyResult<f64> {
    let rep = representation::build_representation(&coords.0).map_err(py_err)?;
    representation::geodesic_length(&rep, &word.0).map_err(py_err)
}

/// Returns `(value, witness word)`.
#[pyfunction]
#[pyo3(signature = (coords, depth=geometry_probe::DEFAULT_DEPTH, side=None))]
fn systole(coords: &PyFNCoords, depth: usize, side: Option<u32>) -> PyResult<(f64, String)> {
    let rep = representation::build_representation(&coords.0).map_err(py_err)?;
    let r = match side {
        None => geometry_probe::systole(&rep, depth),
        Some(s) => geometry_probe::Side::from_index(s).and_then(|s| geometry_probe::subsurface_systole(&rep, s, depth)),
    }
    .map_err(py_err)?;
    Ok((r.value, r.witness.to_string()))
}

#[pyfunction]
fn collar_width(x: f64) -> PyResult<f64> {
    hyperbolic::collar_width(x).map_err(py_err)
}

#[pyfunction]
fn winding_length(m: u64, x: f64) -> PyResult<f64> {
    hyperbolic::winding_length(m, x).map_err(py_err)
}

#[pyclass(name = "OptResult", frozen)]
pub struct PyOptResult(optimizer::OptResult);

#[pymethods]
impl PyOptResult {
    #[getter]
    fn m_gamma(&self) -> f64 {
        self.0.m_gamma
    }

    #[getter]
    fn eta_at_opt(&self) -> f64 {
        self.0.eta_at_opt
    }

    #[getter]
    fn x_gamma(&self) -> PyFNCoords {
        PyFNCoords(self.0.x_gamma.clone())
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn spread(&self) -> f64 {
        self.0.spread
    }

    #[getter]
    fn sys1(&self) -> f64 {
        self.0.sys_side1.value
    }

    #[getter]
    fn sys2(&self) -> f64 {
        self.0.sys_side2.value
    }

    fn to_json(&self) -> PyResult<String> {
        experiments::to_json_12(&self.0).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("OptResult(m_gamma={}, converged={})", experiments::sig12(self.0.m_gamma), self.0.converged)
    }
}

#[pyfunction]
#[pyo3(signature = (word, starts=8, seed=0, tol=1e-4, max_evals=20000, escape_threshold=1e-3))]
fn minimize_length(
    py: Python<'_>,
    word: &PyCurveWord,
    starts: usize,
    seed: u64,
    tol: f64,
    max_evals: usize,
    escape_threshold: f64,
) -> PyResult<PyOptResult> {
    let opts = optimizer::OptOptions { starts, seed, value_tol: tol, max_evals, escape_threshold, ..Default::default() };
    let w = word.0.clone();
    py.detach(|| optimizer::minimize_length(&w, &opts)).map(PyOptResult).map_err(py_err)
}

#[pyfunction]
fn inf_invariant(py: Python<'_>, word: &PyCurveWord) -> PyResult<f64> {
    let w = word.0.clone();
    py.detach(|| optimizer::inf_invariant(&w)).map_err(py_err)
}

#[pymodule]
fn infspec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurveWord>()?;
    m.add_class::<PyFNCoords>()?;
    m.add_class::<PyOptResult>()?;
    m.add_function(wrap_pyfunction!(family_word, m)?)?;
    m.add_function(wrap_pyfunction!(gamma0, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(self_intersection_formula, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_length, m)?)?;
    m.add_function(wrap_pyfunction!(systole, m)?)?;
    m.add_function(wrap_pyfunction!(collar_width, m)?)?;
    m.add_function(wrap_pyfunction!(winding_length, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_length, m)?)?;
    m.add_function(wrap_pyfunction!(inf_invariant, m)?)?;
    m.add("BoundaryEscape", m.py().get_type::<BoundaryEscape>())?;
    m.add("NonConvergence", m.py().get_type::<NonConvergence>())?;
    Ok(())
}
