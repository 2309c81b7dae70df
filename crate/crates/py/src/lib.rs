//! Python bindings for the `necklace` crate.

use necklace::spectral::{classify_flat_band, FlatBandLocation};
use necklace::{
    assemble_profile, compare_families, shoot_bound_state, shoot_homoclinic, unstable_direction, AssemblyOptions, BoundState, HomoclinicOptions, MapState,
    ShootingOptions, Source, Symmetry,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(necklace_py, NumericalError, PyRuntimeError, "A numerical routine failed to converge or lost accuracy.");

fn to_py(e: necklace::Error) -> PyErr {
    match e {
        necklace::Error::Domain(msg) => PyValueError::new_err(msg),
        other => NumericalError::new_err(other.to_string()),
    }
}

fn parse_symmetry(s: &str) -> PyResult<Symmetry> {
    match s {
        "link" => Ok(Symmetry::LinkCentered),
        "ring" => Ok(Symmetry::RingCentered),
        _ => Err(PyValueError::new_err(format!("symmetry must be 'link' or 'ring', got {s:?}"))),
    }
}

/// Geometry of the necklace graph with link length `L`.
#[pyclass(name = "GraphParams", module = "necklace_py", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGraphParams(necklace::GraphParams);

#[pymethods]
impl PyGraphParams {
    #[new]
    fn new(link: f64) -> PyResult<Self> {
        necklace::GraphParams::new(link).map(Self).map_err(to_py)
    }

    #[getter]
    fn link(&self) -> f64 {
        self.0.link()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.0.period()
    }

    /// Discriminant `T(ω)` of the periodic problem.
    fn trace(&self, omega: f64) -> f64 {
        necklace::trace(omega, &self.0)
    }

    /// `T(iε)`, which exceeds 2 below the spectrum.
    fn trace_hyperbolic(&self, eps: f64) -> f64 {
        necklace::trace_hyperbolic(eps, &self.0)
    }

    /// Spectral bands with `ω ≤ omega_max` as dictionaries.
    #[pyo3(signature = (omega_max = 6.0, grid = 4000))]
    fn bands<'py>(&self, py: Python<'py>, omega_max: f64, grid: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let bands = necklace::find_bands(&self.0, omega_max, grid).map_err(to_py)?;
        bands
            .iter()
            .map(|b| {
                let d = PyDict::new(py);
                d.set_item("index", b.index)?;
                d.set_item("omega_lo", b.omega_lo)?;
                d.set_item("omega_hi", b.omega_hi)?;
                d.set_item("lambda_lo", b.lambda_lo)?;
                d.set_item("lambda_hi", b.lambda_hi)?;
                d.set_item("touches_below", b.touches_below)?;
                Ok(d)
            })
            .collect()
    }

    /// Location of the flat band `λ = m²`: `"edge"` or `"interior"`.
    fn flat_band(&self, m: u32) -> PyResult<(f64, &'static str, usize)> {
        let fb = classify_flat_band(m, &self.0).map_err(to_py)?;
        let loc = match fb.location {
            FlatBandLocation::Edge => "edge",
            FlatBandLocation::Interior => "interior",
        };
        Ok((fb.lambda, loc, fb.host_band_index))
    }

    fn __repr__(&self) -> String {
        format!("GraphParams(link={})", self.0.link())
    }
}

/// The period map `(a, b) ↦ (a', b')` for fixed `ε`.
#[pyclass(name = "PeriodMap", module = "necklace_py", frozen)]
struct PyPeriodMap(necklace::PeriodMap);

#[pymethods]
impl PyPeriodMap {
    #[new]
    #[pyo3(signature = (eps, params, tol = None))]
    fn new(eps: f64, params: PyRef<'_, PyGraphParams>, tol: Option<f64>) -> PyResult<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(PyValueError::new_err(format!("eps must be positive, got {eps}")));
        }
        Ok(Self(match tol {
            Some(t) => necklace::PeriodMap::with_tol(eps, params.0, t),
            None => necklace::PeriodMap::new(eps, params.0),
        }))
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.0.eps
    }

    fn step(&self, a: f64, b: f64) -> PyResult<(f64, f64)> {
        let s = self.0.step(MapState::new(a, b)).map_err(to_py)?;
        Ok((s.a, s.b))
    }

    fn inverse_step(&self, a: f64, b: f64) -> PyResult<(f64, f64)> {
        let s = self.0.inverse_step(MapState::new(a, b)).map_err(to_py)?;
        Ok((s.a, s.b))
    }

    /// Jacobian at `(a, b)` as `((m11, m12), (m21, m22))`.
    fn jacobian(&self, a: f64, b: f64) -> PyResult<((f64, f64), (f64, f64))> {
        let m = self.0.jacobian(MapState::new(a, b), None).map_err(to_py)?;
        Ok(((m.m11, m.m12), (m.m21, m.m22)))
    }

    /// `(λ₊, λ₋, unstable eigenvector)` of the linearization at the origin.
    fn unstable_direction(&self) -> PyResult<(f64, f64, (f64, f64))> {
        let d = unstable_direction(&self.0, None).map_err(to_py)?;
        Ok((d.lambda_plus, d.lambda_minus, (d.vector[0], d.vector[1])))
    }

    /// Symmetric homoclinic orbit centered on a link or a ring.
    #[pyo3(signature = (symmetry = "link"))]
    fn homoclinic(&self, symmetry: &str) -> PyResult<PyOrbit> {
        let orbit = shoot_homoclinic(&self.0, parse_symmetry(symmetry)?, &HomoclinicOptions::default()).map_err(to_py)?;
        Ok(PyOrbit(orbit))
    }
}

/// A symmetric homoclinic orbit of the period map.
#[pyclass(name = "Orbit", module = "necklace_py", frozen)]
struct PyOrbit(necklace::Orbit);

#[pymethods]
impl PyOrbit {
    #[getter]
    fn eps(&self) -> f64 {
        self.0.eps
    }

    #[getter]
    fn symmetry(&self) -> &'static str {
        self.0.symmetry.as_str()
    }

    #[getter]
    fn lambda_plus(&self) -> f64 {
        self.0.lambda_plus
    }

    /// `(n, a, b)` for every vertex state of the orbit.
    fn states(&self) -> Vec<(i64, f64, f64)> {
        (self.0.n_min()..).zip(&self.0.states).map(|(n, s)| (n, s.a, s.b)).collect()
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let g = &self.0.diagnostics;
        let d = PyDict::new(py);
        d.set_item("all_positive", g.all_positive)?;
        d.set_item("monotone_tail_index", g.monotone_tail_index)?;
        d.set_item("tail_decay_ratio", g.tail_decay_ratio)?;
        d.set_item("backward_tail_ratio", g.backward_tail_ratio)?;
        d.set_item("l2_distance_to_sech", g.l2_distance_to_sech)?;
        d.set_item("sech_shift", g.sech_shift)?;
        d.set_item("max_state_norm", g.max_state_norm)?;
        Ok(d)
    }

    /// Integrates the orbit over the graph.
    #[pyo3(signature = (samples_per_edge = 64))]
    fn assemble(&self, samples_per_edge: usize) -> PyResult<PyBoundState> {
        let opts = AssemblyOptions {
            samples_per_edge,
            ..AssemblyOptions::default()
        };
        assemble_profile(&self.0, &opts).map(PyBoundState).map_err(to_py)
    }
}

/// A sampled bound state on the graph.
#[pyclass(name = "BoundState", module = "necklace_py", frozen)]
struct PyBoundState(BoundState);

#[pymethods]
impl PyBoundState {
    #[getter]
    fn eps(&self) -> f64 {
        self.0.eps
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn phi0(&self) -> f64 {
        self.0.phi0
    }

    #[getter]
    fn charge(&self) -> f64 {
        self.0.charge
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.0.energy
    }

    #[getter]
    fn h2_norm(&self) -> f64 {
        self.0.h2_norm
    }

    #[getter]
    fn max_kirchhoff_residual(&self) -> f64 {
        self.0.max_kirchhoff_residual
    }

    #[getter]
    fn mirror_defect(&self) -> f64 {
        self.0.mirror_defect
    }

    #[getter]
    fn symmetry(&self) -> &'static str {
        self.0.symmetry.as_str()
    }

    #[getter]
    fn source(&self) -> &'static str {
        match self.0.source {
            Source::FromOrbit => "orbit",
            Source::DirectShooting => "shooting",
        }
    }

    fn min_value(&self) -> f64 {
        self.0.profile.min_value()
    }

    fn sup(&self) -> f64 {
        self.0.profile.sup_abs()
    }

    /// `(kind, cell, x, phi, dphi)` for every sampled edge.
    #[allow(clippy::type_complexity)]
    fn edges(&self) -> Vec<(&'static str, i64, Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.0
            .profile
            .edges()
            .map(|(r, e, _)| (r.kind.as_str(), r.cell.0, e.x.clone(), e.phi.clone(), e.dphi.clone()))
            .collect()
    }
}

/// Bound state at `lambda < 0` by shooting from the symmetry center.
#[pyfunction]
#[pyo3(signature = (lambda_, params, symmetry = "link", n_cells = None, samples_per_edge = 64, tol = 1e-12))]
fn bound_state(lambda_: f64, params: PyRef<'_, PyGraphParams>, symmetry: &str, n_cells: Option<usize>, samples_per_edge: usize, tol: f64) -> PyResult<PyBoundState> {
    let opts = ShootingOptions {
        n_cells,
        samples_per_edge,
        tol,
        ..ShootingOptions::default()
    };
    shoot_bound_state(lambda_, &params.0, parse_symmetry(symmetry)?, &opts).map(PyBoundState).map_err(to_py)
}

/// Charges and energies of the link- and ring-centered states at `eps`.
#[pyfunction]
fn families<'py>(py: Python<'py>, eps: f64, params: PyRef<'_, PyGraphParams>) -> PyResult<Bound<'py, PyDict>> {
    let c = compare_families(eps, &params.0, &AssemblyOptions::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("q_link", c.q_link)?;
    d.set_item("q_ring", c.q_ring)?;
    d.set_item("e_link", c.e_link)?;
    d.set_item("e_ring", c.e_ring)?;
    d.set_item("dq_rel", c.dq_rel)?;
    Ok(d)
}

#[pymodule]
fn necklace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraphParams>()?;
    m.add_class::<PyPeriodMap>()?;
    m.add_class::<PyOrbit>()?;
    m.add_class::<PyBoundState>()?;
    m.add_function(wrap_pyfunction!(bound_state, m)?)?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
