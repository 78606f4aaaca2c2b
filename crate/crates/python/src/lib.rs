//! Python bindings: `import pyfinsler`.

use finsler_lab::curvature::{flag_curvature, riemann_pack};
use finsler_lab::geometry::{canonical_point, cartan_pack, metric_pack, EvalPoint};
use finsler_lab::jet::eval_jet;
use finsler_lab::report::{run as run_report, GridRange, RunConfig, Subcommand};
use finsler_lab::spray::pq_from_phi;
use finsler_lab::surface::{berwald_frame, main_scalar};
use finsler_lab::{parse, Expr as CoreExpr};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn list(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Parsed `phi(r, s)`.
#[pyclass(frozen)]
struct Expr {
    inner: CoreExpr,
}

#[pymethods]
impl Expr {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        parse(text).map(|inner| Expr { inner }).map_err(value_err)
    }

    /// Plain value, `None` outside the domain.
    fn eval(&self, r: f64, s: f64) -> Option<f64> {
        self.inner.eval(r, s)
    }

    /// The 15 partials `d^(a+b)/dr^a ds^b` for `a + b <= 4`, keyed by `(a, b)`.
    fn partials<'py>(&self, py: Python<'py>, r: f64, s: f64) -> PyResult<Bound<'py, PyDict>> {
        let jet = eval_jet(&self.inner, r, s).map_err(value_err)?;
        let d = PyDict::new(py);
        for k in 0..=4usize {
            for b in 0..=k {
                d.set_item((k - b, b), jet.partial(k - b, b))?;
            }
        }
        Ok(d)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.inner.to_string())
    }
}

/// A point `(x, y)` of the tangent bundle.
#[pyclass(frozen)]
struct Point {
    inner: EvalPoint,
}

#[pymethods]
impl Point {
    /// `x = r e1`, `y` with `|y| = u` and `<x, y> = s u`.
    #[staticmethod]
    fn canonical(n: usize, r: f64, s: f64, u: f64) -> PyResult<Self> {
        canonical_point(n, r, s, u)
            .map(|inner| Point { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_vectors(x: Vec<f64>, y: Vec<f64>) -> PyResult<Self> {
        EvalPoint::from_vectors(DVector::from_vec(x), DVector::from_vec(y))
            .map(|inner| Point { inner })
            .map_err(value_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }
    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }
    #[getter]
    fn u(&self) -> f64 {
        self.inner.u
    }
    #[getter]
    fn x(&self) -> Vec<f64> {
        list(&self.inner.x)
    }
    #[getter]
    fn y(&self) -> Vec<f64> {
        list(&self.inner.y)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Point(n={}, r={}, s={}, u={})", p.n, p.r, p.s, p.u)
    }
}

/// Metric tensor, inverse, determinants and Cartan scalars.
#[pyfunction]
fn metric<'py>(py: Python<'py>, phi: &Expr, point: &Point) -> PyResult<Bound<'py, PyDict>> {
    let p = &point.inner;
    let jet = eval_jet(&phi.inner, p.r, p.s).map_err(value_err)?;
    let m = metric_pack(&jet, p).map_err(value_err)?;
    let c = cartan_pack(&jet, p).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("F", m.f)?;
    d.set_item("g", rows(&m.g))?;
    d.set_item("g_inv", rows(&m.ginv))?;
    d.set_item("det_direct", m.det_direct)?;
    d.set_item("det_formula", m.det_formula)?;
    d.set_item("sigma", m.sigma.to_vec())?;
    d.set_item("rho", m.rho.to_vec())?;
    d.set_item("regular", m.is_regular(p.n))?;
    d.set_item("mu", c.mu)?;
    d.set_item("nu", c.nu)?;
    Ok(d)
}

/// Spray `(P, Q)`, `G^i`, `N^i_j` and the Riemann data.
#[pyfunction]
fn spray<'py>(py: Python<'py>, phi: &Expr, point: &Point) -> PyResult<Bound<'py, PyDict>> {
    let p = &point.inner;
    let jet = eval_jet(&phi.inner, p.r, p.s).map_err(value_err)?;
    let sp = pq_from_phi(&jet, p).map_err(value_err)?;
    let cp = riemann_pack(&sp, &jet, p).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("P", sp.p.value)?;
    d.set_item("Q", sp.q.value)?;
    d.set_item("G", list(&sp.g))?;
    d.set_item("N", rows(&sp.n))?;
    for (name, v) in ["R1", "R2", "R3", "R4", "R5"].iter().zip(cp.scalars()) {
        d.set_item(*name, v)?;
    }
    d.set_item("R", rows(&cp.rmat))?;
    d.set_item("C3", cp.c3)?;
    d.set_item("K", flag_curvature(&cp, jet.value(), p))?;
    d.set_item("identity_flag", cp.identity_flag)?;
    Ok(d)
}

/// Berwald frame coefficient and main scalar of a surface.
#[pyfunction]
fn surface<'py>(py: Python<'py>, phi: &Expr, point: &Point) -> PyResult<Bound<'py, PyDict>> {
    let p = &point.inner;
    let jet = eval_jet(&phi.inner, p.r, p.s).map_err(value_err)?;
    let fr = berwald_frame(&jet, p).map_err(value_err)?;
    let ms = main_scalar(&jet, p).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("a", fr.a)?;
    d.set_item("ell", list(&fr.ell_hi))?;
    d.set_item("m", list(&fr.m_hi))?;
    d.set_item("I", ms.i)?;
    d.set_item("I_direct", ms.i_direct)?;
    Ok(d)
}

/// Full grid run; returns the JSON report text and the exit status.
#[pyfunction]
#[pyo3(signature = (command, phi, dim=2, r="0.5:1.5:3", s_frac="-0.6:0.6:3", u="1:1:1", p=None, q=None, seed=None))]
#[allow(clippy::too_many_arguments)]
fn run(
    command: &str,
    phi: &str,
    dim: usize,
    r: &str,
    s_frac: &str,
    u: &str,
    p: Option<String>,
    q: Option<String>,
    seed: Option<u64>,
) -> PyResult<(String, i32)> {
    let sub = match command {
        "report" => Subcommand::Report,
        "check" => Subcommand::Check,
        "classify" => Subcommand::Classify,
        "metrize" => Subcommand::Metrize,
        other => return Err(PyValueError::new_err(format!("unknown command `{other}`"))),
    };
    let mut config = RunConfig::new(sub, phi, dim);
    config.r_grid = r.parse::<GridRange>().map_err(value_err)?;
    config.s_fraction_grid = s_frac.parse::<GridRange>().map_err(value_err)?;
    config.u_grid = u.parse::<GridRange>().map_err(value_err)?;
    config.p_expr = p;
    config.q_expr = q;
    config.seed = seed;
    let doc = run_report(&config).map_err(value_err)?;
    Ok((doc.to_json(), doc.exit_code()))
}

#[pymodule]
fn pyfinsler(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expr>()?;
    m.add_class::<Point>()?;
    m.add_function(wrap_pyfunction!(metric, m)?)?;
    m.add_function(wrap_pyfunction!(spray, m)?)?;
    m.add_function(wrap_pyfunction!(surface, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
