//! Python bindings for `continuum_grasp`.

use std::path::PathBuf;

use continuum_grasp::cli::{run, RunOptions};
use continuum_grasp::geometry::{BoundaryCurve, CurveSegment, FourierMode};
use continuum_grasp::graspmap::{controllability_gramian, GramianKind};
use continuum_grasp::ocp::{
    ForwardBackwardConfig, NewtonConfig, OcpProblem, SolveReport, StepSize,
};
use continuum_grasp::quality::{
    default_length_grid, maximize_quality_over_start, quality_length_sweep, worst_case_wrench,
    QualityConfig,
};
use continuum_grasp::{FrictionCone, GraspError, Wrench};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: GraspError) -> PyErr {
    match e {
        GraspError::InnerSolve { .. } | GraspError::StepSize { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn wrench(w: (f64, f64, f64)) -> Wrench {
    Wrench::new(w.0, w.1, w.2)
}

fn tuple(w: Wrench) -> (f64, f64, f64) {
    (w.fx, w.fy, w.tau)
}

/// A closed planar boundary sampled uniformly in arclength.
#[pyclass(name = "Curve", module = "continuum_grasp", frozen)]
struct PyCurve {
    inner: BoundaryCurve,
}

impl PyCurve {
    fn segment(&self, s0: f64, length: Option<f64>) -> PyResult<CurveSegment> {
        let length = length.unwrap_or(0.5 * self.inner.total_length());
        self.inner.subcurve(s0, length).map_err(to_py)
    }
}

#[pymethods]
impl PyCurve {
    #[staticmethod]
    #[pyo3(signature = (radius = 1.0, samples = 400))]
    fn circle(radius: f64, samples: usize) -> PyResult<Self> {
        Ok(PyCurve {
            inner: BoundaryCurve::circle(radius, samples).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, samples = 400))]
    fn ellipse(a: f64, b: f64, samples: usize) -> PyResult<Self> {
        Ok(PyCurve {
            inner: BoundaryCurve::ellipse(a, b, samples).map_err(to_py)?,
        })
    }

    /// `coefficients` holds `(mode, amplitude, phase)` triples.
    #[staticmethod]
    #[pyo3(signature = (base_radius, coefficients, samples = 400))]
    fn fourier(
        base_radius: f64,
        coefficients: Vec<(u32, f64, f64)>,
        samples: usize,
    ) -> PyResult<Self> {
        let modes: Vec<FourierMode> = coefficients
            .into_iter()
            .map(|(k, a, p)| FourierMode::new(k, a, p))
            .collect();
        Ok(PyCurve {
            inner: BoundaryCurve::fourier_perturbed_circle(base_radius, &modes, samples)
                .map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (samples = 400))]
    fn deformed_circle(samples: usize) -> PyResult<Self> {
        Ok(PyCurve {
            inner: BoundaryCurve::deformed_circle_dc1(samples).map_err(to_py)?,
        })
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.inner.total_length()
    }

    #[getter]
    fn intervals(&self) -> usize {
        self.inner.intervals()
    }

    /// `(s, x, y, phi, kappa)` for every sample, the last closing the loop.
    fn samples(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        self.inner
            .samples()
            .iter()
            .map(|p| (p.s, p.position.x, p.position.y, p.frame_angle, p.curvature))
            .collect()
    }

    fn signed_area(&self) -> f64 {
        self.inner.signed_area()
    }

    /// `W = int G G^T ds` (`kind="force"`) or `W_hat = int B B^T ds`
    /// (`kind="cone"`) over a segment, as nested lists.
    #[pyo3(signature = (s0 = 0.0, length = None, kind = "force", mu = 0.5))]
    fn gramian(
        &self,
        s0: f64,
        length: Option<f64>,
        kind: &str,
        mu: f64,
    ) -> PyResult<Vec<Vec<f64>>> {
        let seg = self.segment(s0, length)?;
        let cone = FrictionCone::new(mu).map_err(to_py)?;
        let m = match kind {
            "force" => controllability_gramian(&seg, GramianKind::Force),
            "cone" => controllability_gramian(&seg, GramianKind::Cone(&cone)),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown gramian kind {other:?}"
                )))
            }
        };
        Ok((0..3)
            .map(|i| (0..3).map(|j| m[(i, j)]).collect())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Curve(total_length={:.6}, intervals={})",
            self.inner.total_length(),
            self.inner.intervals()
        )
    }
}

/// Outcome of a minimum-force solve.
#[pyclass(name = "Solution", module = "continuum_grasp", get_all, frozen)]
struct PySolution {
    cost: f64,
    closed_form_cost: f64,
    converged: bool,
    interior: bool,
    iterations: usize,
    stationarity_residual: f64,
    tolerance: f64,
    terminal_wrench: (f64, f64, f64),
    s: Vec<f64>,
    tangential: Vec<f64>,
    normal: Vec<f64>,
    method: &'static str,
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(cost={:.6e}, converged={}, interior={}, iterations={})",
            self.cost, self.converged, self.interior, self.iterations
        )
    }
}

fn solution(seg: &CurveSegment, prob: &OcpProblem, r: SolveReport) -> PySolution {
    PySolution {
        cost: r.cost,
        closed_form_cost: prob.closed_form().cost,
        converged: r.converged,
        interior: r.interior,
        iterations: r.iterations,
        stationarity_residual: r.stationarity_residual,
        tolerance: r.tolerance,
        terminal_wrench: tuple(r.terminal_wrench),
        s: (0..seg.len()).map(|j| seg.local_s(j)).collect(),
        tangential: r.forces.iter().map(|f| f.x).collect(),
        normal: r.forces.iter().map(|f| f.y).collect(),
        method: r.method.name(),
    }
}

/// Minimum-force grasp of `curve` over `[s0, s0 + length]` against `wrench`.
#[pyfunction]
#[pyo3(signature = (
    curve, wrench, s0 = 0.0, length = None, mu = 0.5, chi = 5e4,
    method = "costate_newton", eta = None, max_iters = None, tol = None
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    curve: &PyCurve,
    wrench: (f64, f64, f64),
    s0: f64,
    length: Option<f64>,
    mu: f64,
    chi: f64,
    method: &str,
    eta: Option<f64>,
    max_iters: Option<usize>,
    tol: Option<f64>,
) -> PyResult<PySolution> {
    let seg = curve.segment(s0, length)?;
    let cone = FrictionCone::new(mu).map_err(to_py)?;
    let prob = OcpProblem::new(&seg, &cone, self::wrench(wrench), chi).map_err(to_py)?;
    let report = match method {
        "forward_backward" => {
            let mut cfg = ForwardBackwardConfig {
                step: eta.map_or(StepSize::Auto, StepSize::Fixed),
                tol_stat: tol,
                ..Default::default()
            };
            if let Some(n) = max_iters {
                cfg.max_iters = n;
            }
            py.allow_threads(|| prob.solve_forward_backward(&cfg))
        }
        "costate_newton" => {
            let mut cfg = NewtonConfig {
                tol_stat: tol,
                ..Default::default()
            };
            if let Some(n) = max_iters {
                cfg.max_iters = n;
            }
            py.allow_threads(|| prob.solve_costate_newton(&cfg))
        }
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    }
    .map_err(to_py)?;
    Ok(solution(&seg, &prob, report))
}

/// Worst-case external wrench over a segment.
#[pyclass(name = "Quality", module = "continuum_grasp", get_all, frozen)]
struct PyQuality {
    q: f64,
    j_tilde: f64,
    worst_wrench: (f64, f64, f64),
    alpha: f64,
    beta: f64,
    s0: f64,
    length: f64,
}

#[pymethods]
impl PyQuality {
    fn __repr__(&self) -> String {
        let w = self.worst_wrench;
        format!(
            "Quality(q={:.6}, worst_wrench=({:.4}, {:.4}, {:.4}))",
            self.q, w.0, w.1, w.2
        )
    }
}

fn quality_config(chi: f64, starts: usize) -> QualityConfig {
    QualityConfig {
        chi,
        starts,
        ..Default::default()
    }
}

#[pyfunction]
#[pyo3(signature = (curve, s0 = 0.0, length = None, mu = 0.5, chi = 5e4, starts = 12))]
fn quality(
    py: Python<'_>,
    curve: &PyCurve,
    s0: f64,
    length: Option<f64>,
    mu: f64,
    chi: f64,
    starts: usize,
) -> PyResult<PyQuality> {
    let length = length.unwrap_or(0.5 * curve.inner.total_length());
    let cone = FrictionCone::new(mu).map_err(to_py)?;
    let cfg = quality_config(chi, starts);
    let q = py
        .allow_threads(|| worst_case_wrench(&curve.inner, s0, length, &cone, &cfg))
        .map_err(to_py)?;
    Ok(PyQuality {
        q: q.q,
        j_tilde: q.j_tilde,
        worst_wrench: tuple(q.worst_wrench),
        alpha: q.alpha,
        beta: q.beta,
        s0: q.s0,
        length: q.length,
    })
}

/// `(L, Q)` pairs; `lengths` defaults to twenty values in `[0.01 L0, L0]`.
#[pyfunction]
#[pyo3(signature = (curve, s0 = 0.0, lengths = None, mu = 0.5, chi = 5e4, starts = 12))]
fn length_sweep(
    py: Python<'_>,
    curve: &PyCurve,
    s0: f64,
    lengths: Option<Vec<f64>>,
    mu: f64,
    chi: f64,
    starts: usize,
) -> PyResult<Vec<(f64, f64)>> {
    let lengths = lengths.unwrap_or_else(|| default_length_grid(curve.inner.total_length()));
    let cone = FrictionCone::new(mu).map_err(to_py)?;
    let cfg = quality_config(chi, starts);
    let sweep = py
        .allow_threads(|| quality_length_sweep(&curve.inner, s0, &lengths, &cone, &cfg))
        .map_err(to_py)?;
    Ok(sweep.iter().map(|p| (p.length, p.q)).collect())
}

#[pyclass(name = "Placement", module = "continuum_grasp", get_all, frozen)]
struct PyPlacement {
    length: f64,
    starts: Vec<f64>,
    qualities: Vec<f64>,
    best_index: usize,
    best_start: f64,
    q_max: f64,
}

#[pymethods]
impl PyPlacement {
    fn __repr__(&self) -> String {
        format!(
            "Placement(best_start={:.6}, q_max={:.6}, grid_points={})",
            self.best_start,
            self.q_max,
            self.starts.len()
        )
    }
}

/// Best grasp start for a fixed length over a uniform grid of starts.
#[pyfunction]
#[pyo3(signature = (curve, length = None, grid_points = 200, mu = 0.5, chi = 5e4, starts = 12))]
fn place(
    py: Python<'_>,
    curve: &PyCurve,
    length: Option<f64>,
    grid_points: usize,
    mu: f64,
    chi: f64,
    starts: usize,
) -> PyResult<PyPlacement> {
    let length = length.unwrap_or(0.5 * curve.inner.total_length());
    let cone = FrictionCone::new(mu).map_err(to_py)?;
    let cfg = quality_config(chi, starts);
    let p = py
        .allow_threads(|| {
            maximize_quality_over_start(&curve.inner, length, grid_points, &cone, &cfg)
        })
        .map_err(to_py)?;
    Ok(PyPlacement {
        length: p.length,
        starts: p.starts,
        qualities: p.qualities,
        best_index: p.best_index,
        best_start: p.best_start,
        q_max: p.q_max,
    })
}

/// Run a scenario file like `grasp run` and return the written paths.
#[pyfunction]
#[pyo3(signature = (config, out = None, threads = None, svg = true))]
fn run_scenario(
    py: Python<'_>,
    config: PathBuf,
    out: Option<PathBuf>,
    threads: Option<usize>,
    svg: bool,
) -> PyResult<Vec<PathBuf>> {
    let opts = RunOptions {
        out_dir: out,
        threads,
        no_svg: !svg,
        dump_matrices: false,
    };
    let manifest = py
        .allow_threads(|| run(&config, &opts))
        .map_err(|e| PyRuntimeError::new_err(format!("exit code {}: {e}", e.exit_code())))?;
    Ok(manifest.outputs.into_iter().map(|o| o.path).collect())
}

#[pymodule]
#[pyo3(name = "continuum_grasp")]
fn continuum_grasp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyCurve>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyQuality>()?;
    m.add_class::<PyPlacement>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(quality, m)?)?;
    m.add_function(wrap_pyfunction!(length_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(place, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
