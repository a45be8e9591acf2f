use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use super::render::{render_svg, ForceOverlay, QualityMap};
use super::scenario::{Scenario, SolverMethod, TaskSpec};
use crate::error::GraspError;
use crate::geometry::{fmt_num, BoundaryCurve, CurveSegment};
use crate::graspmap::{
    controllability_gramian, local_grasp_map, write_matrix_csv, FrictionCone, GramianKind,
};
use crate::ocp::{OcpProblem, SolveReport};
use crate::quality::{
    default_length_grid, maximize_quality_over_start, quality_length_sweep, worst_case_wrench,
    QualityResult,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("solver did not converge: {message} (diagnostics in {})", diagnostics.display())]
    NonConvergence {
        message: String,
        diagnostics: PathBuf,
    },
    #[error(transparent)]
    Grasp(#[from] GraspError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse { .. } => 2,
            RunError::Validation(_) | RunError::Grasp(_) => 3,
            RunError::NonConvergence { .. } => 4,
            RunError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads for the quality searches; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub no_svg: bool,
    pub dump_matrices: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub kind: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub version: String,
    pub timestamp: String,
    pub task: String,
    pub outputs: Vec<OutputFile>,
    pub wall_clock_seconds: f64,
}

/// Read and validate a scenario file without running it.
pub fn load_scenario(path: &Path) -> Result<Scenario, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let scenario = Scenario::parse(&text).map_err(|message| RunError::Parse {
        path: path.to_owned(),
        message,
    })?;
    let errs = scenario.validate();
    if !errs.is_empty() {
        return Err(RunError::Validation(errs));
    }
    Ok(scenario)
}

/// Parse, validate and execute a scenario, writing its artifacts.
pub fn run(config: &Path, opts: &RunOptions) -> Result<RunManifest, RunError> {
    let started = Instant::now();
    let scenario = load_scenario(config)?;
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| scenario.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let curve = scenario.object.build()?;
    let cone = scenario.cone()?;

    let mut writer = Artifacts::new(&out_dir, &scenario, opts)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = opts.threads {
            b = b.num_threads(k);
        }
        b.build()
            .map_err(|e| std::io::Error::other(e.to_string()))?
    };
    pool.install(|| execute(&scenario, &curve, &cone, &mut writer))?;

    writer.text("scenario", "scenario.cfg", &scenario.to_config_string())?;
    let manifest = RunManifest {
        scenario: scenario.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        task: scenario.task.name().to_string(),
        outputs: writer.outputs.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out_dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

struct Artifacts<'a> {
    dir: PathBuf,
    scenario: &'a Scenario,
    svg: bool,
    dump: bool,
    outputs: Vec<OutputFile>,
    summary: String,
}

impl<'a> Artifacts<'a> {
    fn new(dir: &Path, scenario: &'a Scenario, opts: &RunOptions) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_owned(),
            scenario,
            svg: scenario.output.svg && !opts.no_svg,
            dump: scenario.output.dump_matrices || opts.dump_matrices,
            outputs: Vec::new(),
            summary: String::new(),
        })
    }

    fn record(&mut self, kind: &str, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.outputs.push(OutputFile {
            kind: kind.to_string(),
            path: path.clone(),
        });
        path
    }

    fn text(&mut self, kind: &str, name: &str, body: &str) -> std::io::Result<()> {
        let path = self.record(kind, name);
        fs::write(path, body)
    }

    fn csv(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> std::io::Result<()> {
        if !self.scenario.output.csv {
            return Ok(());
        }
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.record("csv", name);
        fs::write(path, buf)
    }

    fn svg(&mut self, name: &str, body: impl FnOnce() -> String) -> std::io::Result<()> {
        if !self.svg {
            return Ok(());
        }
        let path = self.record("svg", name);
        fs::write(path, body())
    }

    fn line(&mut self, indent: usize, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(
            self.summary,
            "{:indent$}{key}: {value}",
            "",
            indent = 2 * indent
        );
    }

    fn section(&mut self, indent: usize, key: &str) {
        let _ = writeln!(self.summary, "{:indent$}{key}:", "", indent = 2 * indent);
    }

    fn finish_summary(&mut self) -> std::io::Result<()> {
        if self.scenario.output.summary {
            let body = std::mem::take(&mut self.summary);
            self.text("summary", "summary.txt", &body)?;
        }
        Ok(())
    }

    fn diagnostics(&mut self, message: &str) -> PathBuf {
        let path = self.record("diagnostics", "diagnostics.txt");
        let body = format!("{}{}\n", self.summary, message);
        let _ = fs::write(&path, body);
        path
    }

    fn dump_segment(&mut self, segment: &CurveSegment, cone: &FrictionCone) -> std::io::Result<()> {
        if !self.dump {
            return Ok(());
        }
        let to_dyn = |m: nalgebra::Matrix3<f64>| DMatrix::from_fn(3, 3, |i, j| m[(i, j)]);
        let w = to_dyn(controllability_gramian(segment, GramianKind::Force));
        let w_hat = to_dyn(controllability_gramian(segment, GramianKind::Cone(cone)));
        let n = segment.len();
        let mut g = DMatrix::zeros(3, 2 * n);
        for (k, p) in segment.samples().iter().enumerate() {
            g.view_mut((0, 2 * k), (3, 2))
                .copy_from(&local_grasp_map(p));
        }
        for (name, m) in [
            ("gramian_force.csv", &w),
            ("gramian_cone.csv", &w_hat),
            ("grasp_map.csv", &g),
        ] {
            let mut buf = Vec::new();
            write_matrix_csv(&mut buf, m)?;
            let path = self.record("matrix", name);
            fs::write(path, buf)?;
        }
        Ok(())
    }
}

fn execute(
    scenario: &Scenario,
    curve: &BoundaryCurve,
    cone: &FrictionCone,
    out: &mut Artifacts<'_>,
) -> Result<(), RunError> {
    let l0 = curve.total_length();
    out.line(0, "task", scenario.task.name());
    out.section(0, "object");
    out.line(1, "shape", scenario.object.name());
    out.line(1, "samples", curve.intervals());
    out.line(1, "total_length", fmt_num(l0));
    out.section(0, "settings");
    out.line(1, "mu", scenario.cone.mu);
    out.line(1, "chi", scenario.solver.chi);
    out.csv("curve.csv", |b| curve.write_csv(b))?;

    let qcfg = scenario.quality_config();
    let inner_failure = |out: &mut Artifacts<'_>, e: GraspError| -> RunError {
        match e {
            GraspError::InnerSolve { .. } | GraspError::StepSize { .. } => {
                let message = e.to_string();
                let diagnostics = out.diagnostics(&message);
                RunError::NonConvergence {
                    message,
                    diagnostics,
                }
            }
            other => RunError::Grasp(other),
        }
    };

    match &scenario.task {
        TaskSpec::Solve {
            start_fraction,
            length_fraction,
            ..
        } => {
            let segment = curve.subcurve(start_fraction * l0, length_fraction * l0)?;
            out.dump_segment(&segment, cone)?;
            let wrench = scenario.solve_wrench().expect("solve task has a wrench");
            let problem = OcpProblem::new(&segment, cone, wrench, scenario.solver.chi)?;
            let result = match scenario.solver.method {
                SolverMethod::ForwardBackward => {
                    problem.solve_forward_backward(&scenario.solver.forward_backward())
                }
                SolverMethod::CostateNewton => {
                    problem.solve_costate_newton(&scenario.solver.newton())
                }
            };
            let report = result.map_err(|e| inner_failure(out, e))?;
            out.section(0, "solve");
            out.line(1, "external_wrench", wrench);
            out.line(1, "segment_start", fmt_num(segment.start()));
            out.line(1, "segment_length", fmt_num(segment.length()));
            summarize_report(out, 1, &report);
            let closed = problem.closed_form();
            out.line(1, "closed_form_cost", fmt_num(closed.cost));
            write_solution(out, curve, &segment, cone, &problem, &report, "")?;
            if !report.converged {
                let message = format!(
                    "stationarity residual {:e} above tolerance {:e} after {} iterations",
                    report.stationarity_residual, report.tolerance, report.iterations
                );
                let diagnostics = out.diagnostics(&message);
                return Err(RunError::NonConvergence {
                    message,
                    diagnostics,
                });
            }
        }
        TaskSpec::Quality {
            start_fraction,
            length_fraction,
        } => {
            let (s0, length) = (start_fraction * l0, length_fraction * l0);
            let segment = curve.subcurve(s0, length)?;
            out.dump_segment(&segment, cone)?;
            let q = worst_case_wrench(curve, s0, length, cone, &qcfg)
                .map_err(|e| inner_failure(out, e))?;
            summarize_quality(out, &q);
            out.csv("starts.csv", |b| write_starts_csv(b, &q))?;
            let mut problem = OcpProblem::new(&segment, cone, q.worst_wrench, qcfg.chi)?;
            problem.set_external_wrench(q.worst_wrench)?;
            let report = qcfg
                .solver
                .solve(&problem)
                .map_err(|e| inner_failure(out, e))?;
            write_solution(out, curve, &segment, cone, &problem, &report, "worst_")?;
        }
        TaskSpec::SweepLength {
            start_fraction,
            length_fractions,
        } => {
            let lengths: Vec<f64> = match length_fractions {
                Some(fr) => fr.iter().map(|f| f * l0).collect(),
                None => default_length_grid(l0),
            };
            let s0 = start_fraction * l0;
            let sweep = quality_length_sweep(curve, s0, &lengths, cone, &qcfg)
                .map_err(|e| inner_failure(out, e))?;
            out.section(0, "sweep_length");
            out.line(1, "start", fmt_num(s0));
            let qmax = sweep.iter().map(|p| p.q).fold(0.0, f64::max);
            out.line(1, "q_max", fmt_num(qmax));
            out.section(1, "points");
            for p in &sweep {
                out.line(2, &fmt_num(p.length), fmt_num(p.q));
            }
            out.csv("quality_vs_length.csv", |b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["L", "Q"])?;
                for p in &sweep {
                    w.write_record([fmt_num(p.length), fmt_num(p.q)])?;
                }
                w.flush()
            })?;
        }
        TaskSpec::Place {
            length_fraction,
            grid_points,
        } => {
            let length = length_fraction * l0;
            let placement = maximize_quality_over_start(curve, length, *grid_points, cone, &qcfg)
                .map_err(|e| inner_failure(out, e))?;
            let (qmin, qmax) = placement
                .qualities
                .iter()
                .fold((f64::MAX, f64::MIN), |(a, b), &q| (a.min(q), b.max(q)));
            out.section(0, "place");
            out.line(1, "length", fmt_num(length));
            out.line(1, "grid_points", grid_points);
            out.line(1, "best_start", fmt_num(placement.best_start));
            out.line(1, "best_start_fraction", fmt_num(placement.best_start / l0));
            out.line(1, "q_max", fmt_num(placement.q_max));
            out.line(1, "q_min", fmt_num(qmin));
            out.line(1, "relative_spread", fmt_num((qmax - qmin) / qmax));
            out.csv("quality_vs_start.csv", |b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["s0", "Q"])?;
                for (s, q) in placement.starts.iter().zip(&placement.qualities) {
                    w.write_record([fmt_num(*s), fmt_num(*q)])?;
                }
                w.flush()
            })?;
            out.svg("placement.svg", || {
                render_svg(
                    curve,
                    None,
                    Some(QualityMap {
                        starts: &placement.starts,
                        values: &placement.qualities,
                    }),
                )
            })?;
        }
    }
    out.finish_summary()?;
    Ok(())
}

fn summarize_report(out: &mut Artifacts<'_>, indent: usize, r: &SolveReport) {
    out.line(indent, "method", r.method.name());
    out.line(indent, "cost", fmt_num(r.cost));
    out.line(indent, "terminal_wrench", r.terminal_wrench);
    out.line(
        indent,
        "residual_wrench_norm",
        fmt_num(r.residual_wrench_norm),
    );
    out.line(
        indent,
        "stationarity_residual",
        fmt_num(r.stationarity_residual),
    );
    out.line(indent, "tolerance", fmt_num(r.tolerance));
    out.line(indent, "iterations", r.iterations);
    out.line(indent, "converged", r.converged);
    out.line(indent, "interior", r.interior);
}

fn summarize_quality(out: &mut Artifacts<'_>, q: &QualityResult) {
    out.section(0, "quality");
    out.line(1, "segment_start", fmt_num(q.s0));
    out.line(1, "segment_length", fmt_num(q.length));
    out.line(1, "Q", fmt_num(q.q));
    out.line(1, "J_tilde", fmt_num(q.j_tilde));
    out.line(1, "worst_wrench", q.worst_wrench);
    out.line(1, "alpha", fmt_num(q.alpha));
    out.line(1, "beta", fmt_num(q.beta));
    out.line(1, "starts_evaluated", q.starts_evaluated);
    out.section(1, "starts");
    for (i, d) in q.starts.iter().enumerate() {
        out.line(
            2,
            &format!("{i}"),
            format!(
                "J={} at ({:.6}, {:.6}) from ({:.6}, {:.6}), {} evaluations",
                fmt_num(d.effort),
                d.optimum.0,
                d.optimum.1,
                d.start.0,
                d.start.1,
                d.evaluations
            ),
        );
    }
}

fn write_starts_csv(b: &mut Vec<u8>, q: &QualityResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(b);
    w.write_record([
        "alpha_start",
        "beta_start",
        "alpha",
        "beta",
        "J_start",
        "J",
        "evaluations",
    ])?;
    for d in &q.starts {
        w.write_record([
            fmt_num(d.start.0),
            fmt_num(d.start.1),
            fmt_num(d.optimum.0),
            fmt_num(d.optimum.1),
            fmt_num(d.start_effort),
            fmt_num(d.effort),
            d.evaluations.to_string(),
        ])?;
    }
    w.flush()
}

fn write_solution(
    out: &mut Artifacts<'_>,
    curve: &BoundaryCurve,
    segment: &CurveSegment,
    cone: &FrictionCone,
    problem: &OcpProblem,
    report: &SolveReport,
    prefix: &str,
) -> std::io::Result<()> {
    out.csv(&format!("{prefix}force_profile.csv"), |b| {
        report.write_force_csv(b, segment.step(), cone.mu())
    })?;
    let (trajectory, _) = problem.integrate_state(&report.control);
    out.csv(&format!("{prefix}state.csv"), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["s", "w_x", "w_y", "tau"])?;
        for (j, s) in trajectory.iter().enumerate() {
            w.write_record([
                fmt_num(segment.local_s(j)),
                fmt_num(s.fx),
                fmt_num(s.fy),
                fmt_num(s.tau),
            ])?;
        }
        w.flush()
    })?;
    let normal: Vec<f64> = report.forces.iter().map(|f| f.y).collect();
    out.svg(&format!("{prefix}grasp.svg"), || {
        render_svg(
            curve,
            Some(ForceOverlay {
                segment,
                normal_forces: &normal,
            }),
            None,
        )
    })
}
