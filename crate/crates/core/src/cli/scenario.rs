//! Scenario files: flat dotted keys (`object.shape = "circle"`), read as TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryCurve, FourierMode, MIN_SAMPLES};
use crate::graspmap::{FrictionCone, Wrench};
use crate::ocp::{ForwardBackwardConfig, NewtonConfig, StepSize, DEFAULT_ETA, DEFAULT_MAX_ITERS};
use crate::quality::simplex::SimplexOptions;
use crate::quality::{InnerSolver, QualityConfig};
use crate::Result;

fn default_samples() -> usize {
    400
}
fn default_mu() -> f64 {
    0.5
}
fn default_chi() -> f64 {
    5e4
}
fn default_eta() -> f64 {
    DEFAULT_ETA
}
fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_starts() -> usize {
    12
}
fn default_tol() -> f64 {
    1e-4
}
fn default_max_evals() -> usize {
    400
}
fn default_one() -> f64 {
    1.0
}
fn default_two() -> f64 {
    2.0
}
fn default_half() -> f64 {
    0.5
}
fn default_grid_points() -> usize {
    200
}
fn default_true() -> bool {
    true
}

fn flatten_into(out: &mut String, prefix: &str, value: &toml::Value) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(out, &key, v);
            }
        }
        v => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&v.to_string());
            out.push('\n');
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub object: ObjectSpec,
    #[serde(default)]
    pub cone: ConeSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub search: SearchSpec,
    pub task: TaskSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectSpec {
    Circle {
        #[serde(default = "default_one")]
        radius: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Ellipse {
        #[serde(default = "default_two")]
        a: f64,
        #[serde(default = "default_one")]
        b: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Radially perturbed circle; each coefficient is `[mode, amplitude, phase]`.
    Fourier {
        #[serde(default = "default_one")]
        base_radius: f64,
        coefficients: Vec<[f64; 3]>,
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

impl ObjectSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectSpec::Circle { .. } => "circle",
            ObjectSpec::Ellipse { .. } => "ellipse",
            ObjectSpec::Fourier { .. } => "fourier",
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            ObjectSpec::Circle { samples, .. }
            | ObjectSpec::Ellipse { samples, .. }
            | ObjectSpec::Fourier { samples, .. } => *samples,
        }
    }

    pub fn build(&self) -> Result<BoundaryCurve> {
        match self {
            ObjectSpec::Circle { radius, samples } => BoundaryCurve::circle(*radius, *samples),
            ObjectSpec::Ellipse { a, b, samples } => BoundaryCurve::ellipse(*a, *b, *samples),
            ObjectSpec::Fourier {
                base_radius,
                coefficients,
                samples,
            } => {
                let modes: Vec<FourierMode> = coefficients
                    .iter()
                    .map(|c| FourierMode::new(c[0] as u32, c[1], c[2]))
                    .collect();
                BoundaryCurve::fourier_perturbed_circle(*base_radius, &modes, *samples)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    #[serde(default = "default_mu")]
    pub mu: f64,
}

impl Default for ConeSpec {
    fn default() -> Self {
        ConeSpec { mu: default_mu() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    ForwardBackward,
    CostateNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_chi")]
    pub chi: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Use `1 / (1 + chi lambda_max)` instead of `eta`.
    #[serde(default)]
    pub auto_step: bool,
    #[serde(default)]
    pub backtracking: bool,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_stat: Option<f64>,
    /// Algorithm for the `solve` task.
    #[serde(default = "SolverSpec::default_method")]
    pub method: SolverMethod,
}

impl SolverSpec {
    fn default_method() -> SolverMethod {
        SolverMethod::ForwardBackward
    }

    pub fn forward_backward(&self) -> ForwardBackwardConfig {
        ForwardBackwardConfig {
            step: if self.auto_step {
                StepSize::Auto
            } else {
                StepSize::Fixed(self.eta)
            },
            max_iters: self.max_iters,
            tol_stat: self.tol_stat,
            backtracking: self.backtracking,
        }
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol_stat: self.tol_stat,
            ..NewtonConfig::default()
        }
    }

    pub fn inner(&self, method: SolverMethod) -> InnerSolver {
        match method {
            SolverMethod::ForwardBackward => InnerSolver::ForwardBackward(self.forward_backward()),
            SolverMethod::CostateNewton => InnerSolver::CostateNewton(self.newton()),
        }
    }
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            chi: default_chi(),
            eta: default_eta(),
            auto_step: false,
            backtracking: false,
            max_iters: default_max_iters(),
            tol_stat: None,
            method: Self::default_method(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Relative spread of `J*` over the simplex at termination.
    #[serde(default = "default_tol")]
    pub simplex_tol: f64,
    /// Simplex size in radians at termination.
    #[serde(default = "default_tol")]
    pub angle_tol: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "default_one")]
    pub torque_length_scale: f64,
    /// Algorithm for every `J*` evaluation inside quality searches.
    #[serde(default = "SearchSpec::default_inner")]
    pub inner_solver: SolverMethod,
}

impl SearchSpec {
    fn default_inner() -> SolverMethod {
        SolverMethod::CostateNewton
    }
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            starts: default_starts(),
            simplex_tol: default_tol(),
            angle_tol: default_tol(),
            max_evals: default_max_evals(),
            torque_length_scale: 1.0,
            inner_solver: Self::default_inner(),
        }
    }
}

/// Start and length are fractions of the boundary length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Solve {
        wrench: [f64; 3],
        #[serde(default)]
        start_fraction: f64,
        #[serde(default = "default_half")]
        length_fraction: f64,
    },
    Quality {
        #[serde(default)]
        start_fraction: f64,
        #[serde(default = "default_half")]
        length_fraction: f64,
    },
    SweepLength {
        #[serde(default)]
        start_fraction: f64,
        /// Defaults to twenty values uniform in `[0.01, 1]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length_fractions: Option<Vec<f64>>,
    },
    Place {
        #[serde(default = "default_half")]
        length_fraction: f64,
        #[serde(default = "default_grid_points")]
        grid_points: usize,
    },
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Solve { .. } => "solve",
            TaskSpec::Quality { .. } => "quality",
            TaskSpec::SweepLength { .. } => "sweep_length",
            TaskSpec::Place { .. } => "place",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default = "default_true")]
    pub svg: bool,
    #[serde(default = "default_true")]
    pub summary: bool,
    /// Also write gramians and the grasp map of the segment.
    #[serde(default)]
    pub dump_matrices: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            csv: true,
            svg: true,
            summary: true,
            dump_matrices: false,
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> std::result::Result<Scenario, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// The normalized scenario as a config file of dotted keys.
    pub fn to_config_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("scenario serializes");
        let mut out = String::new();
        flatten_into(&mut out, "", &value);
        out
    }

    /// All constraint violations, empty when the scenario is runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name} = {v} must be positive"));
            }
        };
        match &self.object {
            ObjectSpec::Circle { radius, .. } => positive("object.radius", *radius),
            ObjectSpec::Ellipse { a, b, .. } => {
                positive("object.a", *a);
                positive("object.b", *b);
            }
            ObjectSpec::Fourier { base_radius, .. } => positive("object.base_radius", *base_radius),
        }
        positive("solver.chi", self.solver.chi);
        positive("solver.eta", self.solver.eta);
        positive("search.simplex_tol", self.search.simplex_tol);
        positive("search.angle_tol", self.search.angle_tol);
        positive(
            "search.torque_length_scale",
            self.search.torque_length_scale,
        );
        if let Some(t) = self.solver.tol_stat {
            positive("solver.tol_stat", t);
        }

        if let ObjectSpec::Ellipse { a, b, .. } = &self.object {
            if a < b {
                errs.push(format!("object.a = {a} must be at least object.b = {b}"));
            }
        }
        if let ObjectSpec::Fourier { coefficients, .. } = &self.object {
            for c in coefficients {
                if c[0].fract() != 0.0 || c[0] < 2.0 {
                    errs.push(format!(
                        "object.coefficients mode {} must be an integer >= 2",
                        c[0]
                    ));
                }
            }
            let total: f64 = coefficients.iter().map(|c| c[1].abs()).sum();
            if total >= 1.0 {
                errs.push(format!(
                    "object.coefficients amplitudes sum to {total}, must be below 1"
                ));
            }
        }
        if self.object.samples() < MIN_SAMPLES {
            errs.push(format!("object.samples must be at least {MIN_SAMPLES}"));
        }
        if !(self.cone.mu.is_finite() && self.cone.mu >= 0.0) {
            errs.push(format!("cone.mu = {} must be nonnegative", self.cone.mu));
        }
        if self.solver.max_iters == 0 {
            errs.push("solver.max_iters must be positive".into());
        }
        if self.search.starts == 0 {
            errs.push("search.starts must be positive".into());
        }
        if self.search.max_evals < 3 {
            errs.push("search.max_evals must be at least 3".into());
        }

        let start_ok = |f: f64| (0.0..1.0).contains(&f);
        let length_ok = |f: f64| f > 0.0 && f <= 1.0;
        match &self.task {
            TaskSpec::Solve {
                wrench,
                start_fraction,
                length_fraction,
            } => {
                if wrench.iter().any(|x| !x.is_finite()) {
                    errs.push("task.wrench must be finite".into());
                }
                if !start_ok(*start_fraction) {
                    errs.push("task.start_fraction must lie in [0, 1)".into());
                }
                if !length_ok(*length_fraction) {
                    errs.push("task.length_fraction must lie in (0, 1]".into());
                }
            }
            TaskSpec::Quality {
                start_fraction,
                length_fraction,
            } => {
                if !start_ok(*start_fraction) {
                    errs.push("task.start_fraction must lie in [0, 1)".into());
                }
                if !length_ok(*length_fraction) {
                    errs.push("task.length_fraction must lie in (0, 1]".into());
                }
            }
            TaskSpec::SweepLength {
                start_fraction,
                length_fractions,
            } => {
                if !start_ok(*start_fraction) {
                    errs.push("task.start_fraction must lie in [0, 1)".into());
                }
                if let Some(ls) = length_fractions {
                    if ls.is_empty() {
                        errs.push("task.length_fractions must not be empty".into());
                    }
                    if ls.iter().any(|&l| !length_ok(l)) {
                        errs.push("task.length_fractions must lie in (0, 1]".into());
                    }
                }
            }
            TaskSpec::Place {
                length_fraction,
                grid_points,
            } => {
                if !length_ok(*length_fraction) {
                    errs.push("task.length_fraction must lie in (0, 1]".into());
                }
                if *grid_points < 2 {
                    errs.push("task.grid_points must be at least 2".into());
                }
            }
        }
        errs
    }

    pub fn cone(&self) -> Result<FrictionCone> {
        FrictionCone::new(self.cone.mu)
    }

    pub fn quality_config(&self) -> QualityConfig {
        QualityConfig {
            chi: self.solver.chi,
            solver: self.solver.inner(self.search.inner_solver),
            starts: self.search.starts,
            simplex: SimplexOptions {
                ftol: self.search.simplex_tol,
                xtol: self.search.angle_tol,
                max_evals: self.search.max_evals,
                ..SimplexOptions::default()
            },
            torque_length_scale: self.search.torque_length_scale,
            ..QualityConfig::default()
        }
    }

    pub fn solve_wrench(&self) -> Option<Wrench> {
        match self.task {
            TaskSpec::Solve { wrench, .. } => Some(Wrench::new(wrench[0], wrench[1], wrench[2])),
            _ => None,
        }
    }
}
