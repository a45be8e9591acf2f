//! Minimum-effort continuum grasp as a free-endpoint optimal control problem.
//!
//! The wrench accumulated along the grasp obeys `dw/ds = B(s) u(s)`,
//! `w(0) = 0`, with cone coordinates `u >= 0`. For an external wrench `w_e`
//! we minimize
//!
//! ```text
//! J(u) = 1/2 int |u|^2 ds + chi/2 |w(L) + w_e|^2
//! ```
//!
//! The state does not enter the dynamics, so the costate is the constant
//! `p = -chi (w(L) + w_e)` and the optimal control is `u = max(B^T p, 0)`.
//! Every integral uses the composite trapezoid rule on the segment grid, and
//! the discrete gradient uses the same weights, so the discrete optimality
//! conditions are exactly those of the discretized cost.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};

use crate::error::{GraspError, Result};
use crate::geometry::{fmt_num, trapezoid_weights, CurveSegment};
use crate::graspmap::{input_matrices, FrictionCone, Wrench};

/// Default fixed step of the forward-backward sweep.
pub const DEFAULT_ETA: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 200_000;
/// Consecutive cost increases that count as divergence.
pub const DIVERGENCE_WINDOW: usize = 50;
const INTERIOR_EPS: f64 = 1e-9;

/// Cone coordinates `u(s_j) >= 0` on the segment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProfile {
    values: Vec<Vector2<f64>>,
}

impl ControlProfile {
    pub fn new(values: Vec<Vector2<f64>>) -> Result<Self> {
        if let Some(v) = values
            .iter()
            .find(|v| !(v.x >= 0.0 && v.y >= 0.0 && v.x.is_finite() && v.y.is_finite()))
        {
            return Err(GraspError::InvalidInput(format!(
                "control ({}, {}) is not finite and nonnegative",
                v.x, v.y
            )));
        }
        Ok(ControlProfile { values })
    }

    pub fn zeros(len: usize) -> Self {
        ControlProfile {
            values: vec![Vector2::zeros(); len],
        }
    }

    pub fn values(&self) -> &[Vector2<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().map(|v| v.max()).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.min())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Which algorithm produced a [`SolveReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    ForwardBackward,
    CostateNewton,
}

impl SolverMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SolverMethod::ForwardBackward => "forward_backward",
            SolverMethod::CostateNewton => "costate_newton",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub control: ControlProfile,
    /// Local contact forces `f = V u` as `(f_t, f_n)`.
    pub forces: Vec<Vector2<f64>>,
    pub terminal_wrench: Wrench,
    pub costate: Vector3<f64>,
    pub cost: f64,
    pub stationarity_residual: f64,
    pub tolerance: f64,
    /// `|w_L + w_e|`; large values mean `-w_e` was not reachable.
    pub residual_wrench_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `min u > 1e-9 max u`: the closed-form interior cost applies.
    pub interior: bool,
    pub method: SolverMethod,
}

impl SolveReport {
    /// CSV with columns `s,u1,u2,f_t,f_n,mu_fn_bound`; `s` is measured from
    /// the grasp start.
    pub fn write_force_csv<W: std::io::Write>(
        &self,
        out: W,
        step: f64,
        mu: f64,
    ) -> std::io::Result<()> {
        let mut wtr = csv::WriterBuilder::new().from_writer(out);
        wtr.write_record(["s", "u1", "u2", "f_t", "f_n", "mu_fn_bound"])?;
        for (j, (u, f)) in self.control.values().iter().zip(&self.forces).enumerate() {
            wtr.write_record(&[
                fmt_num(j as f64 * step),
                fmt_num(u.x),
                fmt_num(u.y),
                fmt_num(f.x),
                fmt_num(f.y),
                fmt_num(mu * f.y),
            ])?;
        }
        wtr.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `1 / (1 + chi * lambda_max(W_hat))`, the largest step that keeps the
    /// linearized sweep monotone.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardBackwardConfig {
    pub step: StepSize,
    pub max_iters: usize,
    /// Stationarity tolerance; `None` means `1e-6 * chi * max(1, |w_e|)`.
    pub tol_stat: Option<f64>,
    /// Halve the step whenever an update raises the cost.
    pub backtracking: bool,
}

impl Default for ForwardBackwardConfig {
    fn default() -> Self {
        ForwardBackwardConfig {
            step: StepSize::Fixed(DEFAULT_ETA),
            max_iters: DEFAULT_MAX_ITERS,
            tol_stat: None,
            backtracking: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub max_iters: usize,
    /// Stationarity tolerance; `None` means `1e-10 * chi * max(1, |w_e|)`.
    pub tol_stat: Option<f64>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iters: 100,
            tol_stat: None,
        }
    }
}

/// Interior-case optimum: `J* = chi/2 w_e^T (I + chi W_hat)^-1 w_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub cost: f64,
    pub costate: Vector3<f64>,
    pub terminal_wrench: Wrench,
}

#[derive(Debug, Clone)]
pub struct OcpProblem {
    inputs: Vec<Matrix3x2<f64>>,
    weights: Vec<f64>,
    step: f64,
    rays: Matrix2<f64>,
    external: Vector3<f64>,
    chi: f64,
}

impl OcpProblem {
    pub fn new(
        segment: &CurveSegment,
        cone: &FrictionCone,
        external: Wrench,
        chi: f64,
    ) -> Result<Self> {
        Self::from_input_matrices(
            input_matrices(segment, cone),
            segment.step(),
            cone.rays(),
            external,
            chi,
        )
    }

    /// Problem on an arbitrary uniform grid of input matrices `B(s_j)`.
    /// `rays` maps cone coordinates to local forces for reporting.
    pub fn from_input_matrices(
        inputs: Vec<Matrix3x2<f64>>,
        step: f64,
        rays: Matrix2<f64>,
        external: Wrench,
        chi: f64,
    ) -> Result<Self> {
        if !(chi.is_finite() && chi > 0.0) {
            return Err(GraspError::param("chi", format!("{chi} must be positive")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(GraspError::param(
                "step",
                format!("{step} must be positive"),
            ));
        }
        if inputs.len() < 2 {
            return Err(GraspError::InvalidInput(
                "the grasp grid needs at least two samples".into(),
            ));
        }
        if !external.is_finite() {
            return Err(GraspError::param("external_wrench", "must be finite"));
        }
        let weights = trapezoid_weights(inputs.len(), step);
        Ok(OcpProblem {
            inputs,
            weights,
            step,
            rays,
            external: external.as_vector(),
            chi,
        })
    }

    pub fn set_external_wrench(&mut self, external: Wrench) -> Result<()> {
        if !external.is_finite() {
            return Err(GraspError::param("external_wrench", "must be finite"));
        }
        self.external = external.as_vector();
        Ok(())
    }

    pub fn external_wrench(&self) -> Wrench {
        self.external.into()
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn grid_len(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[Matrix3x2<f64>] {
        &self.inputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `W_hat = int B B^T ds`.
    pub fn cone_gramian(&self) -> Matrix3<f64> {
        self.inputs
            .iter()
            .zip(&self.weights)
            .fold(Matrix3::zeros(), |acc, (b, c)| acc + b * b.transpose() * *c)
    }

    fn terminal(&self, u: &[Vector2<f64>]) -> Vector3<f64> {
        assert_eq!(
            u.len(),
            self.inputs.len(),
            "control is not on the problem grid"
        );
        // Neumaier summation: the stationarity residual scales this sum by chi.
        let mut sum = Vector3::<f64>::zeros();
        let mut comp = Vector3::<f64>::zeros();
        for ((b, u), c) in self.inputs.iter().zip(u).zip(&self.weights) {
            let term = b * u * *c;
            for i in 0..3 {
                let t = sum[i] + term[i];
                comp[i] += if sum[i].abs() >= term[i].abs() {
                    (sum[i] - t) + term[i]
                } else {
                    (term[i] - t) + sum[i]
                };
                sum[i] = t;
            }
        }
        sum + comp
    }

    fn cost_of(&self, u: &[Vector2<f64>]) -> f64 {
        let wl = self.terminal(u);
        self.cost_with_terminal(u, &wl)
    }

    fn cost_with_terminal(&self, u: &[Vector2<f64>], wl: &Vector3<f64>) -> f64 {
        let effort: f64 = u
            .iter()
            .zip(&self.weights)
            .map(|(u, c)| c * u.norm_squared())
            .sum();
        0.5 * effort + 0.5 * self.chi * (wl + self.external).norm_squared()
    }

    /// Costate from the transversality condition, `p = -chi (w_L + w_e)`.
    pub fn costate(&self, terminal: &Vector3<f64>) -> Vector3<f64> {
        -(terminal + self.external) * self.chi
    }

    /// Wrench trajectory `w(s_j)` by cumulative trapezoid integration from
    /// `w(0) = 0`, and its endpoint `w_L`.
    pub fn integrate_state(&self, control: &ControlProfile) -> (Vec<Wrench>, Wrench) {
        let u = control.values();
        assert_eq!(
            u.len(),
            self.inputs.len(),
            "control is not on the problem grid"
        );
        let rates: Vec<Vector3<f64>> = self.inputs.iter().zip(u).map(|(b, u)| b * u).collect();
        let mut w = Vector3::zeros();
        let mut trajectory = Vec::with_capacity(u.len());
        trajectory.push(Wrench::ZERO);
        for r in rates.windows(2) {
            w += (r[0] + r[1]) * (0.5 * self.step);
            trajectory.push(w.into());
        }
        (trajectory, w.into())
    }

    pub fn cost(&self, control: &ControlProfile) -> f64 {
        self.cost_of(control.values())
    }

    /// `max_{j,i} |u_i(s_j) - max((B^T p)_i, 0)|` with `p` from the
    /// transversality condition.
    pub fn stationarity_residual(&self, control: &ControlProfile) -> f64 {
        let p = self.costate(&self.terminal(control.values()));
        self.residual_for(control.values(), &p)
    }

    fn residual_for(&self, u: &[Vector2<f64>], p: &Vector3<f64>) -> f64 {
        self.inputs
            .iter()
            .zip(u)
            .map(|(b, u)| {
                let z = b.tr_mul(p);
                (u.x - z.x.max(0.0)).abs().max((u.y - z.y.max(0.0)).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Gradient of the discrete cost, `c_j (u_j - B_j^T p)`.
    pub fn gradient(&self, control: &ControlProfile) -> Vec<Vector2<f64>> {
        let u = control.values();
        let p = self.costate(&self.terminal(u));
        self.inputs
            .iter()
            .zip(u)
            .zip(&self.weights)
            .map(|((b, u), c)| (u - b.tr_mul(&p)) * *c)
            .collect()
    }

    /// Largest relative discrepancy between [`Self::gradient`] and central
    /// differences of [`Self::cost`] with step `h_fd`. The control must stay
    /// nonnegative under the perturbation.
    pub fn gradient_check(&self, control: &ControlProfile, h_fd: f64) -> Result<f64> {
        if control.len() != self.inputs.len() {
            return Err(GraspError::InvalidInput(
                "control is not on the problem grid".into(),
            ));
        }
        if !(h_fd.is_finite() && h_fd > 0.0) || control.min() <= h_fd {
            return Err(GraspError::InvalidInput(format!(
                "control must exceed the difference step {h_fd} everywhere"
            )));
        }
        let analytic = self.gradient(control);
        let scale = analytic.iter().map(|g| g.amax()).fold(0.0, f64::max);
        let mut u = control.values().to_vec();
        let mut worst: f64 = 0.0;
        for j in 0..u.len() {
            for i in 0..2 {
                let orig = u[j][i];
                u[j][i] = orig + h_fd;
                let up = self.cost_of(&u);
                u[j][i] = orig - h_fd;
                let down = self.cost_of(&u);
                u[j][i] = orig;
                let numeric = (up - down) / (2.0 * h_fd);
                let a = analytic[j][i];
                let denom = a
                    .abs()
                    .max(numeric.abs())
                    .max(1e-8 * scale)
                    .max(f64::MIN_POSITIVE);
                worst = worst.max((a - numeric).abs() / denom);
            }
        }
        Ok(worst)
    }

    /// Closed-form optimum valid when the solution is interior.
    pub fn closed_form(&self) -> ClosedForm {
        let w_hat = self.cone_gramian();
        let m = Matrix3::identity() + w_hat * self.chi;
        let chol = m.cholesky().expect("I + chi W_hat is positive definite");
        let y = chol.solve(&self.external);
        let costate = -y * self.chi;
        ClosedForm {
            cost: 0.5 * self.chi * self.external.dot(&y),
            costate,
            terminal_wrench: (w_hat * costate).into(),
        }
    }

    fn default_tolerance(&self, factor: f64) -> f64 {
        factor * self.chi * self.external.norm().max(1.0)
    }

    fn report(
        &self,
        u: Vec<Vector2<f64>>,
        tolerance: f64,
        iterations: usize,
        method: SolverMethod,
    ) -> SolveReport {
        let wl = self.terminal(&u);
        let p = self.costate(&wl);
        let rho = self.residual_for(&u, &p);
        let cost = self.cost_with_terminal(&u, &wl);
        let control = ControlProfile { values: u };
        let umax = control.max();
        let interior = umax > 0.0 && control.min() > INTERIOR_EPS * umax;
        let forces = control.values().iter().map(|u| self.rays * u).collect();
        SolveReport {
            forces,
            terminal_wrench: wl.into(),
            costate: p,
            cost,
            stationarity_residual: rho,
            tolerance,
            residual_wrench_norm: (wl + self.external).norm(),
            iterations,
            converged: rho <= tolerance,
            interior,
            method,
            control,
        }
    }

    fn step_size(&self, step: StepSize) -> Result<f64> {
        let eta = match step {
            StepSize::Fixed(eta) => eta,
            StepSize::Auto => {
                let lmax = self.cone_gramian().symmetric_eigenvalues().max();
                1.0 / (1.0 + self.chi * lmax.max(0.0))
            }
        };
        if eta.is_finite() && eta > 0.0 {
            Ok(eta)
        } else {
            Err(GraspError::param("eta", format!("{eta} must be positive")))
        }
    }

    /// Projected forward-backward sweep from `u = 0`:
    ///
    /// ```text
    /// w_L = int B u ds,  p = -chi (w_L + w_e),  u <- max(u + eta (B^T p - u), 0)
    /// ```
    ///
    /// Stops when the stationarity residual drops to the tolerance or after
    /// `max_iters` updates (reported with `converged = false`). Fails with a
    /// step-size error when the cost rises for [`DIVERGENCE_WINDOW`]
    /// consecutive iterations.
    pub fn solve_forward_backward(&self, config: &ForwardBackwardConfig) -> Result<SolveReport> {
        let mut eta = self.step_size(config.step)?;
        let tol = config
            .tol_stat
            .unwrap_or_else(|| self.default_tolerance(1e-6));
        let n = self.inputs.len();
        let mut u = vec![Vector2::zeros(); n];
        let mut z = vec![Vector2::zeros(); n];
        let mut trial = vec![Vector2::zeros(); n];
        let mut wl = Vector3::zeros();
        let mut cost = self.cost_with_terminal(&u, &wl);
        let mut rising = 0;
        let mut iterations = 0;

        loop {
            let p = self.costate(&wl);
            let mut rho: f64 = 0.0;
            for ((zj, b), uj) in z.iter_mut().zip(&self.inputs).zip(&u) {
                *zj = b.tr_mul(&p);
                rho = rho
                    .max((uj.x - zj.x.max(0.0)).abs())
                    .max((uj.y - zj.y.max(0.0)).abs());
            }
            if rho <= tol || iterations >= config.max_iters {
                break;
            }

            let mut halvings = 0;
            let (next_wl, next_cost) = loop {
                for ((t, uj), zj) in trial.iter_mut().zip(&u).zip(&z) {
                    *t = (uj + (zj - uj) * eta).map(|x| x.max(0.0));
                }
                let twl = self.terminal(&trial);
                let tcost = self.cost_with_terminal(&trial, &twl);
                if config.backtracking && tcost > cost && halvings < 60 {
                    eta *= 0.5;
                    halvings += 1;
                    continue;
                }
                break (twl, tcost);
            };
            std::mem::swap(&mut u, &mut trial);
            iterations += 1;

            if next_cost > cost {
                rising += 1;
                if rising >= DIVERGENCE_WINDOW {
                    return Err(GraspError::StepSize {
                        eta,
                        iterations,
                        window: DIVERGENCE_WINDOW,
                    });
                }
            } else {
                rising = 0;
            }
            wl = next_wl;
            cost = next_cost;
        }
        Ok(self.report(u, tol, iterations, SolverMethod::ForwardBackward))
    }

    /// Exact solve of the same discrete problem through its costate.
    ///
    /// The optimum satisfies `p = -chi (sum_j c_j B_j max(B_j^T p, 0) + w_e)`,
    /// the stationarity condition of the strongly convex piecewise quadratic
    ///
    /// ```text
    /// phi(p) = |p|^2 / (2 chi) + 1/2 sum_j c_j |max(B_j^T p, 0)|^2 + p^T w_e
    /// ```
    ///
    /// which is minimized by semismooth Newton with an Armijo line search,
    /// starting from the interior closed form.
    pub fn solve_costate_newton(&self, config: &NewtonConfig) -> Result<SolveReport> {
        let tol = config
            .tol_stat
            .unwrap_or_else(|| self.default_tolerance(1e-10));
        let inv_chi = 1.0 / self.chi;
        let phi = |p: &Vector3<f64>| -> f64 {
            let mut v = 0.5 * inv_chi * p.norm_squared() + p.dot(&self.external);
            for (b, c) in self.inputs.iter().zip(&self.weights) {
                let z = b.tr_mul(p).map(|x| x.max(0.0));
                v += 0.5 * c * z.norm_squared();
            }
            v
        };
        let controls = |p: &Vector3<f64>| -> Vec<Vector2<f64>> {
            self.inputs
                .iter()
                .map(|b| b.tr_mul(p).map(|x| x.max(0.0)))
                .collect()
        };

        let gradient = |p: &Vector3<f64>, u: &[Vector2<f64>]| -> Vector3<f64> {
            p * inv_chi + self.terminal(u) + self.external
        };

        let mut p = self.closed_form().costate;
        let mut iterations = 0;
        let mut u = controls(&p);
        while iterations < config.max_iters {
            let wl = self.terminal(&u);
            let rho = self.residual_for(&u, &self.costate(&wl));
            log::trace!("newton {iterations}: residual {rho:e}, phi {:e}", phi(&p));
            if rho <= tol {
                break;
            }
            let grad = p * inv_chi + wl + self.external;
            let mut hess = Matrix3::identity() * inv_chi;
            for (b, c) in self.inputs.iter().zip(&self.weights) {
                let z = b.tr_mul(&p);
                for i in 0..2 {
                    if z[i] > 0.0 {
                        let col = b.column(i);
                        hess += col * col.transpose() * *c;
                    }
                }
            }
            let dp = match hess.cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => -grad * self.chi,
            };
            // Close to the optimum the decrease in phi drops below its
            // rounding error, so a step that shrinks the gradient is also
            // accepted.
            let slope = grad.dot(&dp);
            let base = phi(&p);
            let gnorm = grad.norm();
            let mut t = 1.0;
            let accepted = loop {
                let next = p + dp * t;
                let u_next = controls(&next);
                if phi(&next) <= base + 1e-4 * t * slope
                    || gradient(&next, &u_next).norm() <= (1.0 - 1e-4 * t) * gnorm
                {
                    break Some((next, u_next));
                }
                t *= 0.5;
                if t < 1e-12 {
                    break None;
                }
            };
            iterations += 1;
            match accepted {
                Some((next, u_next)) if next != p => {
                    p = next;
                    u = u_next;
                }
                _ => break,
            }
        }
        Ok(self.report(u, tol, iterations, SolverMethod::CostateNewton))
    }
}
