//! Grasp maps, friction cones and controllability gramians.
//!
//! The local grasp map `G(s) = [I2; perp(gamma)^T] R(phi)` takes a contact
//! force per unit length in the boundary frame `(f_t, f_n)` to the wrench
//! `(f_x, f_y, tau)` it exerts on the object. With the friction cone rays as
//! columns of `V`, `B(s) = G(s) V` maps nonnegative cone coordinates to
//! wrenches.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};

use crate::error::{GraspError, Result};
use crate::geometry::{fmt_num, BoundaryCurve, CurveSample, CurveSegment};

/// Coulomb friction cone `|f_t| <= mu f_n, f_n >= 0` described by its two
/// extreme rays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionCone {
    mu: f64,
    psi: f64,
    v1: Vector2<f64>,
    v2: Vector2<f64>,
}

impl FrictionCone {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(GraspError::param(
                "mu",
                format!("{mu} must be finite and nonnegative"),
            ));
        }
        if mu == 0.0 {
            log::warn!("frictionless cone: both rays coincide and B(s) has rank <= 1");
        }
        let psi = (1.0 / mu).atan();
        let (s, c) = psi.sin_cos();
        let c = if mu == 0.0 { 0.0 } else { c };
        Ok(FrictionCone {
            mu,
            psi,
            v1: Vector2::new(c, s),
            v2: Vector2::new(-c, s),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Angle between each extreme ray and the tangent, `atan(1 / mu)`.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn v1(&self) -> Vector2<f64> {
        self.v1
    }

    pub fn v2(&self) -> Vector2<f64> {
        self.v2
    }

    /// The ray matrix `V = [v1 v2]`.
    pub fn rays(&self) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.v1, self.v2])
    }

    /// Local force `(f_t, f_n)` from cone coordinates.
    pub fn force(&self, u: &Vector2<f64>) -> Vector2<f64> {
        self.v1 * u.x + self.v2 * u.y
    }

    /// Cone coordinates reproducing `f`, if the rays are independent.
    /// A negative component means `f` lies outside the cone.
    pub fn coordinates(&self, f: &Vector2<f64>) -> Option<Vector2<f64>> {
        self.rays().try_inverse().map(|inv| inv * f)
    }

    pub fn contains(&self, f: &Vector2<f64>, tol: f64) -> bool {
        f.y >= -tol && f.x.abs() <= self.mu * f.y + tol
    }
}

/// Planar wrench `(f_x, f_y, tau)`, torque about the object origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub tau: f64,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench {
        fx: 0.0,
        fy: 0.0,
        tau: 0.0,
    };

    pub fn new(fx: f64, fy: f64, tau: f64) -> Self {
        Wrench { fx, fy, tau }
    }

    /// Point on the unit sphere `(cos a, sin a cos b, sin a sin b)`.
    pub fn from_angles(alpha: f64, beta: f64) -> Self {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        Wrench::new(ca, sa * cb, sa * sb)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.fx, self.fy, self.tau)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn is_finite(&self) -> bool {
        self.fx.is_finite() && self.fy.is_finite() && self.tau.is_finite()
    }
}

impl From<Vector3<f64>> for Wrench {
    fn from(v: Vector3<f64>) -> Self {
        Wrench::new(v.x, v.y, v.z)
    }
}

impl fmt::Display for Wrench {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.fx, self.fy, self.tau)
    }
}

/// `G(s)` and `B(s) = G(s) V` at one arclength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspMapSample {
    pub s: f64,
    pub grasp: Matrix3x2<f64>,
    pub input: Matrix3x2<f64>,
}

/// Local grasp map at a boundary sample.
pub fn local_grasp_map(sample: &CurveSample) -> Matrix3x2<f64> {
    let (s, c) = sample.frame_angle.sin_cos();
    let r = Matrix2::new(c, -s, s, c);
    let torque = sample.perp().transpose() * r;
    Matrix3x2::new(
        r[(0, 0)],
        r[(0, 1)],
        r[(1, 0)],
        r[(1, 1)],
        torque[(0, 0)],
        torque[(0, 1)],
    )
}

/// Grasp map at local arclength `s` of the segment.
pub fn grasp_map_at(segment: &CurveSegment, s: f64, cone: &FrictionCone) -> Result<GraspMapSample> {
    let sample = segment.sample_at(s)?;
    let grasp = local_grasp_map(&sample);
    Ok(GraspMapSample {
        s,
        grasp,
        input: grasp * cone.rays(),
    })
}

/// `B(s_j)` at every segment sample.
pub fn input_matrices(segment: &CurveSegment, cone: &FrictionCone) -> Vec<Matrix3x2<f64>> {
    let v = cone.rays();
    segment
        .samples()
        .iter()
        .map(|p| local_grasp_map(p) * v)
        .collect()
}

/// Net wrench of a local force profile, `w_L = int G(s) f(s) ds`, by the
/// composite trapezoid rule on the segment grid.
pub fn total_wrench(segment: &CurveSegment, forces: &[Vector2<f64>]) -> Result<Wrench> {
    if forces.len() != segment.len() {
        return Err(GraspError::InvalidInput(format!(
            "force profile has {} samples, segment has {}",
            forces.len(),
            segment.len()
        )));
    }
    let w = segment
        .samples()
        .iter()
        .zip(forces)
        .zip(segment.weights())
        .fold(Vector3::zeros(), |acc, ((p, f), c)| {
            acc + local_grasp_map(p) * f * c
        });
    Ok(w.into())
}

/// Which input matrix a gramian integrates.
#[derive(Debug, Clone, Copy)]
pub enum GramianKind<'a> {
    /// `W = int G G^T ds`, unconstrained local forces.
    Force,
    /// `W_hat = int B B^T ds`, cone coordinates.
    Cone(&'a FrictionCone),
}

/// Controllability gramian over the segment, trapezoid rule.
pub fn controllability_gramian(segment: &CurveSegment, kind: GramianKind<'_>) -> Matrix3<f64> {
    let rays = match kind {
        GramianKind::Force => Matrix2::identity(),
        GramianKind::Cone(cone) => cone.rays(),
    };
    segment
        .samples()
        .iter()
        .zip(segment.weights())
        .fold(Matrix3::zeros(), |acc, (p, c)| {
            let b = local_grasp_map(p) * rays;
            acc + b * b.transpose() * c
        })
}

/// Boundary moments of a segment: length `L`, `gamma_bar = int gamma ds`
/// and `gamma_hat^2 = int |gamma|^2 ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMoments {
    pub length: f64,
    pub first: Vector2<f64>,
    pub second: f64,
}

impl SegmentMoments {
    pub fn of(segment: &CurveSegment) -> Self {
        let mut first = Vector2::zeros();
        let mut second = 0.0;
        let mut length = 0.0;
        for (p, c) in segment.samples().iter().zip(segment.weights()) {
            first += p.position * c;
            second += p.position.norm_squared() * c;
            length += c;
        }
        SegmentMoments {
            length,
            first,
            second,
        }
    }

    /// `det W = L (L gamma_hat^2 - |gamma_bar|^2)`.
    pub fn gramian_determinant(&self) -> f64 {
        self.length * (self.length * self.second - self.first.norm_squared())
    }

    /// `W` assembled from the moments.
    pub fn gramian(&self) -> Matrix3<f64> {
        let perp = Vector2::new(-self.first.y, self.first.x);
        Matrix3::new(
            self.length,
            0.0,
            perp.x,
            0.0,
            self.length,
            perp.y,
            perp.x,
            perp.y,
            self.second,
        )
    }
}

/// Classical point-contact grasp map `[G(s_1) ... G(s_n)]` for contacts at
/// boundary arclengths `s_k` in `[0, L0)`.
pub fn discrete_grasp_map(curve: &BoundaryCurve, contacts: &[f64]) -> Result<DMatrix<f64>> {
    if contacts.is_empty() {
        return Err(GraspError::InvalidInput("no contact points".into()));
    }
    let whole = curve.whole();
    let mut g = DMatrix::zeros(3, 2 * contacts.len());
    for (k, &s) in contacts.iter().enumerate() {
        if !(0.0..curve.total_length()).contains(&s) {
            return Err(GraspError::OutOfRange {
                s,
                length: curve.total_length(),
            });
        }
        let local = local_grasp_map(&whole.sample_at(s)?);
        g.view_mut((0, 2 * k), (3, 2)).copy_from(&local);
    }
    Ok(g)
}

/// Row-major CSV dump of a matrix, no header.
pub fn write_matrix_csv<W: Write>(out: W, m: &DMatrix<f64>) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for i in 0..m.nrows() {
        wtr.write_record((0..m.ncols()).map(|j| fmt_num(m[(i, j)])))?;
    }
    wtr.flush()
}
