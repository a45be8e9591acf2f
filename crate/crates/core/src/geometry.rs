//! Closed planar boundary curves sampled on a uniform arclength grid.
//!
//! A [`BoundaryCurve`] stores `N + 1` samples at `s_j = j * h`, `h = L0 / N`;
//! the last sample repeats the first with the frame angle advanced by one
//! full turn. Curves are traversed counterclockwise so that the normal
//! `n = (-sin phi, cos phi)` points into the object.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use nalgebra::Vector2;

use crate::error::{GraspError, Result};

/// Smallest accepted sample count for any constructor.
pub const MIN_SAMPLES: usize = 8;

/// One grid point of a boundary curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    /// Arclength from the curve origin.
    pub s: f64,
    pub position: Vector2<f64>,
    /// Tangent angle, unwrapped along the curve.
    pub frame_angle: f64,
    pub curvature: f64,
}

impl CurveSample {
    pub fn tangent(&self) -> Vector2<f64> {
        Vector2::new(self.frame_angle.cos(), self.frame_angle.sin())
    }

    /// Inward unit normal for a counterclockwise curve.
    pub fn normal(&self) -> Vector2<f64> {
        Vector2::new(-self.frame_angle.sin(), self.frame_angle.cos())
    }

    /// Position rotated counterclockwise by a quarter turn.
    pub fn perp(&self) -> Vector2<f64> {
        Vector2::new(-self.position.y, self.position.x)
    }
}

/// A single cosine mode of a radially perturbed circle,
/// `amplitude * cos(mode * theta + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub mode: u32,
    pub amplitude: f64,
    pub phase: f64,
}

impl FourierMode {
    pub const fn new(mode: u32, amplitude: f64, phase: f64) -> Self {
        FourierMode {
            mode,
            amplitude,
            phase,
        }
    }
}

/// Coefficients of the reference deformed circle used throughout the tests
/// and bundled scenarios.
pub const DC1_MODES: [FourierMode; 4] = [
    FourierMode::new(2, 0.08, 0.7),
    FourierMode::new(3, 0.06, 1.9),
    FourierMode::new(4, 0.04, 3.1),
    FourierMode::new(5, 0.03, 4.3),
];

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    samples: Vec<CurveSample>,
    total_length: f64,
    grid_step: f64,
}

impl BoundaryCurve {
    pub fn circle(radius: f64, samples: usize) -> Result<Self> {
        check_positive("radius", radius)?;
        check_samples(samples)?;
        let total_length = TAU * radius;
        let h = total_length / samples as f64;
        let pts = (0..=samples)
            .map(|j| {
                let s = j as f64 * h;
                let theta = j as f64 * TAU / samples as f64;
                CurveSample {
                    s,
                    position: Vector2::new(radius * theta.cos(), radius * theta.sin()),
                    frame_angle: theta + FRAC_PI_2,
                    curvature: 1.0 / radius,
                }
            })
            .collect();
        Ok(BoundaryCurve {
            samples: pts,
            total_length,
            grid_step: h,
        })
    }

    /// Ellipse `(a cos t, b sin t)` with `a >= b > 0`, starting at `(a, 0)`.
    pub fn ellipse(a: f64, b: f64, samples: usize) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("b", b)?;
        if a < b {
            return Err(GraspError::param(
                "a",
                format!("semi-major axis {a} is smaller than semi-minor axis {b}"),
            ));
        }
        check_samples(samples)?;
        Ok(sample_by_arclength(
            &Ellipse { a, b },
            samples,
            Vector2::zeros(),
        ))
    }

    /// Polar curve `r(t) = base_radius * (1 + sum a_k cos(k t + phase_k))`,
    /// shifted so that the centroid of the enclosed area is at the origin.
    ///
    /// Every mode must have `k >= 2` and the amplitudes must satisfy
    /// `sum |a_k| < 1`, which keeps `r > 0` and the curve simple.
    pub fn fourier_perturbed_circle(
        base_radius: f64,
        modes: &[FourierMode],
        samples: usize,
    ) -> Result<Self> {
        check_positive("base_radius", base_radius)?;
        check_samples(samples)?;
        for m in modes {
            if m.mode < 2 {
                return Err(GraspError::param(
                    "coefficients",
                    format!("mode {} must be at least 2", m.mode),
                ));
            }
            if !m.amplitude.is_finite() || !m.phase.is_finite() {
                return Err(GraspError::param("coefficients", "non-finite coefficient"));
            }
        }
        let total: f64 = modes.iter().map(|m| m.amplitude.abs()).sum();
        if total >= 1.0 {
            return Err(GraspError::param(
                "coefficients",
                format!("sum of |amplitude| is {total}, must be below 1"),
            ));
        }
        let shape = PolarFourier {
            radius: base_radius,
            modes: modes.to_vec(),
        };
        let centroid = shape.area_centroid();
        Ok(sample_by_arclength(&shape, samples, -centroid))
    }

    /// The reference deformed circle with unit base radius.
    pub fn deformed_circle_dc1(samples: usize) -> Result<Self> {
        Self::fourier_perturbed_circle(1.0, &DC1_MODES, samples)
    }

    /// All `N + 1` samples, the last one closing the loop.
    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    /// Number of grid intervals `N`.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    /// The whole boundary as a segment starting at `s = 0`.
    pub fn whole(&self) -> CurveSegment {
        CurveSegment {
            samples: self.samples.clone(),
            step: self.grid_step,
            start: 0.0,
            start_index: 0,
            boundary_length: self.total_length,
        }
    }

    /// The contact segment `[s0, s0 + length]` with periodic wraparound.
    ///
    /// Both endpoints snap to the nearest grid samples; the segment reports
    /// the snapped start and length.
    pub fn subcurve(&self, s0: f64, length: f64) -> Result<CurveSegment> {
        if !s0.is_finite() {
            return Err(GraspError::param("s0", "must be finite"));
        }
        if !(length > 0.0 && length <= self.total_length * (1.0 + 1e-12)) {
            return Err(GraspError::param(
                "length",
                format!("{length} is outside (0, {}]", self.total_length),
            ));
        }
        let n = self.intervals();
        let h = self.grid_step;
        let start_index = ((s0.rem_euclid(self.total_length) / h).round() as usize) % n;
        let steps = ((length / h).round() as usize).min(n);
        if steps == 0 {
            return Err(GraspError::param(
                "length",
                format!("{length} is shorter than half a grid step ({h})"),
            ));
        }
        let samples = (start_index..=start_index + steps)
            .map(|i| {
                if i <= n {
                    self.samples[i]
                } else {
                    let mut wrapped = self.samples[i - n];
                    wrapped.frame_angle +=
                        self.samples[n].frame_angle - self.samples[0].frame_angle;
                    wrapped
                }
            })
            .collect();
        Ok(CurveSegment {
            samples,
            step: h,
            start: start_index as f64 * h,
            start_index,
            boundary_length: self.total_length,
        })
    }

    /// Distance between the first and last sample.
    pub fn closure_gap(&self) -> f64 {
        (self.samples[self.intervals()].position - self.samples[0].position).norm()
    }

    /// Largest `| |gamma_{j+1} - gamma_j| / h - 1 |` over the grid.
    pub fn max_speed_deviation(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| ((w[1].position - w[0].position).norm() / self.grid_step - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest mismatch between the finite-difference turning rate
    /// `(phi_{j+1} - phi_j) / h` and the sampled curvature, using the
    /// interval average of the curvature (trapezoid form of `dphi/ds = kappa`).
    pub fn max_curvature_mismatch(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let rate = (w[1].frame_angle - w[0].frame_angle) / self.grid_step;
                (rate - 0.5 * (w[0].curvature + w[1].curvature)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest angle between the sampled tangent and the chord direction
    /// at the midpoint of each interval.
    pub fn max_frame_mismatch(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let chord = w[1].position - w[0].position;
                let mid = 0.5 * (w[0].frame_angle + w[1].frame_angle);
                wrap_angle(chord.y.atan2(chord.x) - mid).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Shoelace area over the samples; positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .samples
            .windows(2)
            .map(|w| w[0].position.x * w[1].position.y - w[1].position.x * w[0].position.y)
            .sum::<f64>()
    }

    /// Area centroid of the sampled polygon.
    pub fn area_centroid(&self) -> Vector2<f64> {
        let mut c = Vector2::zeros();
        for w in self.samples.windows(2) {
            let cross = w[0].position.x * w[1].position.y - w[1].position.x * w[0].position.y;
            c += (w[0].position + w[1].position) * cross;
        }
        c / (6.0 * self.signed_area())
    }

    /// CSV with header `s,x,y,phi,kappa`, one row per sample.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut wtr = csv::WriterBuilder::new().from_writer(out);
        wtr.write_record(["s", "x", "y", "phi", "kappa"])?;
        for p in &self.samples {
            wtr.write_record(&[
                fmt_num(p.s),
                fmt_num(p.position.x),
                fmt_num(p.position.y),
                fmt_num(p.frame_angle),
                fmt_num(p.curvature),
            ])?;
        }
        wtr.flush()
    }
}

/// A contiguous run of boundary samples: the grasp interval.
#[derive(Debug, Clone)]
pub struct CurveSegment {
    samples: Vec<CurveSample>,
    step: f64,
    start: f64,
    start_index: usize,
    boundary_length: f64,
}

impl CurveSegment {
    /// Segment samples in traversal order. `s` keeps the parent arclength.
    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Start arclength on the parent curve (after snapping).
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    /// Length of the segment, `(len - 1) * h`.
    pub fn length(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.step
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_length
    }

    /// Arclength of sample `j` measured from the segment start.
    pub fn local_s(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// Composite trapezoid weights on the segment grid.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.samples.len(), self.step)
    }

    /// Sample at local arclength `s`, linearly interpolated between grid
    /// points.
    pub fn sample_at(&self, s: f64) -> Result<CurveSample> {
        let length = self.length();
        let tol = 1e-9 * self.step;
        if !(s >= -tol && s <= length + tol) {
            return Err(GraspError::OutOfRange { s, length });
        }
        let x = (s / self.step).clamp(0.0, (self.samples.len() - 1) as f64);
        let j = (x.floor() as usize).min(self.samples.len() - 2);
        let t = x - j as f64;
        if t < 1e-9 {
            return Ok(self.samples[j]);
        }
        if t > 1.0 - 1e-9 {
            return Ok(self.samples[j + 1]);
        }
        let (a, b) = (&self.samples[j], &self.samples[j + 1]);
        Ok(CurveSample {
            s: a.s + t * self.step,
            position: a.position.lerp(&b.position, t),
            frame_angle: a.frame_angle + t * (b.frame_angle - a.frame_angle),
            curvature: a.curvature + t * (b.curvature - a.curvature),
        })
    }
}

pub(crate) fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x:.12e}")
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GraspError::param(name, format!("{v} must be positive")))
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        Err(GraspError::param(
            "samples",
            format!("{n} is below the minimum of {MIN_SAMPLES}"),
        ))
    } else {
        Ok(())
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// A closed curve on the parameter interval `[0, 2 pi]`.
trait Parametric {
    fn point(&self, t: f64) -> Vector2<f64>;
    fn velocity(&self, t: f64) -> Vector2<f64>;
    fn curvature(&self, t: f64) -> f64;

    fn speed(&self, t: f64) -> f64 {
        self.velocity(t).norm()
    }
}

struct Ellipse {
    a: f64,
    b: f64,
}

impl Parametric for Ellipse {
    fn point(&self, t: f64) -> Vector2<f64> {
        Vector2::new(self.a * t.cos(), self.b * t.sin())
    }

    fn velocity(&self, t: f64) -> Vector2<f64> {
        Vector2::new(-self.a * t.sin(), self.b * t.cos())
    }

    fn curvature(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        let q = self.a * self.a * s * s + self.b * self.b * c * c;
        self.a * self.b / q.powf(1.5)
    }
}

struct PolarFourier {
    radius: f64,
    modes: Vec<FourierMode>,
}

impl PolarFourier {
    /// r, r', r'' at `t`.
    fn radial(&self, t: f64) -> (f64, f64, f64) {
        let (mut r, mut dr, mut ddr) = (1.0, 0.0, 0.0);
        for m in &self.modes {
            let k = m.mode as f64;
            let (s, c) = (k * t + m.phase).sin_cos();
            r += m.amplitude * c;
            dr -= m.amplitude * k * s;
            ddr -= m.amplitude * k * k * c;
        }
        (self.radius * r, self.radius * dr, self.radius * ddr)
    }

    fn area_centroid(&self) -> Vector2<f64> {
        let kmax = self.modes.iter().map(|m| m.mode).max().unwrap_or(1) as usize;
        let n = 4096 * kmax;
        let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            let r = self.radial(t).0;
            area += 0.5 * r * r;
            cx += r * r * r * t.cos() / 3.0;
            cy += r * r * r * t.sin() / 3.0;
        }
        Vector2::new(cx / area, cy / area)
    }
}

impl Parametric for PolarFourier {
    fn point(&self, t: f64) -> Vector2<f64> {
        let r = self.radial(t).0;
        Vector2::new(r * t.cos(), r * t.sin())
    }

    fn velocity(&self, t: f64) -> Vector2<f64> {
        let (r, dr, _) = self.radial(t);
        let (s, c) = t.sin_cos();
        Vector2::new(dr * c - r * s, dr * s + r * c)
    }

    fn curvature(&self, t: f64) -> f64 {
        let (r, dr, ddr) = self.radial(t);
        (r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr).powf(1.5)
    }
}

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn arc_between(curve: &impl Parametric, t0: f64, t1: f64) -> f64 {
    let half = 0.5 * (t1 - t0);
    let mid = 0.5 * (t1 + t0);
    GAUSS5_NODES
        .iter()
        .zip(GAUSS5_WEIGHTS)
        .map(|(x, w)| w * curve.speed(mid + half * x))
        .sum::<f64>()
        * half
}

/// Resample a parametric closed curve at `n` uniform arclength steps.
///
/// Cumulative arclength comes from Simpson's rule on a fine parameter grid
/// (16x the sample count, at least 4096 intervals). The inverse `t(s)` is a
/// monotone cubic Hermite interpolant of that table, polished by two Newton
/// steps against a local Gauss-Legendre arclength.
fn sample_by_arclength(curve: &impl Parametric, n: usize, offset: Vector2<f64>) -> BoundaryCurve {
    let m = (16 * n).max(4096);
    let dt = TAU / m as f64;
    let ts: Vec<f64> = (0..=m).map(|k| k as f64 * dt).collect();
    let speeds: Vec<f64> = ts.iter().map(|&t| curve.speed(t)).collect();
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0);
    for k in 0..m {
        let mid = curve.speed(ts[k] + 0.5 * dt);
        let next = cumulative[k] + dt / 6.0 * (speeds[k] + 4.0 * mid + speeds[k + 1]);
        cumulative.push(next);
    }
    let total_length = cumulative[m];
    let h = total_length / n as f64;

    let invert = |target: f64| -> f64 {
        let k = cumulative
            .partition_point(|&s| s <= target)
            .saturating_sub(1)
            .min(m - 1);
        let (s0, s1) = (cumulative[k], cumulative[k + 1]);
        let ds = s1 - s0;
        let secant = dt / ds;
        let (mut d0, mut d1) = (1.0 / speeds[k], 1.0 / speeds[k + 1]);
        let (alpha, beta) = (d0 / secant, d1 / secant);
        let r2 = alpha * alpha + beta * beta;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            d0 = tau * alpha * secant;
            d1 = tau * beta * secant;
        }
        let x = (target - s0) / ds;
        let (x2, x3) = (x * x, x * x * x);
        let mut t = (2.0 * x3 - 3.0 * x2 + 1.0) * ts[k]
            + (x3 - 2.0 * x2 + x) * ds * d0
            + (-2.0 * x3 + 3.0 * x2) * ts[k + 1]
            + (x3 - x2) * ds * d1;
        for _ in 0..2 {
            let err = s0 + arc_between(curve, ts[k], t) - target;
            t -= err / curve.speed(t);
        }
        t
    };

    let mut samples: Vec<CurveSample> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let t = match j {
            0 => 0.0,
            j if j == n => TAU,
            _ => invert(j as f64 * h),
        };
        let v = curve.velocity(t);
        let raw = v.y.atan2(v.x);
        let frame_angle = match samples.last() {
            None => raw,
            Some(prev) => prev.frame_angle + wrap_angle(raw - prev.frame_angle),
        };
        samples.push(CurveSample {
            s: j as f64 * h,
            position: curve.point(t) + offset,
            frame_angle,
            curvature: curve.curvature(t),
        });
    }
    BoundaryCurve {
        samples,
        total_length,
        grid_step: h,
    }
}
