//! Minimum-force continuum grasps of planar rigid objects.
//!
//! The statics of an object held by distributed contact along an arc of its
//! boundary form a linear system in which arclength plays the role of time
//! and the contact forces (in friction-cone coordinates) are the controls.
//! This crate builds that system and solves three nested problems on it:
//!
//! - [`ocp`]: the minimum-effort contact force profile resisting a given
//!   external wrench, by a projected forward-backward sweep or an exact
//!   costate Newton solve.
//! - [`quality`]: the continuum grasp quality, the reciprocal of the worst
//!   minimum effort over unit external wrenches.
//! - [`quality::maximize_quality_over_start`]: the grasp start that
//!   maximizes quality for a fixed grasp length.
//!
//! [`geometry`] provides arclength-sampled boundary curves and
//! [`graspmap`] the grasp maps, friction cones and gramians. [`cli`] holds
//! the scenario file format and the artifact writers behind the `grasp`
//! binary.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod graspmap;
pub mod ocp;
pub mod quality;

pub use error::{GraspError, Result};
pub use geometry::{BoundaryCurve, CurveSample, CurveSegment, FourierMode};
pub use graspmap::{FrictionCone, GramianKind, GraspMapSample, Wrench};
pub use ocp::{
    ControlProfile, ForwardBackwardConfig, NewtonConfig, OcpProblem, SolveReport, StepSize,
};
pub use quality::{InnerSolver, PlacementResult, QualityConfig, QualityResult};
