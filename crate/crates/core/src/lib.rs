//! Attention-guided grasp perception and planning.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`saliency`] computes a bottom-up saliency map from an RGB image
//!    (opponent colors, twin Gaussian pyramids, DoG contrast) and extracts
//!    regions of interest from it.
//! 2. [`detect`] scores the six grasp types inside a region from per-pixel
//!    probability maps, then localizes a grasp point by mean shift.
//! 3. [`scene`] supplies the synthetic world: analytic primitives, a pinhole
//!    camera, depth/RGB rendering and surface normals used to lift the grasp
//!    point to 3D.
//! 4. [`planner`] builds a pre-grasp from the detection, searches a local
//!    4-DoF neighbourhood and ranks feasible grasps by contact quality.
//!
//! [`experiment`] chains the stages end to end and runs the desk-suite
//! comparison against a random-sampling baseline.

// Parameter checks are written as `!(x > 0.0)` on purpose: NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detect;
pub mod error;
pub mod experiment;
pub mod imaging;
pub mod planner;
pub mod saliency;
pub mod scene;

pub use error::{Error, Result};
