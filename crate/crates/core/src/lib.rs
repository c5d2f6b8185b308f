//! Differentiable view synthesis on synthetic scenes.
//!
//! The crate provides the pieces needed to pose novel-view reconstruction as a
//! direct optimization problem and to verify every derivative along the way:
//!
//! - [`geometry`]: pinhole camera model, SE(3) poses, disparity/depth mapping.
//! - [`image`]: image and scalar-map containers, bilinear sampling with
//!   analytic gradients, finite-difference image gradients, resizing, PPM/PFM I/O.
//! - [`warp`]: reverse warping of a source frame into a target view, with
//!   per-pixel Jacobians w.r.t. depth and pose parameters.
//! - [`loss`]: photometric (L1 + SSIM), edge-aware smoothness, auto-masking,
//!   and the multi-scale total objective, all with adjoints.
//! - [`tam`]: a small transformer encoder (embedding projection, multi-head
//!   attention, pre-norm layers) with a hand-written backward pass.
//! - [`diff`]: named parameter vectors, Adam, finite-difference gradient
//!   checking, and the optimization drivers built from the kernels above.
//! - [`synth`]: deterministic ray-cast renderer and trajectory generators that
//!   supply ground-truth images, depth, and poses as test oracles.
//! - [`eval`]: depth error metrics, median scaling, range-filtered evaluation,
//!   and absolute trajectory error.

pub mod diff;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod loss;
pub mod synth;
pub mod tam;
pub mod warp;

pub use error::{Error, Result};
