//! Geometric and numerical core of reference-based 360° scene inpainting.
//!
//! * [`warpmask`] finds the region hidden behind a removed object in every
//!   view by warping per-view removal regions through incomplete depth.
//! * [`agdd`] aligns a diffusion depth prior to incomplete depth with an
//!   adaptive Huber guidance loop.
//! * [`ddim`] holds SDEdit scheduling and deterministic DDIM inversion.
//! * [`unproject`] lifts the aligned reference depth into colored points.
//! * [`synth`] renders analytic box/sphere/plane scenes that serve as ground truth.
//! * [`metrics`] and [`pipeline`] cover evaluation and the staged CLI workflow.

pub mod agdd;
pub mod camera;
pub mod config;
pub mod ddim;
pub mod diffusion;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod synth;
pub mod unproject;
pub mod warpmask;

pub use camera::{project_point, relative_transform, unproject_pixel, CameraIntrinsics, Pose, Projection, View};
pub use error::{Error, Result};
pub use grid::{BinaryMask, DepthMap, Field, Grid, RgbImage};
