//! Core library for building and grading geometry-grounded VQA over
//! equirectangular (ERP) panoramas.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`geom`]: exact transforms between ERP pixels, spherical coordinates,
//!   3D Cartesian points and cubemap faces, plus cubemap-to-ERP stitching.
//! - [`raster`]: minimal in-memory image planes shared by the geometry and
//!   scene layers (file IO lives in the companion CLI crate).
//! - [`scene`]: object extraction and 3D analytics over aligned
//!   RGB / depth / instance-segmentation bundles.
//! - [`qa`]: programmatic generation of five categories of QA pairs with
//!   physically derived, machine-checkable answers.
//! - [`reward`]: response parsing and the routed, ground-truth-anchored
//!   reward used for RL post-training.
//! - [`judge`]: the deterministic 0-10 scoring rubric and the text protocol
//!   for delegating open-ended judging to an external model.
//! - [`grpo`]: group-relative advantages, clipped surrogate / KL objective,
//!   and the two-stage curriculum sampler.
//!
//! Everything here is `no_std` + `alloc`: pure functions over in-memory
//! data, safe to call concurrently.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod geom;
pub mod grpo;
pub mod judge;
pub mod qa;
pub mod raster;
pub mod reward;
pub mod sampling;
pub mod scene;
