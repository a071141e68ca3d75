//! Core machinery for locating short closed geodesics on complete surfaces of
//! finite area, modelled as intrinsic triangle meshes with truncated ends.
//!
//! The crate is `no_std` + `alloc`; all IO (mesh files, CSV, reports) lives in
//! the companion CLI crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod angle;
pub mod birkhoff;
pub mod chart;
pub mod curve;
pub mod engine;
pub mod field;
pub mod gen;
pub mod intersect;
pub mod level;
pub mod loops;
pub mod mesh;
pub mod oracle;
pub mod path;
pub mod pipeline;
pub mod region;
pub mod rng;
pub mod steiner;

pub use curve::{Curve, MeshPoint};
pub use engine::Engine;
pub use mesh::{BuildError, EndSpec, MeshInput, SurfaceMesh};
