//! Numerical geometry on stratified (Carnot) groups.
//!
//! The crate builds stratified Lie algebras with exact structure data, endows
//! them with homogeneous gauges, represents hypersurfaces by level sets plus
//! chart atlases, and integrates degenerate surface measures with a
//! deterministic adaptive quadrature. On top of that sit measure-density
//! profiles, blow-up limits, and a family of inequality checks (monotonicity,
//! isoperimetric, Sobolev-type) whose verdicts are reported as data.
//!
//! Parallel execution is optional: the `parallel` feature (on by default)
//! maps quadrature tiles across a thread pool, and every reduction happens in
//! index order so results are bit-identical across thread counts and with the
//! sequential fallback.

pub mod error;
pub mod exec;
pub mod group;
pub mod catalog;
pub mod checks;
pub mod density;
pub mod levelcurve;
pub mod linalg;
pub mod norm;
pub mod quad;
pub mod report;
pub mod scenario;
pub mod surface;

pub use error::{Error, Result};
