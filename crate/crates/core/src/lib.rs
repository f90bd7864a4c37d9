//! Geodesic `(E,F)`-invexity toolkit.
//!
//! Exact geometry on Euclidean space, a spherical cap and the hyperboloid model,
//! a small catalog of maps and scalar fields, sampling checkers for invex sets
//! and (pre)invex functions, proximal subgradient certificates, geodesic descent,
//! and a scenario runner that self-grades against declared expectations.

pub mod error;
pub mod geometry;
pub mod invexity;
pub mod maps;
pub mod optimize;
pub mod scenario;
pub mod subgradient;
pub mod tolerances;

pub use error::{Error, Result};
pub use geometry::{GeodesicSegment, Manifold, ManifoldKind, Point, TangentVector};
pub use tolerances::Tolerances;
