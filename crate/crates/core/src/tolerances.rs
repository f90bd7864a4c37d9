//! Every numeric threshold used by the toolkit, in one record.
//!
//! Scenario files may override any field under `[tolerances]`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Accepted drift of a point from its model surface before reprojection.
    pub point: f64,
    /// Accepted drift of a tangent vector from the tangent space of its base.
    pub tangency: f64,
    /// Drift above which a computed value is an error rather than reprojected.
    pub reproject: f64,
    /// One-sided violation tolerance for inequality checks.
    pub violation: f64,
    /// Step for geodesic central differences.
    pub fd_step: f64,
    /// Pairs closer than this are treated as coincident by the strict check.
    pub strict_separation: f64,
    /// Allowed spread of optimal values across multistart runs.
    pub spread: f64,
    /// Relative optimality gap defining the solution pool.
    pub opt_rel: f64,
    /// Maximum pool diameter allowed for strictly preinvex objectives.
    pub diameter: f64,
    /// Floor of the neighborhood-radius halving sweep.
    pub mu_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            point: 1e-12,
            tangency: 1e-10,
            reproject: 1e-8,
            violation: 1e-8,
            fd_step: 1e-5,
            strict_separation: 1e-10,
            spread: 1e-6,
            opt_rel: 1e-8,
            diameter: 1e-3,
            mu_floor: 1e-4,
        }
    }
}

impl Tolerances {
    pub fn geometry(&self) -> GeometryTolerances {
        GeometryTolerances {
            point: self.point,
            tangency: self.tangency,
            reproject: self.reproject,
        }
    }
}

/// The subset of [`Tolerances`] the geometry kernel needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryTolerances {
    pub point: f64,
    pub tangency: f64,
    pub reproject: f64,
}

impl Default for GeometryTolerances {
    fn default() -> Self {
        Tolerances::default().geometry()
    }
}
