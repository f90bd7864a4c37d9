use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};
use crate::maps::{FieldExpr, FieldExprDesc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDesc {
    Whole,
    /// Closed geodesic ball `d(x, center) ≤ radius`.
    MetricBall {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x : field(x) ≤ level}`
    Sublevel {
        field: FieldExprDesc,
        level: f64,
    },
    Union {
        members: Vec<SetDesc>,
    },
    Intersection {
        members: Vec<SetDesc>,
    },
}

/// Subsets of a manifold with exact membership.
///
/// Membership is decided by a signed margin: nonpositive inside, positive
/// outside, measured in the units of the defining quantity.
#[derive(Debug, Clone, PartialEq)]
pub enum SetPredicate {
    Whole,
    MetricBall { center: Point, radius: f64 },
    Sublevel { field: Box<FieldExpr>, level: f64 },
    Union(Vec<SetPredicate>),
    Intersection(Vec<SetPredicate>),
}

impl SetPredicate {
    pub fn resolve(desc: &SetDesc, m: &Manifold) -> Result<Self> {
        Ok(match desc {
            SetDesc::Whole => SetPredicate::Whole,
            SetDesc::MetricBall { center, radius } => {
                if !(*radius >= 0.0) {
                    return Err(Error::InvalidDescriptor(format!(
                        "ball radius must be nonnegative, got {radius}"
                    )));
                }
                SetPredicate::MetricBall {
                    center: m.point(center.clone())?,
                    radius: *radius,
                }
            }
            SetDesc::Sublevel { field, level } => SetPredicate::Sublevel {
                field: Box::new(FieldExpr::resolve(field, m)?),
                level: *level,
            },
            SetDesc::Union { members } => SetPredicate::Union(
                members
                    .iter()
                    .map(|d| SetPredicate::resolve(d, m))
                    .collect::<Result<_>>()?,
            ),
            SetDesc::Intersection { members } => SetPredicate::Intersection(
                members
                    .iter()
                    .map(|d| SetPredicate::resolve(d, m))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub fn ball(center: Point, radius: f64) -> Self {
        SetPredicate::MetricBall { center, radius }
    }

    pub fn sublevel(field: FieldExpr, level: f64) -> Self {
        SetPredicate::Sublevel {
            field: Box::new(field),
            level,
        }
    }

    pub fn margin(&self, m: &Manifold, x: &Point) -> Result<f64> {
        Ok(match self {
            SetPredicate::Whole => {
                if x.chart() != m.chart() {
                    return Err(Error::ChartMismatch {
                        expected: m.chart(),
                        found: x.chart(),
                    });
                }
                f64::NEG_INFINITY
            }
            SetPredicate::MetricBall { center, radius } => m.distance(center, x)? - radius,
            SetPredicate::Sublevel { field, level } => field.eval(m, x)? - level,
            SetPredicate::Union(members) => {
                let mut best = f64::INFINITY;
                for s in members {
                    best = best.min(s.margin(m, x)?);
                }
                best
            }
            SetPredicate::Intersection(members) => {
                let mut worst = f64::NEG_INFINITY;
                for s in members {
                    worst = worst.max(s.margin(m, x)?);
                }
                worst
            }
        })
    }

    pub fn contains(&self, m: &Manifold, x: &Point) -> Result<bool> {
        Ok(self.margin(m, x)? <= 0.0)
    }
}
