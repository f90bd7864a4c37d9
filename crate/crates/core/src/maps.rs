//! Catalog of point maps `E`, `F`, bi-maps `G` and scalar fields `H`.
//!
//! Each object comes in two forms: a serializable descriptor (`*Desc`) holding
//! raw coordinates, as written in scenario files, and a resolved runtime value
//! holding validated points of a concrete [`Manifold`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, Manifold, ManifoldKind, Point, TangentVector};
use crate::invexity::sets::{SetDesc, SetPredicate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointMapDesc {
    Identity,
    Constant {
        point: Vec<f64>,
    },
    /// `x ↦ exp_center(factor · log_center x)`
    GeodesicContraction {
        center: Vec<f64>,
        factor: f64,
    },
    /// `x ↦ A x + b`, Euclidean charts only.
    CoordinateAffine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointMap {
    Identity,
    Constant(Point),
    GeodesicContraction {
        center: Point,
        factor: f64,
    },
    CoordinateAffine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
}

impl PointMap {
    pub fn resolve(desc: &PointMapDesc, m: &Manifold) -> Result<Self> {
        Ok(match desc {
            PointMapDesc::Identity => PointMap::Identity,
            PointMapDesc::Constant { point } => PointMap::Constant(m.point(point.clone())?),
            PointMapDesc::GeodesicContraction { center, factor } => {
                if !(0.0..=1.0).contains(factor) {
                    return Err(Error::InvalidDescriptor(format!(
                        "contraction factor {factor} outside [0, 1]"
                    )));
                }
                PointMap::GeodesicContraction {
                    center: m.point(center.clone())?,
                    factor: *factor,
                }
            }
            PointMapDesc::CoordinateAffine { matrix, offset } => {
                if m.kind() != ManifoldKind::Euclidean {
                    return Err(Error::InvalidDescriptor(
                        "coordinate_affine needs a Euclidean chart".into(),
                    ));
                }
                let n = m.dim();
                if offset.len() != n || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidDescriptor(format!(
                        "coordinate_affine needs a {n}x{n} matrix and a length-{n} offset"
                    )));
                }
                PointMap::CoordinateAffine {
                    matrix: matrix.clone(),
                    offset: offset.clone(),
                }
            }
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, PointMap::Identity)
    }

    pub fn eval(&self, m: &Manifold, x: &Point) -> Result<Point> {
        if x.chart() != m.chart() {
            return Err(Error::ChartMismatch {
                expected: m.chart(),
                found: x.chart(),
            });
        }
        match self {
            PointMap::Identity => Ok(x.clone()),
            PointMap::Constant(p) => Ok(p.clone()),
            PointMap::GeodesicContraction { center, factor } => {
                let v = m.log_map(center, x)?;
                m.exp_map(center, &v.scaled(*factor))
            }
            PointMap::CoordinateAffine { matrix, offset } => {
                let y = matrix
                    .iter()
                    .zip(offset)
                    .map(|(row, b)| dot(row, x.coords()) + b)
                    .collect();
                m.point(y)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntryDesc {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BiMapDesc {
    /// `G(a, b) = log_b a`
    LogBased,
    /// `G(a, b) = factor · log_b a`
    ScaledLog { factor: f64 },
    /// `G(a, b) = a − b`, Euclidean charts only.
    EuclideanDifference,
    /// Explicit finite table; lookups outside it are errors.
    CustomTable { entries: Vec<TableEntryDesc> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BiMap {
    LogBased,
    ScaledLog(f64),
    EuclideanDifference,
    CustomTable(Vec<(Point, Point, TangentVector)>),
}

impl BiMap {
    pub fn resolve(desc: &BiMapDesc, m: &Manifold) -> Result<Self> {
        Ok(match desc {
            BiMapDesc::LogBased => BiMap::LogBased,
            BiMapDesc::ScaledLog { factor } => {
                if !factor.is_finite() {
                    return Err(Error::InvalidDescriptor(
                        "scaled_log factor must be finite".into(),
                    ));
                }
                BiMap::ScaledLog(*factor)
            }
            BiMapDesc::EuclideanDifference => {
                if m.kind() != ManifoldKind::Euclidean {
                    return Err(Error::InvalidDescriptor(
                        "euclidean_difference needs a Euclidean chart".into(),
                    ));
                }
                BiMap::EuclideanDifference
            }
            BiMapDesc::CustomTable { entries } => {
                let mut table = Vec::with_capacity(entries.len());
                for e in entries {
                    let a = m.point(e.a.clone())?;
                    let b = m.point(e.b.clone())?;
                    let v = m.tangent(&b, e.value.clone())?;
                    table.push((a, b, v));
                }
                BiMap::CustomTable(table)
            }
        })
    }

    /// Table that maps every ordered pair of `points` to the zero vector.
    pub fn zero_table(m: &Manifold, points: &[Point]) -> Self {
        let mut table = Vec::with_capacity(points.len() * points.len());
        for a in points {
            for b in points {
                table.push((a.clone(), b.clone(), m.zero_tangent(b)));
            }
        }
        BiMap::CustomTable(table)
    }

    /// `G(a, b) ∈ T_b`.
    pub fn eval(&self, m: &Manifold, a: &Point, b: &Point) -> Result<TangentVector> {
        match self {
            BiMap::LogBased => m.log_map(b, a),
            BiMap::ScaledLog(c) => Ok(m.log_map(b, a)?.scaled(*c)),
            BiMap::EuclideanDifference => {
                let diff = a
                    .coords()
                    .iter()
                    .zip(b.coords())
                    .map(|(x, y)| x - y)
                    .collect();
                // chart checks happen in tangent()
                if a.chart() != m.chart() {
                    return Err(Error::ChartMismatch {
                        expected: m.chart(),
                        found: a.chart(),
                    });
                }
                m.tangent(b, diff)
            }
            BiMap::CustomTable(table) => {
                let hit = table
                    .iter()
                    .find(|(ta, tb, _)| same_point(ta, a) && same_point(tb, b))
                    .ok_or(Error::TableMiss)?;
                m.tangent(b, hit.2.comps().to_vec())
            }
        }
    }
}

fn same_point(a: &Point, b: &Point) -> bool {
    a.chart() == b.chart()
        && a.coords()
            .iter()
            .zip(b.coords())
            .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTermDesc {
    pub weight: f64,
    pub field: FieldExprDesc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldExprDesc {
    SquaredDistance {
        center: Vec<f64>,
    },
    Distance {
        center: Vec<f64>,
    },
    /// Ambient dot product with `direction` (defaults to the last axis).
    LinearHeight {
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    Negated {
        field: Box<FieldExprDesc>,
    },
    WeightedSum {
        terms: Vec<WeightedTermDesc>,
    },
    Product {
        left: Box<FieldExprDesc>,
        right: Box<FieldExprDesc>,
    },
    /// `field` on `domain`, `+∞` elsewhere.
    IndicatorExtended {
        field: Box<FieldExprDesc>,
        domain: Box<SetDesc>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferentialMode {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFieldDesc {
    #[serde(flatten)]
    pub expr: FieldExprDesc,
    #[serde(default)]
    pub differential: DifferentialMode,
    /// Declared lower semicontinuity; defaults to what the expression guarantees.
    #[serde(default)]
    pub lsc: Option<bool>,
}

impl From<FieldExprDesc> for ScalarFieldDesc {
    fn from(expr: FieldExprDesc) -> Self {
        Self {
            expr,
            differential: DifferentialMode::Analytic,
            lsc: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    SquaredDistance(Point),
    Distance(Point),
    LinearHeight(Vec<f64>),
    Negated(Box<FieldExpr>),
    WeightedSum(Vec<(f64, FieldExpr)>),
    Product(Box<FieldExpr>, Box<FieldExpr>),
    IndicatorExtended(Box<FieldExpr>, Box<SetPredicate>),
}

impl FieldExpr {
    pub fn resolve(desc: &FieldExprDesc, m: &Manifold) -> Result<Self> {
        Ok(match desc {
            FieldExprDesc::SquaredDistance { center } => {
                FieldExpr::SquaredDistance(m.point(center.clone())?)
            }
            FieldExprDesc::Distance { center } => FieldExpr::Distance(m.point(center.clone())?),
            FieldExprDesc::LinearHeight { direction } => {
                let dir = match direction {
                    Some(d) if d.len() == m.ambient_dim() => d.clone(),
                    Some(d) => {
                        return Err(Error::InvalidDescriptor(format!(
                            "linear_height direction needs {} components, got {}",
                            m.ambient_dim(),
                            d.len()
                        )))
                    }
                    None => {
                        let mut d = vec![0.0; m.ambient_dim()];
                        d[m.ambient_dim() - 1] = 1.0;
                        d
                    }
                };
                FieldExpr::LinearHeight(dir)
            }
            FieldExprDesc::Negated { field } => {
                let inner = FieldExpr::resolve(field, m)?;
                if inner.is_extended() {
                    return Err(Error::InvalidDescriptor(
                        "cannot negate an extended-valued field".into(),
                    ));
                }
                FieldExpr::Negated(Box::new(inner))
            }
            FieldExprDesc::WeightedSum { terms } => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    if !(t.weight >= 0.0) || !t.weight.is_finite() {
                        return Err(Error::InvalidDescriptor(format!(
                            "weighted_sum coefficients must be finite and nonnegative, got {}",
                            t.weight
                        )));
                    }
                    out.push((t.weight, FieldExpr::resolve(&t.field, m)?));
                }
                FieldExpr::WeightedSum(out)
            }
            FieldExprDesc::Product { left, right } => {
                let l = FieldExpr::resolve(left, m)?;
                let r = FieldExpr::resolve(right, m)?;
                if l.is_extended() || r.is_extended() {
                    return Err(Error::InvalidDescriptor(
                        "product factors must be finite-valued".into(),
                    ));
                }
                FieldExpr::Product(Box::new(l), Box::new(r))
            }
            FieldExprDesc::IndicatorExtended { field, domain } => FieldExpr::IndicatorExtended(
                Box::new(FieldExpr::resolve(field, m)?),
                Box::new(SetPredicate::resolve(domain, m)?),
            ),
        })
    }

    /// Whether the expression can take the value `+∞`.
    pub fn is_extended(&self) -> bool {
        match self {
            FieldExpr::IndicatorExtended(..) => true,
            FieldExpr::Negated(f) => f.is_extended(),
            FieldExpr::WeightedSum(terms) => terms.iter().any(|(_, f)| f.is_extended()),
            FieldExpr::Product(a, b) => a.is_extended() || b.is_extended(),
            _ => false,
        }
    }

    pub fn eval(&self, m: &Manifold, x: &Point) -> Result<f64> {
        Ok(match self {
            FieldExpr::SquaredDistance(c) => m.distance(x, c)?.powi(2),
            FieldExpr::Distance(c) => m.distance(x, c)?,
            FieldExpr::LinearHeight(w) => {
                check_chart(m, x)?;
                dot(w, x.coords())
            }
            FieldExpr::Negated(f) => -f.eval(m, x)?,
            FieldExpr::WeightedSum(terms) => {
                check_chart(m, x)?;
                let mut acc = 0.0;
                for (w, f) in terms {
                    // 0 · ∞ = 0
                    if *w != 0.0 {
                        acc += w * f.eval(m, x)?;
                    }
                }
                acc
            }
            FieldExpr::Product(a, b) => a.eval(m, x)? * b.eval(m, x)?,
            FieldExpr::IndicatorExtended(f, dom) => {
                if dom.contains(m, x)? {
                    f.eval(m, x)?
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// Riemannian gradient at `x`, so that `dH_x(v) = ⟨grad, v⟩_x`.
    pub fn gradient(&self, m: &Manifold, x: &Point) -> Result<TangentVector> {
        match self {
            FieldExpr::SquaredDistance(c) => Ok(m.log_map(x, c)?.scaled(-2.0)),
            FieldExpr::Distance(c) => {
                let d = m.distance(x, c)?;
                if d == 0.0 {
                    return Err(Error::NonDifferentiable(
                        "distance field at its center".into(),
                    ));
                }
                Ok(m.log_map(x, c)?.scaled(-1.0 / d))
            }
            FieldExpr::LinearHeight(w) => {
                check_chart(m, x)?;
                let mut g = w.clone();
                if m.kind() == ManifoldKind::Hyperboloid {
                    // Minkowski dual of the Euclidean gradient
                    let last = g.len() - 1;
                    g[last] = -g[last];
                }
                m.project_tangent(x, &g)
            }
            FieldExpr::Negated(f) => Ok(f.gradient(m, x)?.scaled(-1.0)),
            FieldExpr::WeightedSum(terms) => {
                check_chart(m, x)?;
                let mut acc = vec![0.0; m.ambient_dim()];
                for (w, f) in terms {
                    if *w != 0.0 {
                        let g = f.gradient(m, x)?;
                        acc.iter_mut()
                            .zip(g.comps())
                            .for_each(|(a, gi)| *a += w * gi);
                    }
                }
                m.project_tangent(x, &acc)
            }
            FieldExpr::Product(a, b) => {
                let (fa, fb) = (a.eval(m, x)?, b.eval(m, x)?);
                let (ga, gb) = (a.gradient(m, x)?, b.gradient(m, x)?);
                let comps: Vec<f64> = ga
                    .comps()
                    .iter()
                    .zip(gb.comps())
                    .map(|(u, v)| fb * u + fa * v)
                    .collect();
                m.project_tangent(x, &comps)
            }
            FieldExpr::IndicatorExtended(f, dom) => {
                if dom.contains(m, x)? {
                    f.gradient(m, x)
                } else {
                    Err(Error::NonDifferentiable(
                        "extended field outside its domain".into(),
                    ))
                }
            }
        }
    }
}

fn check_chart(m: &Manifold, x: &Point) -> Result<()> {
    if x.chart() != m.chart() {
        return Err(Error::ChartMismatch {
            expected: m.chart(),
            found: x.chart(),
        });
    }
    Ok(())
}

/// Objective `H` together with its differentiation mode and semicontinuity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub expr: FieldExpr,
    pub differential: DifferentialMode,
    pub lsc: bool,
}

impl ScalarField {
    pub fn new(expr: FieldExpr) -> Self {
        Self {
            expr,
            differential: DifferentialMode::Analytic,
            lsc: true,
        }
    }

    pub fn resolve(desc: &ScalarFieldDesc, m: &Manifold) -> Result<Self> {
        Ok(Self {
            expr: FieldExpr::resolve(&desc.expr, m)?,
            differential: desc.differential,
            // every expression in the vocabulary is continuous on its domain,
            // and indicator domains are closed
            lsc: desc.lsc.unwrap_or(true),
        })
    }

    pub fn eval(&self, m: &Manifold, x: &Point) -> Result<f64> {
        self.expr.eval(m, x)
    }

    pub fn gradient(&self, m: &Manifold, x: &Point, fd_step: f64) -> Result<TangentVector> {
        match self.differential {
            DifferentialMode::Analytic => self.expr.gradient(m, x),
            DifferentialMode::FiniteDifference => finite_difference_gradient(self, m, x, fd_step),
        }
    }
}

/// Directional derivative by geodesic central differences,
/// `(f(exp_x(h v)) − f(exp_x(−h v))) / 2h`.
pub fn directional_derivative(
    h: &ScalarField,
    m: &Manifold,
    x: &Point,
    v: &TangentVector,
    step: f64,
) -> Result<f64> {
    let fwd = m.exp_map(x, &v.scaled(step))?;
    let bwd = m.exp_map(x, &v.scaled(-step))?;
    Ok((h.eval(m, &fwd)? - h.eval(m, &bwd)?) / (2.0 * step))
}

/// Gradient assembled from central differences along an orthonormal tangent basis.
pub fn finite_difference_gradient(
    h: &ScalarField,
    m: &Manifold,
    x: &Point,
    step: f64,
) -> Result<TangentVector> {
    let basis = m.tangent_basis(x)?;
    let mut comps = vec![0.0; m.ambient_dim()];
    for e in &basis {
        let d = directional_derivative(h, m, x, e, step)?;
        if !d.is_finite() {
            return Err(Error::NonDifferentiable(
                "finite difference probe left dom(h)".into(),
            ));
        }
        comps
            .iter_mut()
            .zip(e.comps())
            .for_each(|(c, ei)| *c += d * ei);
    }
    m.project_tangent(x, &comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e2() -> Manifold {
        Manifold::euclidean(2).unwrap()
    }

    #[test]
    fn identity_and_constant() {
        let m = e2();
        let x = m.point(vec![2.0, -1.0]).unwrap();
        assert_eq!(PointMap::Identity.eval(&m, &x).unwrap(), x);
        let p0 = m.point(vec![0.5, 0.5]).unwrap();
        assert_eq!(PointMap::Constant(p0.clone()).eval(&m, &x).unwrap(), p0);
    }

    #[test]
    fn euclidean_contraction() {
        let m = e2();
        let desc = PointMapDesc::GeodesicContraction {
            center: vec![0.0, 0.0],
            factor: 0.5,
        };
        let map = PointMap::resolve(&desc, &m).unwrap();
        let y = map.eval(&m, &m.point(vec![2.0, 2.0]).unwrap()).unwrap();
        assert_eq!(y.coords(), &[1.0, 1.0]);
        let bad = PointMapDesc::GeodesicContraction {
            center: vec![0.0, 0.0],
            factor: 1.5,
        };
        assert!(PointMap::resolve(&bad, &m).is_err());
    }

    #[test]
    fn affine_needs_euclidean() {
        let h = Manifold::hyperboloid(2).unwrap();
        let desc = PointMapDesc::CoordinateAffine {
            matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            offset: vec![0.0, 0.0],
        };
        assert!(PointMap::resolve(&desc, &h).is_err());
        let m = e2();
        let map = PointMap::resolve(
            &PointMapDesc::CoordinateAffine {
                matrix: vec![vec![2.0, 0.0], vec![1.0, 1.0]],
                offset: vec![1.0, 0.0],
            },
            &m,
        )
        .unwrap();
        let y = map.eval(&m, &m.point(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(y.coords(), &[3.0, 3.0]);
    }

    #[test]
    fn bimap_examples() {
        let m = e2();
        let a = m.point(vec![3.0, 1.0]).unwrap();
        let b = m.point(vec![1.0, 1.0]).unwrap();
        assert_eq!(
            BiMap::EuclideanDifference.eval(&m, &a, &b).unwrap().comps(),
            &[2.0, 0.0]
        );
        assert!(BiMap::LogBased.eval(&m, &a, &a).unwrap().is_zero());

        let h = Manifold::hyperboloid(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = h.sample_ball(&h.origin(), 2.0, &mut rng).unwrap();
        let q = h.sample_ball(&h.origin(), 2.0, &mut rng).unwrap();
        let g = BiMap::ScaledLog(2.0).eval(&h, &p, &q).unwrap();
        let d = h.distance(&p, &q).unwrap();
        assert!((h.norm(&g) - 2.0 * d).abs() < 1e-12);
        assert_eq!(g.base(), &q);
    }

    #[test]
    fn custom_table_misses_are_errors() {
        let m = e2();
        let a = m.point(vec![0.0, 0.0]).unwrap();
        let b = m.point(vec![1.0, 0.0]).unwrap();
        let g = BiMap::zero_table(&m, &[a.clone(), b.clone()]);
        assert!(g.eval(&m, &a, &b).unwrap().is_zero());
        let c = m.point(vec![5.0, 0.0]).unwrap();
        assert_eq!(g.eval(&m, &c, &b), Err(Error::TableMiss));
    }

    #[test]
    fn scalar_examples() {
        let m = e2();
        let origin = m.point(vec![0.0, 0.0]).unwrap();
        let sq = FieldExpr::SquaredDistance(origin.clone());
        assert_eq!(sq.eval(&m, &origin).unwrap(), 0.0);
        assert_eq!(
            sq.eval(&m, &m.point(vec![3.0, 4.0]).unwrap()).unwrap(),
            25.0
        );
        assert!(sq.gradient(&m, &origin).unwrap().is_zero());
        let g = sq.gradient(&m, &m.point(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(g.comps(), &[2.0, 4.0]);

        let other = FieldExpr::LinearHeight(vec![1.0, -3.0]);
        let sum = FieldExpr::WeightedSum(vec![(1.0, sq.clone()), (0.0, other)]);
        let x = m.point(vec![-0.3, 1.7]).unwrap();
        assert_eq!(sum.eval(&m, &x).unwrap(), sq.eval(&m, &x).unwrap());

        let dist = FieldExpr::Distance(origin.clone());
        assert!(matches!(
            dist.gradient(&m, &origin),
            Err(Error::NonDifferentiable(_))
        ));
    }

    #[test]
    fn negative_weights_rejected() {
        let m = e2();
        let desc = FieldExprDesc::WeightedSum {
            terms: vec![WeightedTermDesc {
                weight: -1.0,
                field: FieldExprDesc::LinearHeight { direction: None },
            }],
        };
        assert!(FieldExpr::resolve(&desc, &m).is_err());
    }

    #[test]
    fn indicator_is_infinite_outside() {
        let m = e2();
        let desc = FieldExprDesc::IndicatorExtended {
            field: Box::new(FieldExprDesc::LinearHeight { direction: None }),
            domain: Box::new(SetDesc::MetricBall {
                center: vec![0.0, 0.0],
                radius: 1.0,
            }),
        };
        let f = FieldExpr::resolve(&desc, &m).unwrap();
        assert_eq!(f.eval(&m, &m.point(vec![0.0, 0.5]).unwrap()).unwrap(), 0.5);
        assert_eq!(
            f.eval(&m, &m.point(vec![0.0, 2.0]).unwrap()).unwrap(),
            f64::INFINITY
        );
        assert!(FieldExpr::resolve(
            &FieldExprDesc::Negated {
                field: Box::new(desc)
            },
            &m
        )
        .is_err());
    }

    #[test]
    fn hyperboloid_squared_distance_gradient_matches_fd() {
        let h = Manifold::hyperboloid(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p0 = h.sample_ball(&h.origin(), 1.0, &mut rng).unwrap();
        let f = ScalarField::new(FieldExpr::SquaredDistance(p0.clone()));
        for _ in 0..20 {
            let x = h.sample_ball(&h.origin(), 2.0, &mut rng).unwrap();
            let g = f.gradient(&h, &x, 1e-5).unwrap();
            let expect = h.log_map(&x, &p0).unwrap().scaled(-2.0);
            assert_eq!(g.comps(), expect.comps());
            let v = h.random_unit_tangent(&x, &mut rng);
            let fd = directional_derivative(&f, &h, &x, &v, 1e-5).unwrap();
            let an = h.inner(&g, &v);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
        }
    }
}
