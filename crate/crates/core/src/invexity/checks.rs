//! Sampling checkers for the set and function classes.
//!
//! Every checker is a [`SampledCheck`]: a pure per-sample predicate plus the
//! shared driver in [`run_sampled`]. The per-sample entry point is public so a
//! reported witness can be re-evaluated in isolation.

use crate::error::{Error, Result};
use crate::geometry::{Manifold, ManifoldKind, Point, TangentVector};
use crate::invexity::report::{run_sampled, CheckReport, Outcome, SampleResult, SampledCheck};
use crate::invexity::scheme::SampleScheme;
use crate::invexity::sets::SetPredicate;
use crate::maps::{BiMap, PointMap, ScalarField};
use crate::tolerances::Tolerances;

/// The maps `E`, `F` and the bi-map `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTriple {
    pub e: PointMap,
    pub f: PointMap,
    pub g: BiMap,
}

impl MapTriple {
    pub fn new(e: PointMap, f: PointMap, g: BiMap) -> Self {
        Self { e, f, g }
    }

    /// `E = F = identity` with the given `G`.
    pub fn identity(g: BiMap) -> Self {
        Self::new(PointMap::Identity, PointMap::Identity, g)
    }

    /// `(E(r₁), F(s₁))`
    pub fn images(&self, m: &Manifold, r1: &Point, s1: &Point) -> Result<(Point, Point)> {
        Ok((self.e.eval(m, r1)?, self.f.eval(m, s1)?))
    }
}

/// Manifold, maps, the domain `B` on which `H` is considered, and tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub manifold: Manifold,
    pub maps: MapTriple,
    pub domain: SetPredicate,
    pub tolerances: Tolerances,
}

impl Setting {
    pub fn new(manifold: Manifold, maps: MapTriple) -> Self {
        Self {
            manifold,
            maps,
            domain: SetPredicate::Whole,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_domain(mut self, domain: SetPredicate) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tolerances = tol;
        self
    }
}

/// `s·a + (1−s)·b`, where a zero coefficient annihilates an infinite value.
pub fn chord(s: f64, a: f64, b: f64) -> f64 {
    let left = if s == 0.0 { 0.0 } else { s * a };
    let right = if s == 1.0 { 0.0 } else { (1.0 - s) * b };
    left + right
}

fn require_euclidean(m: &Manifold) -> Result<()> {
    if m.kind() != ManifoldKind::Euclidean {
        return Err(Error::ChartMismatch {
            expected: crate::geometry::ChartId {
                kind: ManifoldKind::Euclidean,
                dim: m.dim(),
            },
            found: m.chart(),
        });
    }
    Ok(())
}

fn finish(mut report: CheckReport, sch: &SampleScheme) -> CheckReport {
    report.scheme = Some(sch.clone());
    report
}

/// Flat `(E,F)`-invex set: `F(s₁) + μ G(E(r₁), F(s₁)) ∈ A` for `r₁, s₁ ∈ A`, `μ ∈ [0,1]`.
pub struct InvexSetFlat<'a> {
    pub manifold: &'a Manifold,
    pub set: &'a SetPredicate,
    pub maps: &'a MapTriple,
    pub tol: f64,
}

impl SampledCheck for InvexSetFlat<'_> {
    fn kind(&self) -> &'static str {
        "check_invex_set_flat"
    }

    fn sample(&self, r1: &Point, s1: &Point, mu: f64) -> Result<SampleResult> {
        let m = self.manifold;
        if !self.set.contains(m, r1)? || !self.set.contains(m, s1)? {
            return Ok(SampleResult::Skipped);
        }
        let (e, f) = self.maps.images(m, r1, s1)?;
        let g = self.maps.g.eval(m, &e, &f)?;
        let moved: Vec<f64> = f
            .coords()
            .iter()
            .zip(g.comps())
            .map(|(fi, gi)| fi + mu * gi)
            .collect();
        let margin = self.set.margin(m, &m.point(moved)?)?;
        Ok(SampleResult::Values(vec![Outcome::at_most(
            margin, 0.0, self.tol,
        )]))
    }
}

pub fn check_invex_set_flat(
    m: &Manifold,
    set: &SetPredicate,
    maps: &MapTriple,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    require_euclidean(m)?;
    let check = InvexSetFlat {
        manifold: m,
        set,
        maps,
        tol: sch.tol,
    };
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}

/// `(E,F)`-convex set: `F(s₁) + μ (E(r₁) − F(s₁)) ∈ A`, coded without a bi-map.
pub struct EfConvexSet<'a> {
    pub manifold: &'a Manifold,
    pub set: &'a SetPredicate,
    pub e: &'a PointMap,
    pub f: &'a PointMap,
    pub tol: f64,
}

impl SampledCheck for EfConvexSet<'_> {
    fn kind(&self) -> &'static str {
        "check_ef_convex_set"
    }

    fn sample(&self, r1: &Point, s1: &Point, mu: f64) -> Result<SampleResult> {
        let m = self.manifold;
        if !self.set.contains(m, r1)? || !self.set.contains(m, s1)? {
            return Ok(SampleResult::Skipped);
        }
        let e = self.e.eval(m, r1)?;
        let f = self.f.eval(m, s1)?;
        let moved: Vec<f64> = f
            .coords()
            .iter()
            .zip(e.coords())
            .map(|(fi, ei)| fi + mu * (ei - fi))
            .collect();
        let margin = self.set.margin(m, &m.point(moved)?)?;
        Ok(SampleResult::Values(vec![Outcome::at_most(
            margin, 0.0, self.tol,
        )]))
    }
}

pub fn check_ef_convex_set(
    m: &Manifold,
    set: &SetPredicate,
    e: &PointMap,
    f: &PointMap,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    require_euclidean(m)?;
    let check = EfConvexSet {
        manifold: m,
        set,
        e,
        f,
        tol: sch.tol,
    };
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}

/// Classical convexity: `(1−μ) s₁ + μ r₁ ∈ A`.
pub struct ConvexSet<'a> {
    pub manifold: &'a Manifold,
    pub set: &'a SetPredicate,
    pub tol: f64,
}

impl SampledCheck for ConvexSet<'_> {
    fn kind(&self) -> &'static str {
        "check_convex_set"
    }

    fn sample(&self, r1: &Point, s1: &Point, mu: f64) -> Result<SampleResult> {
        let m = self.manifold;
        if !self.set.contains(m, r1)? || !self.set.contains(m, s1)? {
            return Ok(SampleResult::Skipped);
        }
        let comb: Vec<f64> = s1
            .coords()
            .iter()
            .zip(r1.coords())
            .map(|(y, x)| (1.0 - mu) * y + mu * x)
            .collect();
        let margin = self.set.margin(m, &m.point(comb)?)?;
        Ok(SampleResult::Values(vec![Outcome::at_most(
            margin, 0.0, self.tol,
        )]))
    }
}

pub fn check_convex_set(
    m: &Manifold,
    set: &SetPredicate,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    require_euclidean(m)?;
    let check = ConvexSet {
        manifold: m,
        set,
        tol: sch.tol,
    };
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}

/// Geodesic `(E,F)`-invex set: the geodesic from `F(s₁)` with initial velocity
/// `G(E(r₁), F(s₁))` stays in `B` for `s ∈ [0,1]`.
pub struct GeodesicInvexSet<'a> {
    pub manifold: &'a Manifold,
    pub set: &'a SetPredicate,
    pub maps: &'a MapTriple,
    pub tol: f64,
}

impl SampledCheck for GeodesicInvexSet<'_> {
    fn kind(&self) -> &'static str {
        "check_geodesic_invex_set"
    }

    fn sample(&self, r1: &Point, s1: &Point, s: f64) -> Result<SampleResult> {
        let m = self.manifold;
        if !self.set.contains(m, r1)? || !self.set.contains(m, s1)? {
            return Ok(SampleResult::Skipped);
        }
        let (e, f) = self.maps.images(m, r1, s1)?;
        if !self.set.contains(m, &e)? || !self.set.contains(m, &f)? {
            return Ok(SampleResult::Skipped);
        }
        let g = self.maps.g.eval(m, &e, &f)?;
        let seg = m.segment(&f, &g)?;
        let x = match m.geodesic_eval(&seg, s) {
            Ok(x) => x,
            Err(Error::OutOfChart(why)) => {
                return Ok(SampleResult::Inconclusive(format!(
                    "geodesic leaves the model: {why}"
                )))
            }
            Err(e) => return Err(e),
        };
        let margin = self.set.margin(m, &x)?;
        Ok(SampleResult::Values(vec![Outcome::at_most(
            margin, 0.0, self.tol,
        )]))
    }
}

pub fn check_geodesic_invex_set(
    m: &Manifold,
    set: &SetPredicate,
    maps: &MapTriple,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    let check = GeodesicInvexSet {
        manifold: m,
        set,
        maps,
        tol: sch.tol,
    };
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}

/// `(E,F)`-preinvexity along the geodesic from `F(s₁)` with velocity `G(E(r₁), F(s₁))`:
/// `H(β(s)) ≤ s H(E(r₁)) + (1−s) H(F(s₁))`.
pub struct Preinvex<'a> {
    pub setting: &'a Setting,
    pub field: &'a ScalarField,
    pub strict: bool,
    pub tol: f64,
}

impl SampledCheck for Preinvex<'_> {
    fn kind(&self) -> &'static str {
        if self.strict {
            "check_preinvex_strict"
        } else {
            "check_preinvex"
        }
    }

    fn sample(&self, r1: &Point, s1: &Point, s: f64) -> Result<SampleResult> {
        let st = self.setting;
        let m = &st.manifold;
        let dom = &st.domain;
        if !dom.contains(m, r1)? || !dom.contains(m, s1)? {
            return Ok(SampleResult::Skipped);
        }
        let (e, f) = st.maps.images(m, r1, s1)?;
        if !dom.contains(m, &e)? || !dom.contains(m, &f)? {
            return Ok(SampleResult::Skipped);
        }
        let g = st.maps.g.eval(m, &e, &f)?;
        let seg = m.segment(&f, &g)?;
        let x = match m.geodesic_eval(&seg, s) {
            Ok(x) => x,
            Err(Error::OutOfChart(why)) => {
                return Ok(SampleResult::Inconclusive(format!(
                    "geodesic leaves the model: {why}"
                )))
            }
            Err(e) => return Err(e),
        };
        let lhs = self.field.eval(m, &x)?;
        let rhs = chord(s, self.field.eval(m, &e)?, self.field.eval(m, &f)?);
        let mut out = Outcome::at_most(lhs, rhs, self.tol);
        if self.strict
            && s > 0.0
            && s < 1.0
            && m.distance(&e, &f)? >= st.tolerances.strict_separation
        {
            out.violated = out.gap > -self.tol;
        }
        Ok(SampleResult::Values(vec![out]))
    }
}

pub fn check_preinvex(
    setting: &Setting,
    h: &ScalarField,
    sch: &SampleScheme,
    strict: bool,
) -> Result<CheckReport> {
    let check = Preinvex {
        setting,
        field: h,
        strict,
        tol: sch.tol,
    };
    let m = &setting.manifold;
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}

/// Classical convexity of a function: `H((1−μ) s₁ + μ r₁) ≤ μ H(r₁) + (1−μ) H(s₁)`.
pub struct ConvexFunction<'a> {
    pub manifold: &'a Manifold,
    pub domain: &'a SetPredicate,
    pub field: &'a ScalarField,
    pub tol: f64,
}

impl SampledCheck for ConvexFunction<'_> {
    fn kind(&self) -> &'static str {
        "check_convex_function"
    }

    fn sample(&self, r1: &Point, s1: &Point, mu: f64) -> Result<SampleResult> {
        let m = self.manifold;
        if !self.domain.contains(m, r1)? || !self.domain.contains(m, s1)? {
            return Ok(SampleResult::Skipped);
        }
        let comb: Vec<f64> = s1
            .coords()
            .iter()
            .zip(r1.coords())
            .map(|(y, x)| (1.0 - mu) * y + mu * x)
            .collect();
        let lhs = self.field.eval(m, &m.point(comb)?)?;
        let rhs = chord(mu, self.field.eval(m, r1)?, self.field.eval(m, s1)?);
        Ok(SampleResult::Values(vec![Outcome::at_most(
            lhs, rhs, self.tol,
        )]))
    }
}

pub fn check_convex_function(
    m: &Manifold,
    domain: &SetPredicate,
    h: &ScalarField,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    require_euclidean(m)?;
    let check = ConvexFunction {
        manifold: m,
        domain,
        field: h,
        tol: sch.tol,
    };
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}

/// `(E,F)`-invexity: `H(E(r₁)) − H(F(s₁)) ≥ dH_{F(s₁)} G(E(r₁), F(s₁))`.
///
/// Witness fields: `lhs = H(E) − H(F)`, `rhs = dH·G`, `gap = rhs − lhs`.
pub struct InvexFunction<'a> {
    pub setting: &'a Setting,
    pub field: &'a ScalarField,
    pub tol: f64,
}

impl SampledCheck for InvexFunction<'_> {
    fn kind(&self) -> &'static str {
        "check_invex_function"
    }

    fn uses_grid(&self) -> bool {
        false
    }

    fn sample(&self, r1: &Point, s1: &Point, _s: f64) -> Result<SampleResult> {
        let st = self.setting;
        let m = &st.manifold;
        let dom = &st.domain;
        if !dom.contains(m, r1)? || !dom.contains(m, s1)? {
            return Ok(SampleResult::Skipped);
        }
        let (e, f) = st.maps.images(m, r1, s1)?;
        if !dom.contains(m, &e)? || !dom.contains(m, &f)? {
            return Ok(SampleResult::Skipped);
        }
        let hf = self.field.eval(m, &f)?;
        if !hf.is_finite() {
            return Ok(SampleResult::Inconclusive("F(s1) outside dom(H)".into()));
        }
        let grad = match self.field.gradient(m, &f, st.tolerances.fd_step) {
            Ok(g) => g,
            Err(Error::NonDifferentiable(why)) => return Ok(SampleResult::Inconclusive(why)),
            Err(e) => return Err(e),
        };
        let g = st.maps.g.eval(m, &e, &f)?;
        let lhs = self.field.eval(m, &e)? - hf;
        let rhs = m.inner(&grad, &g);
        let gap = rhs - lhs;
        Ok(SampleResult::Values(vec![Outcome {
            lhs,
            rhs,
            gap,
            violated: gap > self.tol,
            label: None,
        }]))
    }
}

pub fn check_invex_function(
    setting: &Setting,
    h: &ScalarField,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    let check = InvexFunction {
        setting,
        field: h,
        tol: sch.tol,
    };
    let m = &setting.manifold;
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}

/// Condition A along `β` from `F(s₁)` with `β'(0) = G(E(r₁), F(s₁))`:
///
/// * A1: `P_{s→0}[G(F(s₁), β(s))] = −s G(E(r₁), F(s₁))`
/// * A2: `P_{s→0}[G(E(r₁), β(s))] = (1−s) G(E(r₁), F(s₁))`
///
/// Each sample yields two outcomes labelled `a1` and `a2` whose gap is the
/// norm of the difference at `F(s₁)`.
pub struct ConditionA<'a> {
    pub manifold: &'a Manifold,
    pub maps: &'a MapTriple,
    pub tol: f64,
}

impl ConditionA<'_> {
    fn side(
        &self,
        a: &Point,
        at: &Point,
        seg: &crate::geometry::GeodesicSegment,
        s: f64,
        target: &TangentVector,
    ) -> Result<f64> {
        let m = self.manifold;
        let value = self.maps.g.eval(m, a, at)?;
        let back = m.inverse_transport(&value, seg, s)?;
        Ok(m.norm_of_difference(&back, target))
    }
}

impl SampledCheck for ConditionA<'_> {
    fn kind(&self) -> &'static str {
        "check_condition_a"
    }

    fn sample(&self, r1: &Point, s1: &Point, s: f64) -> Result<SampleResult> {
        let m = self.manifold;
        let (e, f) = self.maps.images(m, r1, s1)?;
        let g = self.maps.g.eval(m, &e, &f)?;
        let seg = m.segment(&f, &g)?;
        let at = match m.geodesic_eval(&seg, s) {
            Ok(x) => x,
            Err(Error::OutOfChart(why)) => {
                return Ok(SampleResult::Inconclusive(format!(
                    "geodesic leaves the model: {why}"
                )))
            }
            Err(e) => return Err(e),
        };
        let gap1 = self.side(&f, &at, &seg, s, &g.scaled(-s))?;
        let gap2 = self.side(&e, &at, &seg, s, &g.scaled(1.0 - s))?;
        Ok(SampleResult::Values(vec![
            Outcome::at_most(gap1, 0.0, self.tol).labelled("a1"),
            Outcome::at_most(gap2, 0.0, self.tol).labelled("a2"),
        ]))
    }
}

pub fn check_condition_a(
    m: &Manifold,
    maps: &MapTriple,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    let check = ConditionA {
        manifold: m,
        maps,
        tol: sch.tol,
    };
    Ok(finish(
        run_sampled(&check, &sch.draw_pairs(m)?, &sch.grid())?,
        sch,
    ))
}
