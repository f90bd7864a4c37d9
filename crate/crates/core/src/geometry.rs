//! Closed-form Riemannian kernel for three embedded models.
//!
//! * `Euclidean(n)`: Cartesian coordinates in `R^n`.
//! * `SphereCap(n)`: unit sphere `S^n ⊂ R^{n+1}` restricted to an open cap of
//!   angular radius `< π/2` around a center, so any two points are joined by
//!   exactly one minimizing geodesic that stays inside the cap.
//! * `Hyperboloid(n)`: upper sheet `{x ∈ R^{n+1} : ⟨x,x⟩_M = -1, x_n > 0}` with
//!   the Minkowski form `⟨x,y⟩_M = Σ_{i<n} x_i y_i − x_n y_n`. This is the
//!   Cartan–Hadamard model.
//!
//! All values are immutable; every operation is a pure function of its inputs.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::GeometryTolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Euclidean,
    SphereCap,
    Hyperboloid,
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ManifoldKind::Euclidean => "euclidean",
            ManifoldKind::SphereCap => "sphere_cap",
            ManifoldKind::Hyperboloid => "hyperboloid",
        };
        f.write_str(name)
    }
}

/// Identifies which model a point lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChartId {
    pub kind: ManifoldKind,
    pub dim: usize,
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    chart: ChartId,
    coords: Vec<f64>,
}

impl Point {
    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentVector {
    base: Point,
    comps: Vec<f64>,
}

impl TangentVector {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn comps(&self) -> &[f64] {
        &self.comps
    }

    /// Same vector scaled by `c`; tangency is preserved exactly.
    pub fn scaled(&self, c: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            comps: self.comps.iter().map(|x| c * x).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|&x| x == 0.0)
    }
}

/// Geodesic `s ↦ exp_start(s · velocity)` on the parameter domain `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicSegment {
    start: Point,
    velocity: TangentVector,
}

impl GeodesicSegment {
    pub fn start(&self) -> &Point {
        &self.start
    }

    pub fn velocity(&self) -> &TangentVector {
        &self.velocity
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cap {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifold {
    kind: ManifoldKind,
    dim: usize,
    cap: Option<Cap>,
    tol: GeometryTolerances,
}

// Small dense helpers on ambient coordinate slices.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn euclid_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() - 1;
    dot(&a[..n], &b[..n]) - a[n] * b[n]
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a * x + b * y`
fn lincomb(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

/// `sin(θ)/θ` without cancellation near zero.
fn sinc(theta: f64) -> f64 {
    if theta.abs() < 1e-4 {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// `sinh(θ)/θ` without cancellation near zero.
fn sinhc(theta: f64) -> f64 {
    if theta.abs() < 1e-4 {
        1.0 + theta * theta / 6.0
    } else {
        theta.sinh() / theta
    }
}

impl Manifold {
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::check_dim(dim)?;
        Ok(Self {
            kind: ManifoldKind::Euclidean,
            dim,
            cap: None,
            tol: GeometryTolerances::default(),
        })
    }

    /// Open cap `{x ∈ S^dim : angle(x, center) < radius}`; requires `radius < π/2`.
    pub fn sphere_cap(dim: usize, center: &[f64], radius: f64) -> Result<Self> {
        Self::check_dim(dim)?;
        if center.len() != dim + 1 {
            return Err(Error::InvalidManifold(format!(
                "cap center needs {} coordinates, got {}",
                dim + 1,
                center.len()
            )));
        }
        if !(radius > 0.0 && radius < FRAC_PI_2) {
            return Err(Error::InvalidManifold(format!(
                "cap radius must lie in (0, π/2), got {radius}"
            )));
        }
        let norm = euclid_norm(center);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidManifold("cap center must be nonzero".into()));
        }
        Ok(Self {
            kind: ManifoldKind::SphereCap,
            dim,
            cap: Some(Cap {
                center: center.iter().map(|c| c / norm).collect(),
                radius,
            }),
            tol: GeometryTolerances::default(),
        })
    }

    pub fn hyperboloid(dim: usize) -> Result<Self> {
        Self::check_dim(dim)?;
        Ok(Self {
            kind: ManifoldKind::Hyperboloid,
            dim,
            cap: None,
            tol: GeometryTolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: GeometryTolerances) -> Self {
        self.tol = tol;
        self
    }

    fn check_dim(dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::InvalidManifold(
                "dimension must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tolerances(&self) -> GeometryTolerances {
        self.tol
    }

    pub fn chart(&self) -> ChartId {
        ChartId {
            kind: self.kind,
            dim: self.dim,
        }
    }

    /// Cap center and angular radius, for `SphereCap`.
    pub fn cap(&self) -> Option<(&[f64], f64)> {
        self.cap.as_ref().map(|c| (c.center.as_slice(), c.radius))
    }

    /// Number of ambient coordinates.
    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Euclidean => self.dim,
            _ => self.dim + 1,
        }
    }

    /// Non-positive sectional curvature, complete and simply connected.
    pub fn is_hadamard(&self) -> bool {
        !matches!(self.kind, ManifoldKind::SphereCap)
    }

    /// A canonical interior point: the origin, the cap center, or the hyperboloid apex.
    pub fn origin(&self) -> Point {
        let coords = match self.kind {
            ManifoldKind::Euclidean => vec![0.0; self.dim],
            ManifoldKind::SphereCap => self.cap.as_ref().unwrap().center.clone(),
            ManifoldKind::Hyperboloid => {
                let mut c = vec![0.0; self.dim + 1];
                c[self.dim] = 1.0;
                c
            }
        };
        Point {
            chart: self.chart(),
            coords,
        }
    }

    fn ensure_chart(&self, found: ChartId) -> Result<()> {
        if found != self.chart() {
            return Err(Error::ChartMismatch {
                expected: self.chart(),
                found,
            });
        }
        Ok(())
    }

    /// Validates coordinates as a point of this model.
    ///
    /// Drift up to `tol.point` is accepted as-is, drift up to `tol.reproject`
    /// is projected back onto the model, anything larger is rejected.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.ambient_dim() {
            return Err(Error::InvalidPoint(format!(
                "{} expects {} coordinates, got {}",
                self.chart(),
                self.ambient_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let coords = match self.kind {
            ManifoldKind::Euclidean => coords,
            ManifoldKind::SphereCap => {
                let norm = euclid_norm(&coords);
                let drift = (norm - 1.0).abs();
                let coords = if drift <= self.tol.point {
                    coords
                } else if drift <= self.tol.reproject {
                    coords.iter().map(|c| c / norm).collect()
                } else {
                    return Err(Error::InvalidPoint(format!(
                        "off the unit sphere by {drift:e}"
                    )));
                };
                let cap = self.cap.as_ref().unwrap();
                let angle = angle_between_unit(&coords, &cap.center);
                if angle >= cap.radius {
                    return Err(Error::OutOfChart(format!(
                        "angle {angle} to cap center is not below cap radius {}",
                        cap.radius
                    )));
                }
                coords
            }
            ManifoldKind::Hyperboloid => {
                let n = self.dim;
                if coords[n] <= 0.0 {
                    return Err(Error::InvalidPoint(
                        "hyperboloid point needs a positive last coordinate".into(),
                    ));
                }
                let scale = dot(&coords, &coords).max(1.0);
                let drift = (minkowski(&coords, &coords) + 1.0).abs() / scale;
                if drift <= self.tol.point {
                    coords
                } else if drift <= self.tol.reproject {
                    let mut c = coords;
                    c[n] = (1.0 + dot(&c[..n], &c[..n])).sqrt();
                    c
                } else {
                    return Err(Error::InvalidPoint(format!(
                        "off the hyperboloid by {drift:e}"
                    )));
                }
            }
        };
        Ok(Point {
            chart: self.chart(),
            coords,
        })
    }

    /// Hyperboloid point over the given spatial coordinates (last coordinate derived).
    pub fn hyperboloid_lift(&self, spatial: &[f64]) -> Result<Point> {
        if self.kind != ManifoldKind::Hyperboloid || spatial.len() != self.dim {
            return Err(Error::InvalidPoint(format!(
                "lift needs {} spatial coordinates on a hyperboloid",
                self.dim
            )));
        }
        let mut c = spatial.to_vec();
        c.push((1.0 + dot(spatial, spatial)).sqrt());
        self.point(c)
    }

    fn tangency_drift(&self, base: &[f64], comps: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => 0.0,
            ManifoldKind::SphereCap => dot(base, comps).abs() / euclid_norm(comps).max(1.0),
            ManifoldKind::Hyperboloid => {
                minkowski(base, comps).abs() / (euclid_norm(base) * euclid_norm(comps)).max(1.0)
            }
        }
    }

    fn project_comps(&self, base: &[f64], comps: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Euclidean => comps.to_vec(),
            ManifoldKind::SphereCap => lincomb(1.0, comps, -dot(base, comps), base),
            ManifoldKind::Hyperboloid => lincomb(1.0, comps, minkowski(base, comps), base),
        }
    }

    fn check_comps(&self, base: &Point, comps: &[f64]) -> Result<()> {
        self.ensure_chart(base.chart)?;
        if comps.len() != self.ambient_dim() {
            return Err(Error::InvalidPoint(format!(
                "tangent needs {} components, got {}",
                self.ambient_dim(),
                comps.len()
            )));
        }
        let drift = self.tangency_drift(&base.coords, comps);
        if !(drift <= self.tol.tangency) {
            return Err(Error::TangencyViolation {
                drift,
                tol: self.tol.tangency,
            });
        }
        Ok(())
    }

    /// Validates `comps` as a tangent vector at `base`.
    pub fn tangent(&self, base: &Point, comps: Vec<f64>) -> Result<TangentVector> {
        self.check_comps(base, &comps)?;
        Ok(TangentVector {
            base: base.clone(),
            comps,
        })
    }

    /// Orthogonal projection of an ambient vector onto `T_base`.
    pub fn project_tangent(&self, base: &Point, ambient: &[f64]) -> Result<TangentVector> {
        self.ensure_chart(base.chart)?;
        Ok(TangentVector {
            base: base.clone(),
            comps: self.project_comps(&base.coords, ambient),
        })
    }

    pub fn zero_tangent(&self, base: &Point) -> TangentVector {
        TangentVector {
            base: base.clone(),
            comps: vec![0.0; self.ambient_dim()],
        }
    }

    /// Settles a computed tangent: small drift is projected away, large drift is an error.
    fn settle_tangent(&self, base: Point, comps: Vec<f64>) -> Result<TangentVector> {
        let drift = self.tangency_drift(&base.coords, &comps);
        let comps = if drift <= self.tol.tangency {
            comps
        } else if drift <= self.tol.reproject {
            self.project_comps(&base.coords, &comps)
        } else {
            return Err(Error::TangencyViolation {
                drift,
                tol: self.tol.reproject,
            });
        };
        Ok(TangentVector { base, comps })
    }

    /// Riemannian inner product on `T_p`.
    pub fn inner(&self, v: &TangentVector, w: &TangentVector) -> f64 {
        match self.kind {
            ManifoldKind::Hyperboloid => minkowski(&v.comps, &w.comps),
            _ => dot(&v.comps, &w.comps),
        }
    }

    pub fn norm(&self, v: &TangentVector) -> f64 {
        self.comps_norm(&v.comps)
    }

    fn comps_norm(&self, comps: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Hyperboloid => minkowski(comps, comps).max(0.0).sqrt(),
            _ => euclid_norm(comps),
        }
    }

    /// `‖v − w‖` measured at the common base point.
    pub fn norm_of_difference(&self, v: &TangentVector, w: &TangentVector) -> f64 {
        let diff = sub(&v.comps, &w.comps);
        self.comps_norm(&diff)
    }

    /// `γ(1)` for the geodesic with `γ(0) = p`, `γ'(0) = v`.
    pub fn exp_map(&self, p: &Point, v: &TangentVector) -> Result<Point> {
        self.check_comps(p, &v.comps)?;
        self.exp_comps(p, &v.comps)
    }

    fn exp_comps(&self, p: &Point, v: &[f64]) -> Result<Point> {
        let coords = match self.kind {
            ManifoldKind::Euclidean => p.coords.iter().zip(v).map(|(a, b)| a + b).collect(),
            ManifoldKind::SphereCap => {
                let r = euclid_norm(v);
                if r >= PI {
                    return Err(Error::OutOfChart(format!(
                        "velocity norm {r} reaches the antipodal limit π"
                    )));
                }
                lincomb(r.cos(), &p.coords, sinc(r), v)
            }
            ManifoldKind::Hyperboloid => {
                let r = self.comps_norm(v);
                lincomb(r.cosh(), &p.coords, sinhc(r), v)
            }
        };
        self.point(coords)
    }

    /// Initial velocity of the unique minimizing geodesic from `p` to `q`.
    pub fn log_map(&self, p: &Point, q: &Point) -> Result<TangentVector> {
        self.ensure_chart(p.chart)?;
        self.ensure_chart(q.chart)?;
        let diff = sub(&q.coords, &p.coords);
        let comps = match self.kind {
            ManifoldKind::Euclidean => diff,
            ManifoldKind::SphereCap => {
                // q - (p·q) p with p·q = 1 - |q-p|²/2
                let half = dot(&diff, &diff) / 2.0;
                let u = lincomb(1.0, &diff, half, &p.coords);
                let theta = self.distance_unchecked(p, q);
                let s = sinc(theta);
                u.iter().map(|x| x / s).collect()
            }
            ManifoldKind::Hyperboloid => {
                // q - α p with α = -⟨p,q⟩_M = 1 + ⟨q-p,q-p⟩_M / 2
                let half = minkowski(&diff, &diff).max(0.0) / 2.0;
                let u = lincomb(1.0, &diff, -half, &p.coords);
                let theta = self.distance_unchecked(p, q);
                let s = sinhc(theta);
                u.iter().map(|x| x / s).collect()
            }
        };
        self.settle_tangent(p.clone(), comps)
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.ensure_chart(p.chart)?;
        self.ensure_chart(q.chart)?;
        Ok(self.distance_unchecked(p, q))
    }

    fn distance_unchecked(&self, p: &Point, q: &Point) -> f64 {
        let diff = sub(&q.coords, &p.coords);
        match self.kind {
            ManifoldKind::Euclidean => euclid_norm(&diff),
            ManifoldKind::SphereCap => 2.0 * (euclid_norm(&diff) / 2.0).min(1.0).asin(),
            ManifoldKind::Hyperboloid => {
                2.0 * (minkowski(&diff, &diff).max(0.0).sqrt() / 2.0).asinh()
            }
        }
    }

    pub fn segment(&self, start: &Point, velocity: &TangentVector) -> Result<GeodesicSegment> {
        self.check_comps(start, &velocity.comps)?;
        Ok(GeodesicSegment {
            start: start.clone(),
            velocity: TangentVector {
                base: start.clone(),
                comps: velocity.comps.clone(),
            },
        })
    }

    /// Minimizing geodesic from `p` (at `s = 0`) to `q` (at `s = 1`).
    pub fn segment_between(&self, p: &Point, q: &Point) -> Result<GeodesicSegment> {
        let v = self.log_map(p, q)?;
        self.segment(p, &v)
    }

    pub fn geodesic_eval(&self, seg: &GeodesicSegment, s: f64) -> Result<Point> {
        self.ensure_chart(seg.start.chart)?;
        if s == 0.0 {
            return Ok(seg.start.clone());
        }
        let v: Vec<f64> = seg.velocity.comps.iter().map(|c| s * c).collect();
        self.exp_comps(&seg.start, &v)
    }

    /// Unit direction and speed of a segment's velocity (None for a constant segment).
    fn direction(&self, seg: &GeodesicSegment) -> Option<(Vec<f64>, f64)> {
        let r = self.comps_norm(&seg.velocity.comps);
        if r == 0.0 {
            None
        } else {
            Some((seg.velocity.comps.iter().map(|c| c / r).collect(), r))
        }
    }

    /// Parallel translation of `v ∈ T_{seg(0)}` to `T_{seg(s)}` along the segment.
    pub fn parallel_transport(
        &self,
        v: &TangentVector,
        seg: &GeodesicSegment,
        s: f64,
    ) -> Result<TangentVector> {
        self.check_comps(&seg.start, &v.comps)?;
        let end = self.geodesic_eval(seg, s)?;
        let Some((u, r)) = self.direction(seg) else {
            return self.settle_tangent(end, v.comps.clone());
        };
        let comps = self.transport_comps(&seg.start.coords, &u, s * r, &v.comps);
        self.settle_tangent(end, comps)
    }

    /// Parallel translation of `w ∈ T_{seg(s)}` back to `T_{seg(0)}`.
    pub fn inverse_transport(
        &self,
        w: &TangentVector,
        seg: &GeodesicSegment,
        s: f64,
    ) -> Result<TangentVector> {
        let at = self.geodesic_eval(seg, s)?;
        self.check_comps(&at, &w.comps)?;
        let Some((u, r)) = self.direction(seg) else {
            return self.settle_tangent(seg.start.clone(), w.comps.clone());
        };
        let t = s * r;
        // Reverse the geodesic: start at seg(s) heading along -γ'(s)/|γ'(s)|.
        let back: Vec<f64> = self
            .transport_comps(&seg.start.coords, &u, t, &u)
            .iter()
            .map(|c| -c)
            .collect();
        let comps = self.transport_comps(&at.coords, &back, t, &w.comps);
        self.settle_tangent(seg.start.clone(), comps)
    }

    /// Velocity `γ'(s)` of a segment.
    pub fn velocity_at(&self, seg: &GeodesicSegment, s: f64) -> Result<TangentVector> {
        self.parallel_transport(&seg.velocity, seg, s)
    }

    /// Transport of `w` from `p` along the unit-speed geodesic with direction `u` for arc length `t`.
    fn transport_comps(&self, p: &[f64], u: &[f64], t: f64, w: &[f64]) -> Vec<f64> {
        match self.kind {
            ManifoldKind::Euclidean => w.to_vec(),
            ManifoldKind::SphereCap => {
                let a = dot(u, w);
                let (sin, cos) = t.sin_cos();
                w.iter()
                    .zip(u)
                    .zip(p)
                    .map(|((wi, ui), pi)| wi + (cos - 1.0) * a * ui - sin * a * pi)
                    .collect()
            }
            ManifoldKind::Hyperboloid => {
                let a = minkowski(u, w);
                let (sinh, cosh) = (t.sinh(), t.cosh());
                w.iter()
                    .zip(u)
                    .zip(p)
                    .map(|((wi, ui), pi)| wi + (cosh - 1.0) * a * ui + sinh * a * pi)
                    .collect()
            }
        }
    }

    /// Orthonormal basis of `T_p`.
    pub fn tangent_basis(&self, p: &Point) -> Result<Vec<TangentVector>> {
        self.ensure_chart(p.chart)?;
        let n = self.ambient_dim();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.dim);
        for i in 0..n {
            if basis.len() == self.dim {
                break;
            }
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let mut v = self.project_comps(&p.coords, &e);
            // two passes of Gram-Schmidt for stability
            for _ in 0..2 {
                for b in &basis {
                    let c = self.inner_comps(b, &v);
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
                }
            }
            let norm = self.comps_norm(&v);
            if norm > 1e-6 {
                basis.push(v.iter().map(|x| x / norm).collect());
            }
        }
        basis
            .into_iter()
            .map(|comps| self.settle_tangent(p.clone(), comps))
            .collect()
    }

    fn inner_comps(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::Hyperboloid => minkowski(a, b),
            _ => dot(a, b),
        }
    }

    /// Uniformly distributed unit tangent direction at `p`.
    pub fn random_unit_tangent<R: Rng + ?Sized>(&self, p: &Point, rng: &mut R) -> TangentVector {
        let basis = self.tangent_basis(p).expect("point carries this chart");
        loop {
            let coeffs: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
            let len = euclid_norm(&coeffs);
            if len < 1e-12 {
                continue;
            }
            let mut comps = vec![0.0; self.ambient_dim()];
            for (c, b) in coeffs.iter().zip(&basis) {
                comps
                    .iter_mut()
                    .zip(&b.comps)
                    .for_each(|(x, bi)| *x += c / len * bi);
            }
            return TangentVector {
                base: p.clone(),
                comps,
            };
        }
    }

    /// Random point of the closed geodesic ball `B(center, radius)`.
    ///
    /// The radius is drawn as `radius · U^{1/dim}` along a uniform direction,
    /// which is uniform in normal coordinates. Cap exits are resampled.
    pub fn sample_ball<R: Rng + ?Sized>(
        &self,
        center: &Point,
        radius: f64,
        rng: &mut R,
    ) -> Result<Point> {
        self.ensure_chart(center.chart)?;
        for _ in 0..256 {
            let dir = self.random_unit_tangent(center, rng);
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / self.dim as f64);
            match self.exp_comps(center, &dir.scaled(r).comps) {
                Ok(p) => return Ok(p),
                Err(Error::OutOfChart(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::OutOfChart(
            "ball sampling kept leaving the cap".to_string(),
        ))
    }
}

fn angle_between_unit(a: &[f64], b: &[f64]) -> f64 {
    let diff = sub(a, b);
    2.0 * (euclid_norm(&diff) / 2.0).min(1.0).asin()
}
