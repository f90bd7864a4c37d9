//! `(E,F)`-proximal subgradients: verification, a constructive search, and the
//! linearized lower bound on Hadamard manifolds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, TangentVector};
use crate::invexity::checks::{check_preinvex, Setting};
use crate::invexity::report::{run_sampled, CheckReport, Outcome, SampleResult, SampledCheck};
use crate::invexity::scheme::{SampleScheme, Sampler};
use crate::maps::{finite_difference_gradient, ScalarField};

/// Default `λ` candidates for [`search_proximal_subgradient`].
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.0, 1e-3, 1e-1, 1.0, 10.0];

/// Number of secant probes turned into candidate subgradients during search.
const SECANT_PROBES: usize = 4;

/// Claim that `sigma` is a proximal subgradient of `H` at `base` with
/// constants `lambda` and `mu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximalCertificate {
    base: Point,
    sigma: TangentVector,
    lambda: f64,
    mu: f64,
}

impl ProximalCertificate {
    pub fn new(m: &Manifold, base: &Point, sigma: Vec<f64>, lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidDescriptor(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidDescriptor(format!(
                "mu must be finite and positive, got {mu}"
            )));
        }
        Ok(Self {
            base: base.clone(),
            sigma: m.tangent(base, sigma)?,
            lambda,
            mu,
        })
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn sigma(&self) -> &TangentVector {
        &self.sigma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `H(x) ≥ H(base) + ⟨σ, log_base x⟩ − λ d(x, base)²` for `x ∈ N(base, μ) ∩ dom(H)`.
///
/// Witness fields: `r1 = x`, `s1 = base`, `lhs = H(x)`, `rhs` the quadratic
/// minorant, `gap = rhs − lhs`.
pub struct ProximalInequality<'a> {
    pub manifold: &'a Manifold,
    pub field: &'a ScalarField,
    pub cert: &'a ProximalCertificate,
    pub tol: f64,
}

impl SampledCheck for ProximalInequality<'_> {
    fn kind(&self) -> &'static str {
        "verify_proximal_subgradient"
    }

    fn uses_grid(&self) -> bool {
        false
    }

    fn sample(&self, x: &Point, base: &Point, _s: f64) -> Result<SampleResult> {
        let m = self.manifold;
        let d = m.distance(base, x)?;
        if d >= self.cert.mu {
            return Ok(SampleResult::Skipped);
        }
        let hx = self.field.eval(m, x)?;
        if !hx.is_finite() {
            return Ok(SampleResult::Skipped);
        }
        let hb = self.field.eval(m, base)?;
        let log = m.log_map(base, x)?;
        let rhs = hb + m.inner(&self.cert.sigma, &log) - self.cert.lambda * d * d;
        let gap = rhs - hx;
        Ok(SampleResult::Values(vec![Outcome {
            lhs: hx,
            rhs,
            gap,
            violated: gap > self.tol,
            label: None,
        }]))
    }
}

/// Neighborhood samples around `center`: the scheme's stream re-centered on
/// `center` with radius `radius` (explicit lists are used as given), plus
/// the two points at half radius along `±direction`.
fn neighborhood_points(
    m: &Manifold,
    center: &Point,
    radius: f64,
    direction: Option<&TangentVector>,
    sch: &SampleScheme,
) -> Result<Vec<Point>> {
    let local = match &sch.sampler {
        Sampler::UniformBall { .. } => SampleScheme {
            sampler: Sampler::UniformBall {
                center: center.coords().to_vec(),
                radius,
            },
            ..sch.clone()
        },
        Sampler::ExplicitList { .. } => sch.clone(),
    };
    let mut pts = local.draw_points(m)?;
    if let Some(dir) = direction {
        let n = m.norm(dir);
        if n > 0.0 {
            for sign in [1.0, -1.0] {
                match m.exp_map(center, &dir.scaled(sign * radius / (2.0 * n))) {
                    Ok(p) => pts.push(p),
                    Err(Error::OutOfChart(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(pts)
}

pub fn verify_proximal_subgradient(
    m: &Manifold,
    h: &ScalarField,
    cert: &ProximalCertificate,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    if !h.eval(m, &cert.base)?.is_finite() {
        return Err(Error::PremiseFailure("base point outside dom(h)".into()));
    }
    let pts = neighborhood_points(m, &cert.base, cert.mu, Some(&cert.sigma), sch)?;
    let pairs: Vec<(Point, Point)> = pts.into_iter().map(|p| (p, cert.base.clone())).collect();
    let check = ProximalInequality {
        manifold: m,
        field: h,
        cert,
        tol: sch.tol,
    };
    let mut report = run_sampled(&check, &pairs, &[0.0])?;
    if report.n_evaluated == 0 {
        return Err(Error::EmptyNeighborhood);
    }
    report.set_metric("lambda", cert.lambda);
    report.set_metric("mu", cert.mu);
    report.scheme = Some(sch.clone());
    Ok(report)
}

/// Candidate certificates at `base` that pass verification.
///
/// Candidates for `σ` are tried in order: the differential (analytic, then
/// finite-difference), secant directions `(H(p) − H(base)) / d² · log_base p`
/// towards a few probe points, and zero. Each `σ` is paired with the smallest
/// passing `λ` from `lambda_grid`. An empty result means no candidate passed.
pub fn search_proximal_subgradient(
    m: &Manifold,
    h: &ScalarField,
    base: &Point,
    lambda_grid: &[f64],
    mu: f64,
    fd_step: f64,
    sch: &SampleScheme,
) -> Result<Vec<ProximalCertificate>> {
    let hb = h.eval(m, base)?;
    if !hb.is_finite() {
        return Err(Error::PremiseFailure("base point outside dom(h)".into()));
    }
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let mut push = |c: Vec<f64>| {
        if c.iter().all(|x| x.is_finite()) && !candidates.contains(&c) {
            candidates.push(c);
        }
    };
    if let Ok(g) = h.expr.gradient(m, base) {
        push(g.comps().to_vec());
    }
    if let Ok(g) = finite_difference_gradient(h, m, base, fd_step) {
        push(g.comps().to_vec());
    }
    for p in neighborhood_points(m, base, mu, None, sch)?
        .iter()
        .take(SECANT_PROBES)
    {
        let d = m.distance(base, p)?;
        let hp = h.eval(m, p)?;
        if d > 0.0 && hp.is_finite() {
            let log = m.log_map(base, p)?;
            push(log.scaled((hp - hb) / (d * d)).comps().to_vec());
        }
    }
    push(vec![0.0; m.ambient_dim()]);

    let mut grid: Vec<f64> = lambda_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut found = Vec::new();
    for sigma in candidates {
        for &lambda in &grid {
            let cert = ProximalCertificate::new(m, base, sigma.clone(), lambda, mu)?;
            match verify_proximal_subgradient(m, h, &cert, sch) {
                Ok(r) if r.holds() => {
                    found.push(cert);
                    break;
                }
                Ok(_) | Err(Error::EmptyNeighborhood) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(found)
}

/// `H(E(r₁)) ≥ H(base) + ⟨σ, G(E(r₁), base)⟩` on `B ∩ N(base, radius)`.
pub struct LinearizedBound<'a> {
    pub setting: &'a Setting,
    pub field: &'a ScalarField,
    pub cert: &'a ProximalCertificate,
    pub radius: f64,
    pub tol: f64,
}

impl SampledCheck for LinearizedBound<'_> {
    fn kind(&self) -> &'static str {
        "verify_linearized_bound"
    }

    fn uses_grid(&self) -> bool {
        false
    }

    fn sample(&self, r1: &Point, base: &Point, _s: f64) -> Result<SampleResult> {
        let st = self.setting;
        let m = &st.manifold;
        let x = st.maps.e.eval(m, r1)?;
        if !st.domain.contains(m, &x)? || m.distance(base, &x)? >= self.radius {
            return Ok(SampleResult::Skipped);
        }
        let hx = self.field.eval(m, &x)?;
        let g = st.maps.g.eval(m, &x, base)?;
        let rhs = self.field.eval(m, base)? + m.inner(&self.cert.sigma, &g);
        let gap = if hx == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            rhs - hx
        };
        Ok(SampleResult::Values(vec![Outcome {
            lhs: hx,
            rhs,
            gap,
            violated: gap > self.tol,
            label: None,
        }]))
    }
}

/// Checks the premises, then sweeps `μ' = μ, μ/2, …` down to the floor and
/// reports the largest radius on which the linearized bound holds.
///
/// Premises: Hadamard model, lower semicontinuous `H`, preinvexity on the
/// scheme, `G(a, b) ≠ 0` for sampled `a ≠ b`, and a verified certificate.
pub fn verify_linearized_bound(
    setting: &Setting,
    h: &ScalarField,
    cert: &ProximalCertificate,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    let m = &setting.manifold;
    if !m.is_hadamard() {
        return Err(Error::PremiseFailure(format!(
            "{} is not Hadamard",
            m.chart()
        )));
    }
    if !h.lsc {
        return Err(Error::PremiseFailure(
            "field is not lower semicontinuous".into(),
        ));
    }
    let pre = check_preinvex(setting, h, sch, false)?;
    if !pre.holds() {
        return Err(Error::PremiseFailure(format!(
            "field is not preinvex on the scheme ({:?})",
            pre.verdict
        )));
    }
    let sep = setting.tolerances.strict_separation;
    for (r1, s1) in sch.draw_pairs(m)? {
        let (e, f) = setting.maps.images(m, &r1, &s1)?;
        if m.distance(&e, &f)? > sep && setting.maps.g.eval(m, &e, &f)?.is_zero() {
            return Err(Error::PremiseFailure(
                "G vanishes at a pair of distinct points".into(),
            ));
        }
    }
    let prox = verify_proximal_subgradient(m, h, cert, sch)?;
    if !prox.holds() {
        return Err(Error::PremiseFailure(format!(
            "certificate is not a proximal subgradient ({:?})",
            prox.verdict
        )));
    }

    let floor = setting.tolerances.mu_floor;
    let mut radius = cert.mu;
    let mut tried = 0usize;
    let mut last: Option<CheckReport> = None;
    while radius >= floor {
        tried += 1;
        let pts = neighborhood_points(m, &cert.base, radius, None, sch)?;
        let pairs: Vec<(Point, Point)> = pts.into_iter().map(|p| (p, cert.base.clone())).collect();
        let check = LinearizedBound {
            setting,
            field: h,
            cert,
            radius,
            tol: sch.tol,
        };
        let mut report = run_sampled(&check, &pairs, &[0.0])?;
        report.set_metric("mu_levels_tried", tried as f64);
        if report.holds() {
            report.set_metric("mu_passing", radius);
            report.parts = vec![pre, prox];
            report.scheme = Some(sch.clone());
            return Ok(report);
        }
        last = Some(report);
        radius /= 2.0;
    }
    let mut report = last.unwrap_or_else(|| CheckReport::empty("verify_linearized_bound"));
    report.falsification = true;
    report
        .notes
        .push(format!("no radius down to {floor:e} satisfied the bound"));
    report.parts = vec![pre, prox];
    report.scheme = Some(sch.clone());
    Ok(report)
}
