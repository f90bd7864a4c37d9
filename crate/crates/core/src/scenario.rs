//! Scenario files: declarative TOML documents naming a manifold, maps, sets,
//! fields and sampling schemes, plus a list of checks with expected verdicts.
//!
//! Running a scenario yields a [`RunReport`] whose status grades every check
//! against its expectation. Reports contain no timestamps or timings unless
//! asked for, so reruns with the same seed are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, ManifoldKind, Point};
use crate::invexity::checks::{
    ConditionA, ConvexFunction, ConvexSet, EfConvexSet, GeodesicInvexSet, InvexFunction,
    InvexSetFlat, MapTriple, Preinvex, Setting,
};
use crate::invexity::report::{CheckReport, SampleResult, SampledCheck, Verdict, Witness};
use crate::invexity::scheme::{SampleScheme, Sampler};
use crate::invexity::sets::{SetDesc, SetPredicate};
use crate::invexity::{
    check_condition_a, check_convex_function, check_convex_set, check_degeneration,
    check_ef_convex_set, check_geodesic_invex_set, check_invex_function, check_invex_set_flat,
    check_level_set_invex, check_preinvex, check_sum_preinvex,
    theorem_invex_plus_a_implies_preinvex, theorem_preinvex_implies_invex, HarnessMode,
};
use crate::maps::{
    BiMap, BiMapDesc, FieldExpr, PointMap, PointMapDesc, ScalarField, ScalarFieldDesc,
};
use crate::optimize::{
    geodesic_descent, multistart, multistart_local_global, solution_set_invex, DescentConfig,
    SolveResult, StopReason,
};
use crate::subgradient::{
    search_proximal_subgradient, verify_linearized_bound, verify_proximal_subgradient,
    ProximalCertificate, ProximalInequality, DEFAULT_LAMBDA_GRID,
};
use crate::tolerances::Tolerances;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_radius: Option<f64>,
}

impl ManifoldSpec {
    pub fn build(&self, tol: &Tolerances) -> Result<Manifold> {
        let m = match self.kind {
            ManifoldKind::Euclidean => Manifold::euclidean(self.dim)?,
            ManifoldKind::Hyperboloid => Manifold::hyperboloid(self.dim)?,
            ManifoldKind::SphereCap => {
                let (Some(c), Some(r)) = (&self.cap_center, self.cap_radius) else {
                    return Err(Error::InvalidManifold(
                        "sphere_cap needs cap_center and cap_radius".into(),
                    ));
                };
                Manifold::sphere_cap(self.dim, c, r)?
            }
        };
        Ok(m.with_tolerances(tol.geometry()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsSpec {
    #[serde(default = "identity_desc")]
    pub e: PointMapDesc,
    #[serde(default = "identity_desc")]
    pub f: PointMapDesc,
    #[serde(default = "log_desc")]
    pub g: BiMapDesc,
}

fn identity_desc() -> PointMapDesc {
    PointMapDesc::Identity
}

fn log_desc() -> BiMapDesc {
    BiMapDesc::LogBased
}

impl Default for MapsSpec {
    fn default() -> Self {
        Self {
            e: identity_desc(),
            f: identity_desc(),
            g: log_desc(),
        }
    }
}

impl MapsSpec {
    fn resolve(&self, m: &Manifold) -> Result<MapTriple> {
        Ok(MapTriple::new(
            PointMap::resolve(&self.e, m)?,
            PointMap::resolve(&self.f, m)?,
            BiMap::resolve(&self.g, m)?,
        ))
    }
}

/// A sampling scheme whose seed is the scenario seed plus `seed_offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub n_pairs: usize,
    pub s_grid: usize,
    #[serde(default)]
    pub seed_offset: u64,
    /// Defaults to `tolerances.violation`.
    #[serde(default)]
    pub tol: Option<f64>,
    pub sampler: Sampler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    InvexSetFlat,
    EfConvexSet,
    ConvexSet,
    GeodesicInvexSet,
    Preinvex,
    ConvexFunction,
    InvexFunction,
    ConditionA,
    Degeneration,
    SumPreinvex,
    LevelSetInvex,
    PreinvexImpliesInvex,
    InvexPlusAImpliesPreinvex,
    ProximalSubgradient,
    SearchProximalSubgradient,
    LinearizedBound,
    Descent,
    Multistart,
    SolutionSet,
}

impl Op {
    pub const ALL: [Op; 19] = [
        Op::InvexSetFlat,
        Op::EfConvexSet,
        Op::ConvexSet,
        Op::GeodesicInvexSet,
        Op::Preinvex,
        Op::ConvexFunction,
        Op::InvexFunction,
        Op::ConditionA,
        Op::Degeneration,
        Op::SumPreinvex,
        Op::LevelSetInvex,
        Op::PreinvexImpliesInvex,
        Op::InvexPlusAImpliesPreinvex,
        Op::ProximalSubgradient,
        Op::SearchProximalSubgradient,
        Op::LinearizedBound,
        Op::Descent,
        Op::Multistart,
        Op::SolutionSet,
    ];

    /// Theorem harnesses: a violated conclusion with held premises is a falsification.
    pub fn is_theorem(self) -> bool {
        matches!(
            self,
            Op::SumPreinvex
                | Op::LevelSetInvex
                | Op::PreinvexImpliesInvex
                | Op::InvexPlusAImpliesPreinvex
                | Op::LinearizedBound
                | Op::Multistart
        )
    }

    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    fn args(self) -> &'static str {
        match self {
            Op::InvexSetFlat | Op::EfConvexSet | Op::ConvexSet | Op::GeodesicInvexSet => "set",
            Op::Preinvex => "field [strict]",
            Op::ConvexFunction | Op::InvexFunction => "field",
            Op::ConditionA => "",
            Op::Degeneration => "set [field]",
            Op::SumPreinvex => "terms",
            Op::LevelSetInvex => "field level",
            Op::PreinvexImpliesInvex | Op::InvexPlusAImpliesPreinvex => "field",
            Op::ProximalSubgradient | Op::LinearizedBound => "field base sigma lambda mu",
            Op::SearchProximalSubgradient => "field base mu [lambda_grid]",
            Op::Descent => "field start [descent] [target target_tol]",
            Op::Multistart => "field n_starts [descent]",
            Op::SolutionSet => "field (n_starts [descent] | pool) [tol_opt]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Violated,
    Inconclusive,
    /// The check itself must fail with an error.
    Error,
}

impl Expectation {
    fn met(self, verdict: Option<Verdict>) -> bool {
        match (self, verdict) {
            (Expectation::Holds, Some(Verdict::HoldsOnSamples)) => true,
            (Expectation::Violated, Some(Verdict::Violated)) => true,
            (Expectation::Inconclusive, Some(Verdict::Inconclusive)) => true,
            (Expectation::Error, None) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub weight: f64,
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub id: String,
    pub op: Op,
    pub expect: Expectation,
    #[serde(default)]
    pub scheme: Option<String>,
    #[serde(default)]
    pub mode: HarnessMode,
    #[serde(default)]
    pub maps: Option<MapsSpec>,
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub set: Option<String>,
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub base: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub descent: Option<String>,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub target: Option<Vec<f64>>,
    #[serde(default)]
    pub target_tol: Option<f64>,
    #[serde(default)]
    pub n_starts: Option<usize>,
    #[serde(default)]
    pub tol_opt: Option<f64>,
    #[serde(default)]
    pub pool: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    pub manifold: ManifoldSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub maps: MapsSpec,
    /// Named set used as the domain `B`; the whole manifold when absent.
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetDesc>,
    #[serde(default)]
    pub fields: BTreeMap<String, ScalarFieldDesc>,
    #[serde(default)]
    pub schemes: BTreeMap<String, SchemeSpec>,
    #[serde(default)]
    pub descent: BTreeMap<String, DescentConfig>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

fn config(location: impl std::fmt::Display, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{location}: {e}"))
}

/// Parses a `key=value` override; the value is read as a TOML value and
/// falls back to a bare string.
fn parse_override(item: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| config(format!("--set {item}"), "expected key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(config(format!("--set {item}"), "empty key"));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or(toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    Ok((key.split('.').map(str::to_string).collect(), value))
}

fn set_path(root: &mut toml::Value, path: &[String], value: toml::Value, full: &str) -> Result<()> {
    let (head, rest) = path.split_first().expect("nonempty path");
    let slot = match root {
        toml::Value::Table(t) => {
            if rest.is_empty() {
                t.insert(head.clone(), value);
                return Ok(());
            }
            t.entry(head.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        }
        toml::Value::Array(a) => {
            let i: usize = head.parse().map_err(|_| {
                config(format!("--set {full}"), format!("'{head}' is not an index"))
            })?;
            let len = a.len();
            let slot = a.get_mut(i).ok_or_else(|| {
                config(
                    format!("--set {full}"),
                    format!("index {i} out of range ({len})"),
                )
            })?;
            if rest.is_empty() {
                *slot = value;
                return Ok(());
            }
            slot
        }
        _ => {
            return Err(config(
                format!("--set {full}"),
                format!("'{head}' is not inside a table or array"),
            ))
        }
    };
    set_path(slot, rest, value, full)
}

impl Scenario {
    /// Parses a scenario document after applying dotted-path overrides.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            // direct parsing keeps line and column spans in diagnostics
            return toml::from_str(text).map_err(|e| config("scenario", e.to_string().trim_end()));
        }
        let table: toml::Table = toml::from_str(text).map_err(|e| config("scenario", e))?;
        let mut root = toml::Value::Table(table);
        for item in overrides {
            let (path, value) = parse_override(item)?;
            set_path(&mut root, &path, value, item)?;
        }
        root.try_into::<Scenario>()
            .map_err(|e| config("scenario", e.to_string().trim_end()))
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(path.display(), e))?;
        Self::parse(&text, overrides)
    }
}

/// A check with every reference resolved.
struct Job {
    spec: CheckSpec,
    setting: Setting,
    scheme: SampleScheme,
    set: Option<SetPredicate>,
    field: Option<ScalarField>,
    terms: Vec<(f64, ScalarField)>,
    descent: DescentConfig,
    cert: Option<ProximalCertificate>,
    base: Option<Point>,
    start: Option<Point>,
    target: Option<Point>,
    pool: Option<Vec<Point>>,
}

/// A scenario with all descriptors resolved against its manifold.
pub struct Prepared {
    pub scenario: Scenario,
    pub manifold: Manifold,
    jobs: Vec<Job>,
}

fn need<T: Clone>(v: &Option<T>, what: &str, at: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| config(at, format!("missing required argument '{what}'")))
}

impl Prepared {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let tol = scenario.tolerances;
        let m = scenario
            .manifold
            .build(&tol)
            .map_err(|e| config("manifold", e))?;
        let maps = scenario.maps.resolve(&m).map_err(|e| config("maps", e))?;
        let mut sets = BTreeMap::new();
        for (k, d) in &scenario.sets {
            sets.insert(
                k.clone(),
                SetPredicate::resolve(d, &m).map_err(|e| config(format!("sets.{k}"), e))?,
            );
        }
        let mut fields = BTreeMap::new();
        for (k, d) in &scenario.fields {
            fields.insert(
                k.clone(),
                ScalarField::resolve(d, &m).map_err(|e| config(format!("fields.{k}"), e))?,
            );
        }
        let mut schemes = BTreeMap::new();
        for (k, s) in &scenario.schemes {
            let sch = SampleScheme {
                n_pairs: s.n_pairs,
                s_grid: s.s_grid,
                rng_seed: scenario.seed.wrapping_add(s.seed_offset),
                tol: s.tol.unwrap_or(tol.violation),
                sampler: s.sampler.clone(),
            };
            sch.validate()
                .map_err(|e| config(format!("schemes.{k}"), e))?;
            schemes.insert(k.clone(), sch);
        }
        for (k, d) in &scenario.descent {
            d.validate()
                .map_err(|e| config(format!("descent.{k}"), e))?;
        }
        let lookup_set = |name: &str, at: &str| {
            sets.get(name)
                .cloned()
                .ok_or_else(|| config(at, format!("unknown set '{name}'")))
        };
        let default_domain = match &scenario.domain {
            Some(n) => lookup_set(n, "domain")?,
            None => SetPredicate::Whole,
        };

        let mut jobs = Vec::with_capacity(scenario.checks.len());
        for (i, spec) in scenario.checks.iter().enumerate() {
            let at = format!("checks[{i}] ({})", spec.id);
            let at = at.as_str();
            let lookup_field = |name: &str| {
                fields
                    .get(name)
                    .cloned()
                    .ok_or_else(|| config(at, format!("unknown field '{name}'")))
            };
            let point = |c: &Vec<f64>, what: &str| {
                m.point(c.clone())
                    .map_err(|e| config(at, format!("{what}: {e}")))
            };
            let check_maps = match &spec.maps {
                Some(ms) => ms.resolve(&m).map_err(|e| config(at, e))?,
                None => maps.clone(),
            };
            let domain = match &spec.domain {
                Some(n) => lookup_set(n, at)?,
                None => default_domain.clone(),
            };
            let setting = Setting::new(m.clone(), check_maps)
                .with_domain(domain)
                .with_tolerances(tol);
            let scheme_name = spec.scheme.as_deref().unwrap_or("default");
            let scheme = schemes
                .get(scheme_name)
                .cloned()
                .ok_or_else(|| config(at, format!("unknown scheme '{scheme_name}'")))?;
            let descent = match &spec.descent {
                Some(n) => scenario
                    .descent
                    .get(n)
                    .cloned()
                    .ok_or_else(|| config(at, format!("unknown descent config '{n}'")))?,
                None => DescentConfig::default(),
            };
            let op = spec.op;

            let set = match op {
                Op::InvexSetFlat
                | Op::EfConvexSet
                | Op::ConvexSet
                | Op::GeodesicInvexSet
                | Op::Degeneration => Some(lookup_set(&need(&spec.set, "set", at)?, at)?),
                _ => None,
            };
            let field = match op {
                Op::InvexSetFlat
                | Op::EfConvexSet
                | Op::ConvexSet
                | Op::GeodesicInvexSet
                | Op::ConditionA
                | Op::SumPreinvex => None,
                Op::Degeneration => spec.field.as_deref().map(lookup_field).transpose()?,
                _ => Some(lookup_field(&need(&spec.field, "field", at)?)?),
            };
            let terms = match op {
                Op::SumPreinvex => need(&spec.terms, "terms", at)?
                    .iter()
                    .map(|t| Ok((t.weight, lookup_field(&t.field)?)))
                    .collect::<Result<Vec<_>>>()?,
                _ => Vec::new(),
            };
            if op == Op::LevelSetInvex {
                need(&spec.level, "level", at)?;
            }
            let base = match op {
                Op::ProximalSubgradient | Op::LinearizedBound | Op::SearchProximalSubgradient => {
                    Some(point(&need(&spec.base, "base", at)?, "base")?)
                }
                _ => None,
            };
            let cert = match op {
                Op::ProximalSubgradient | Op::LinearizedBound => Some(
                    ProximalCertificate::new(
                        &m,
                        base.as_ref().unwrap(),
                        need(&spec.sigma, "sigma", at)?,
                        need(&spec.lambda, "lambda", at)?,
                        need(&spec.mu, "mu", at)?,
                    )
                    .map_err(|e| config(at, e))?,
                ),
                Op::SearchProximalSubgradient => {
                    need(&spec.mu, "mu", at)?;
                    None
                }
                _ => None,
            };
            let start = match op {
                Op::Descent => Some(point(&need(&spec.start, "start", at)?, "start")?),
                _ => None,
            };
            let target = spec
                .target
                .as_ref()
                .map(|t| point(t, "target"))
                .transpose()?;
            if op == Op::Multistart {
                need(&spec.n_starts, "n_starts", at)?;
            }
            let pool = match op {
                Op::SolutionSet => match &spec.pool {
                    Some(ps) => Some(
                        ps.iter()
                            .map(|p| point(p, "pool"))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    None => {
                        need(&spec.n_starts, "n_starts or pool", at)?;
                        None
                    }
                },
                _ => None,
            };
            jobs.push(Job {
                spec: spec.clone(),
                setting,
                scheme,
                set,
                field,
                terms,
                descent,
                cert,
                base,
                start,
                target,
                pool,
            });
        }
        Ok(Self {
            manifold: m,
            scenario,
            jobs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Falsification,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Falsification => 2,
        }
    }
}

/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub op: Op,
    pub theorem: bool,
    pub expect: Expectation,
    pub met: bool,
    pub falsification: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solves: Vec<SolveResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub n_checks: usize,
    pub n_met: usize,
    pub n_falsifications: usize,
    pub n_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub version: String,
    pub seed: u64,
    pub status: Status,
    pub counters: Counters,
    pub checks: Vec<CheckOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock time; breaks byte-identity across runs.
    pub timing: bool,
}

fn solve_report(r: &SolveResult, target: Option<(&Manifold, &Point, f64)>) -> Result<CheckReport> {
    let mut rep = CheckReport::empty("geodesic_descent");
    rep.n_evaluated = r.iterations;
    rep.set_metric("value", r.value);
    rep.set_metric("iterations", r.iterations as f64);
    rep.set_metric("grad_norm", r.grad_norm);
    if !r.converged {
        rep.verdict = Verdict::Inconclusive;
        rep.notes
            .push(format!("stopped without convergence: {:?}", r.stop));
    }
    if let Some((m, t, tol)) = target {
        let d = m.distance(&m.point(r.minimizer.clone())?, t)?;
        rep.set_metric("target_distance", d);
        rep.max_gap = d - tol;
        if d > tol {
            rep.verdict = Verdict::Violated;
            rep.n_violations = 1;
            rep.witnesses.push(Witness {
                pair_index: 0,
                r1: r.minimizer.clone(),
                s1: t.coords().to_vec(),
                s: 0.0,
                lhs: d,
                rhs: tol,
                gap: d - tol,
                label: Some("minimizer far from target".into()),
            });
        }
    }
    Ok(rep)
}

fn execute(job: &Job) -> Result<(CheckReport, Vec<SolveResult>)> {
    let st = &job.setting;
    let m = &st.manifold;
    let sch = &job.scheme;
    let spec = &job.spec;
    let mode = spec.mode;
    let field = || job.field.as_ref().expect("resolved field");
    let set = || job.set.as_ref().expect("resolved set");
    let report = match spec.op {
        Op::InvexSetFlat => check_invex_set_flat(m, set(), &st.maps, sch)?,
        Op::EfConvexSet => check_ef_convex_set(m, set(), &st.maps.e, &st.maps.f, sch)?,
        Op::ConvexSet => check_convex_set(m, set(), sch)?,
        Op::GeodesicInvexSet => check_geodesic_invex_set(m, set(), &st.maps, sch)?,
        Op::Preinvex => check_preinvex(st, field(), sch, spec.strict)?,
        Op::ConvexFunction => check_convex_function(m, &st.domain, field(), sch)?,
        Op::InvexFunction => check_invex_function(st, field(), sch)?,
        Op::ConditionA => check_condition_a(m, &st.maps, sch)?,
        Op::Degeneration => check_degeneration(m, set(), &st.maps, job.field.as_ref(), sch)?,
        Op::SumPreinvex => check_sum_preinvex(st, &job.terms, sch, mode)?,
        Op::LevelSetInvex => {
            check_level_set_invex(st, field(), spec.level.expect("resolved level"), sch, mode)?
        }
        Op::PreinvexImpliesInvex => theorem_preinvex_implies_invex(st, field(), sch, mode)?,
        Op::InvexPlusAImpliesPreinvex => {
            theorem_invex_plus_a_implies_preinvex(st, field(), sch, mode)?
        }
        Op::ProximalSubgradient => {
            verify_proximal_subgradient(m, field(), job.cert.as_ref().unwrap(), sch)?
        }
        Op::SearchProximalSubgradient => {
            let grid = spec.lambda_grid.as_deref().unwrap_or(&DEFAULT_LAMBDA_GRID);
            let base = job.base.as_ref().unwrap();
            let mu = spec.mu.unwrap();
            let certs = search_proximal_subgradient(
                m,
                field(),
                base,
                grid,
                mu,
                st.tolerances.fd_step,
                sch,
            )?;
            let mut r = CheckReport::empty("search_proximal_subgradient");
            r.n_evaluated = certs.len();
            r.set_metric("n_certificates", certs.len() as f64);
            if let Some(l) = certs.iter().map(|c| c.lambda()).min_by(f64::total_cmp) {
                r.set_metric("min_lambda", l);
            }
            for c in &certs {
                r.notes.push(format!(
                    "sigma={:?} lambda={:?}",
                    c.sigma().comps(),
                    c.lambda()
                ));
            }
            if certs.is_empty() {
                r.verdict = Verdict::Violated;
                r.notes.push("no candidate certificate passed".into());
            }
            r.scheme = Some(sch.clone());
            r
        }
        Op::LinearizedBound => {
            match verify_linearized_bound(st, field(), job.cert.as_ref().unwrap(), sch) {
                Ok(mut r) => {
                    if mode == HarnessMode::Demonstrate {
                        r.falsification = false;
                    }
                    r
                }
                Err(Error::PremiseFailure(why)) => {
                    CheckReport::premise_failed("verify_linearized_bound", why, Vec::new())
                }
                Err(e) => return Err(e),
            }
        }
        Op::Descent => {
            let r = geodesic_descent(
                m,
                field(),
                job.start.as_ref().unwrap(),
                &job.descent,
                &st.domain,
                st.tolerances.fd_step,
            )?;
            let tol = spec.target_tol.unwrap_or(1e-6);
            let rep = solve_report(&r, job.target.as_ref().map(|t| (m, t, tol)))?;
            return Ok((rep, vec![r]));
        }
        Op::Multistart => {
            multistart_local_global(st, field(), spec.n_starts.unwrap(), &job.descent, sch, mode)?
        }
        Op::SolutionSet => {
            let h = field();
            let results = match &job.pool {
                Some(pool) => pool
                    .iter()
                    .map(|p| {
                        Ok(SolveResult {
                            minimizer: p.coords().to_vec(),
                            value: h.eval(m, p)?,
                            iterations: 0,
                            converged: true,
                            stop: StopReason::GradientTolerance,
                            grad_norm: f64::NAN,
                            trajectory: None,
                            values: None,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => multistart(st, h, spec.n_starts.unwrap(), &job.descent, sch)?,
            };
            solution_set_invex(st, h, &results, spec.tol_opt, sch)?
        }
    };
    Ok((report, Vec::new()))
}

fn run_job(job: &Job) -> CheckOutcome {
    let spec = &job.spec;
    let theorem = spec.op.is_theorem();
    let (report, solves, error) = match execute(job) {
        Ok((r, s)) => (Some(r), s, None),
        Err(e) => (None, Vec::new(), Some(e.to_string())),
    };
    let verdict = report.as_ref().map(|r| r.verdict);
    let falsification = theorem
        && spec.mode == HarnessMode::Enforce
        && report.as_ref().is_some_and(|r| r.any_falsification());
    CheckOutcome {
        id: spec.id.clone(),
        op: spec.op,
        theorem,
        expect: spec.expect,
        met: spec.expect.met(verdict),
        falsification,
        report,
        solves,
        error,
    }
}

impl Prepared {
    pub fn run(&self, opts: RunOptions) -> RunReport {
        let clock = Instant::now();
        let checks: Vec<CheckOutcome> = self.jobs.iter().map(run_job).collect();
        let n_falsifications = checks.iter().filter(|c| c.falsification).count();
        let n_met = checks.iter().filter(|c| c.met).count();
        let status = if n_falsifications > 0 {
            Status::Falsification
        } else if n_met == checks.len() {
            Status::Pass
        } else {
            Status::Fail
        };
        RunReport {
            scenario: self.scenario.name.clone(),
            version: VERSION.to_string(),
            seed: self.scenario.seed,
            status,
            counters: Counters {
                n_checks: checks.len(),
                n_met,
                n_falsifications,
                n_evaluated: checks
                    .iter()
                    .filter_map(|c| c.report.as_ref())
                    .map(|r| r.n_evaluated)
                    .sum(),
            },
            checks,
            wall_clock_ms: opts.timing.then(|| clock.elapsed().as_secs_f64() * 1e3),
        }
    }

    /// Re-evaluates one witness of check `index` in isolation and returns its gap.
    ///
    /// `None` when the check has no single-sample replay (descent, degeneration,
    /// pools, the radius sweep).
    pub fn replay(&self, index: usize, w: &Witness) -> Result<Option<f64>> {
        let job = self
            .jobs
            .get(index)
            .ok_or_else(|| Error::Config(format!("no check at index {index}")))?;
        let st = &job.setting;
        let m = &st.manifold;
        let tol = job.scheme.tol;
        let r1 = m.point(w.r1.clone())?;
        let s1 = m.point(w.s1.clone())?;
        let level_set;
        let sum;
        let check: Box<dyn SampledCheck + '_> = match job.spec.op {
            Op::InvexSetFlat => Box::new(InvexSetFlat {
                manifold: m,
                set: job.set.as_ref().unwrap(),
                maps: &st.maps,
                tol,
            }),
            Op::EfConvexSet => Box::new(EfConvexSet {
                manifold: m,
                set: job.set.as_ref().unwrap(),
                e: &st.maps.e,
                f: &st.maps.f,
                tol,
            }),
            Op::ConvexSet => Box::new(ConvexSet {
                manifold: m,
                set: job.set.as_ref().unwrap(),
                tol,
            }),
            Op::GeodesicInvexSet => Box::new(GeodesicInvexSet {
                manifold: m,
                set: job.set.as_ref().unwrap(),
                maps: &st.maps,
                tol,
            }),
            Op::LevelSetInvex => {
                level_set = SetPredicate::Intersection(vec![
                    st.domain.clone(),
                    SetPredicate::sublevel(
                        job.field.as_ref().unwrap().expr.clone(),
                        job.spec.level.unwrap(),
                    ),
                ]);
                Box::new(GeodesicInvexSet {
                    manifold: m,
                    set: &level_set,
                    maps: &st.maps,
                    tol,
                })
            }
            Op::Preinvex | Op::InvexPlusAImpliesPreinvex => Box::new(Preinvex {
                setting: st,
                field: job.field.as_ref().unwrap(),
                strict: job.spec.strict && job.spec.op == Op::Preinvex,
                tol,
            }),
            Op::SumPreinvex => {
                sum = ScalarField::new(FieldExpr::WeightedSum(
                    job.terms
                        .iter()
                        .map(|(w, h)| (*w, h.expr.clone()))
                        .collect(),
                ));
                Box::new(Preinvex {
                    setting: st,
                    field: &sum,
                    strict: false,
                    tol,
                })
            }
            Op::ConvexFunction => Box::new(ConvexFunction {
                manifold: m,
                domain: &st.domain,
                field: job.field.as_ref().unwrap(),
                tol,
            }),
            Op::InvexFunction | Op::PreinvexImpliesInvex => Box::new(InvexFunction {
                setting: st,
                field: job.field.as_ref().unwrap(),
                tol,
            }),
            Op::ConditionA => Box::new(ConditionA {
                manifold: m,
                maps: &st.maps,
                tol,
            }),
            Op::ProximalSubgradient => Box::new(ProximalInequality {
                manifold: m,
                field: job.field.as_ref().unwrap(),
                cert: job.cert.as_ref().unwrap(),
                tol,
            }),
            Op::Multistart => {
                let h = job.field.as_ref().unwrap();
                return Ok(Some(h.eval(m, &s1)? - h.eval(m, &r1)?));
            }
            Op::Degeneration
            | Op::SearchProximalSubgradient
            | Op::LinearizedBound
            | Op::Descent
            | Op::SolutionSet => return Ok(None),
        };
        match check.sample(&r1, &s1, w.s)? {
            SampleResult::Values(outs) => Ok(outs
                .iter()
                .find(|o| o.label.map(str::to_string) == w.label)
                .map(|o| o.gap)),
            SampleResult::Skipped | SampleResult::Inconclusive(_) => Ok(None),
        }
    }
}

/// Parses, resolves and runs a scenario file.
pub fn run_scenario(path: &std::path::Path, overrides: &[String]) -> Result<RunReport> {
    let prepared = Prepared::new(Scenario::load(path, overrides)?)?;
    Ok(prepared.run(RunOptions::default()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Text,
    #[value(alias = "csv-summary")]
    Csv,
}

pub fn emit_report(r: &RunReport, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(r).map_err(|e| config("json", e))?;
            s.push('\n');
            Ok(s)
        }
        Format::Text => Ok(text_report(r)),
        Format::Csv => csv_summary(r),
    }
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn write_check(out: &mut String, r: &CheckReport, depth: usize) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(
        out,
        "{pad}{} {}: evaluated={} skipped={} inconclusive={} violations={} max_gap={:?}",
        r.check,
        verdict_name(r.verdict),
        r.n_evaluated,
        r.n_skipped,
        r.n_inconclusive,
        r.n_violations,
        r.max_gap
    );
    if let Some(p) = &r.premise {
        let _ = writeln!(out, "{pad}  premise: {p:?}");
    }
    for (k, v) in &r.metrics {
        let _ = writeln!(out, "{pad}  {k} = {:?}", v.0);
    }
    for w in &r.witnesses {
        let _ = writeln!(
            out,
            "{pad}  witness #{} r1={:?} s1={:?} s={:?} lhs={:?} rhs={:?} gap={:?}{}",
            w.pair_index,
            w.r1,
            w.s1,
            w.s,
            w.lhs,
            w.rhs,
            w.gap,
            w.label
                .as_deref()
                .map(|l| format!(" [{l}]"))
                .unwrap_or_default()
        );
    }
    for n in &r.notes {
        let _ = writeln!(out, "{pad}  note: {n}");
    }
    for p in &r.parts {
        write_check(out, p, depth + 1);
    }
}

fn text_report(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} (seed {}, version {})",
        r.scenario, r.seed, r.version
    );
    let status = serde_json::to_value(&r.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let _ = writeln!(
        out,
        "status {status}: {}/{} expectations met, {} falsifications, {} samples evaluated",
        r.counters.n_met, r.counters.n_checks, r.counters.n_falsifications, r.counters.n_evaluated
    );
    if let Some(ms) = r.wall_clock_ms {
        let _ = writeln!(out, "wall clock {ms:?} ms");
    }
    for c in &r.checks {
        let _ = writeln!(
            out,
            "\n[{}] {} expect={:?} met={}{}",
            c.id,
            c.op.name(),
            c.expect,
            c.met,
            if c.falsification {
                " FALSIFICATION"
            } else {
                ""
            }
        );
        if let Some(e) = &c.error {
            let _ = writeln!(out, "  error: {e}");
        }
        if let Some(rep) = &c.report {
            write_check(&mut out, rep, 1);
        }
        for s in &c.solves {
            let _ = writeln!(
                out,
                "  solve: minimizer={:?} value={:?} iterations={} converged={} stop={:?}",
                s.minimizer, s.value, s.iterations, s.converged, s.stop
            );
        }
    }
    out
}

fn csv_summary(r: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| config("csv", e);
    w.write_record([
        "id",
        "op",
        "verdict",
        "expect",
        "met",
        "falsification",
        "n_evaluated",
        "n_skipped",
        "n_inconclusive",
        "n_violations",
        "max_gap",
        "error",
    ])
    .map_err(io)?;
    for c in &r.checks {
        let (verdict, counts, gap) = match &c.report {
            Some(rep) => (
                verdict_name(rep.verdict),
                [
                    rep.n_evaluated,
                    rep.n_skipped,
                    rep.n_inconclusive,
                    rep.n_violations,
                ]
                .map(|n| n.to_string()),
                format!("{:?}", rep.max_gap),
            ),
            None => (String::new(), [(); 4].map(|_| String::new()), String::new()),
        };
        let expect = serde_json::to_value(c.expect)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let mut row = vec![
            c.id.clone(),
            c.op.name(),
            verdict,
            expect,
            c.met.to_string(),
            c.falsification.to_string(),
        ];
        row.extend(counts);
        row.push(gap);
        row.push(c.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| config("csv", e))?;
    String::from_utf8(bytes).map_err(|e| config("csv", e))
}

/// Human-readable list of every descriptor and check operation.
pub fn catalog() -> String {
    let mut out = String::new();
    let _ = writeln!(out, "manifolds (manifold.kind):");
    let _ = writeln!(out, "  euclidean        dim");
    let _ = writeln!(out, "  sphere_cap       dim cap_center cap_radius (< pi/2)");
    let _ = writeln!(out, "  hyperboloid      dim");
    let _ = writeln!(out, "point maps (maps.e, maps.f):");
    let _ = writeln!(out, "  identity");
    let _ = writeln!(out, "  constant               point");
    let _ = writeln!(out, "  geodesic_contraction   center factor");
    let _ = writeln!(
        out,
        "  coordinate_affine      matrix offset (euclidean only)"
    );
    let _ = writeln!(out, "bi-maps (maps.g):");
    let _ = writeln!(out, "  log_based");
    let _ = writeln!(out, "  scaled_log             factor");
    let _ = writeln!(out, "  euclidean_difference   (euclidean only)");
    let _ = writeln!(out, "  custom_table           entries = [{{a, b, value}}]");
    let _ = writeln!(out, "scalar fields ([fields.NAME]):");
    let _ = writeln!(out, "  squared_distance       center");
    let _ = writeln!(out, "  distance               center");
    let _ = writeln!(out, "  linear_height          [direction]");
    let _ = writeln!(out, "  negated                field");
    let _ = writeln!(
        out,
        "  weighted_sum           terms = [{{weight >= 0, field}}]"
    );
    let _ = writeln!(out, "  product                left right");
    let _ = writeln!(out, "  indicator_extended     field domain");
    let _ = writeln!(
        out,
        "  options: differential = analytic | finite_difference, lsc = bool"
    );
    let _ = writeln!(out, "sets ([sets.NAME], domain):");
    let _ = writeln!(out, "  whole");
    let _ = writeln!(out, "  metric_ball            center radius");
    let _ = writeln!(out, "  sublevel               field level");
    let _ = writeln!(out, "  union                  members");
    let _ = writeln!(out, "  intersection           members");
    let _ = writeln!(out, "samplers ([schemes.NAME].sampler):");
    let _ = writeln!(out, "  uniform_ball           center radius");
    let _ = writeln!(out, "  explicit_list          points");
    let _ = writeln!(
        out,
        "checks ([[checks]] op, expect = holds | violated | inconclusive | error):"
    );
    for op in Op::ALL {
        let _ = writeln!(
            out,
            "  {:<30} {}{}",
            op.name(),
            op.args(),
            if op.is_theorem() {
                "  (theorem harness)"
            } else {
                ""
            }
        );
    }
    out
}
