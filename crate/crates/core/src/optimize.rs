//! Geodesic descent, the multistart harness comparing local minima, and the
//! solution-set check.
//!
//! Feasibility is kept by rejecting steps that leave `B` and halving them;
//! projection onto a general set predicate is not available.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point, TangentVector};
use crate::invexity::checks::{check_geodesic_invex_set, check_preinvex, Setting};
use crate::invexity::report::{CheckReport, Verdict, Witness};
use crate::invexity::scheme::{SampleScheme, Sampler};
use crate::invexity::sets::SetPredicate;
use crate::invexity::theorems::{conclude, HarnessMode};
use crate::maps::ScalarField;
use crate::subgradient::{search_proximal_subgradient, DEFAULT_LAMBDA_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepPolicy {
    Fixed {
        eta: f64,
    },
    /// Armijo backtracking from `initial`.
    Backtracking {
        #[serde(default = "one")]
        initial: f64,
        shrink: f64,
        armijo: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_halvings() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentConfig {
    pub step: StepPolicy,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Use verified proximal certificates instead of the gradient, with `η/√k` steps.
    #[serde(default)]
    pub subgradient_mode: bool,
    #[serde(default)]
    pub keep_trajectory: bool,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            step: StepPolicy::Backtracking {
                initial: 1.0,
                shrink: 0.5,
                armijo: 1e-4,
            },
            max_iters: 10_000,
            grad_tol: 1e-9,
            subgradient_mode: false,
            keep_trajectory: false,
            max_halvings: default_halvings(),
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.step {
            StepPolicy::Fixed { eta } => eta > 0.0,
            StepPolicy::Backtracking {
                initial,
                shrink,
                armijo,
            } => initial > 0.0 && shrink > 0.0 && shrink < 1.0 && armijo > 0.0 && armijo < 1.0,
        };
        if !ok {
            return Err(Error::Config(format!(
                "invalid step policy {:?}",
                self.step
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config("grad_tol must be positive".into()));
        }
        Ok(())
    }

    fn base_step(&self) -> f64 {
        match self.step {
            StepPolicy::Fixed { eta } => eta,
            StepPolicy::Backtracking { initial, .. } => initial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    /// No acceptable step after the allowed halvings.
    StepCollapse,
    /// Nonsmooth mode found no verified certificate.
    NoDescentDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub minimizer: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    #[serde(with = "crate::invexity::report::ext_f64")]
    pub grad_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SolveResult {
    /// `Err(StallWithoutConvergence)` unless the run converged.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::StallWithoutConvergence {
                iterations: self.iterations,
            })
        }
    }
}

struct Direction {
    vector: TangentVector,
    norm: f64,
}

fn descent_direction(
    m: &Manifold,
    h: &ScalarField,
    x: &Point,
    cfg: &DescentConfig,
    fd_step: f64,
    iteration: usize,
) -> Result<Option<Direction>> {
    if !cfg.subgradient_mode {
        match h.gradient(m, x, fd_step) {
            Ok(g) => {
                let norm = m.norm(&g);
                return Ok(Some(Direction { vector: g, norm }));
            }
            Err(Error::NonDifferentiable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mu = cfg.base_step().max(1e-3);
    let sch = SampleScheme::new(
        64,
        2,
        iteration as u64,
        Sampler::UniformBall {
            center: x.coords().to_vec(),
            radius: mu,
        },
    );
    let certs = search_proximal_subgradient(m, h, x, &DEFAULT_LAMBDA_GRID, mu, fd_step, &sch)?;
    Ok(certs.into_iter().next().map(|c| {
        let norm = m.norm(c.sigma());
        Direction {
            vector: c.sigma().clone(),
            norm,
        }
    }))
}

/// Iterates `x ← exp_x(−t · grad H(x))` inside `B`.
///
/// Accepted iterates never increase `H` and never leave `B`.
pub fn geodesic_descent(
    m: &Manifold,
    h: &ScalarField,
    start: &Point,
    cfg: &DescentConfig,
    feasible: &SetPredicate,
    fd_step: f64,
) -> Result<SolveResult> {
    cfg.validate()?;
    if !feasible.contains(m, start)? {
        return Err(Error::InfeasibleStart("start lies outside B".into()));
    }
    let mut value = h.eval(m, start)?;
    if !value.is_finite() {
        return Err(Error::InfeasibleStart("start lies outside dom(h)".into()));
    }
    let mut x = start.clone();
    let mut trajectory = cfg.keep_trajectory.then(|| vec![x.coords().to_vec()]);
    let mut values = cfg.keep_trajectory.then(|| vec![value]);
    let mut grad_norm = f64::NAN;

    let finish = |x: Point, value, iterations, stop, grad_norm, trajectory, values| SolveResult {
        minimizer: x.into_coords(),
        value,
        iterations,
        converged: stop == StopReason::GradientTolerance,
        stop,
        grad_norm,
        trajectory,
        values,
    };

    for k in 0..cfg.max_iters {
        let Some(dir) = descent_direction(m, h, &x, cfg, fd_step, k)? else {
            return Ok(finish(
                x,
                value,
                k,
                StopReason::NoDescentDirection,
                grad_norm,
                trajectory,
                values,
            ));
        };
        grad_norm = dir.norm;
        if dir.norm < cfg.grad_tol {
            return Ok(finish(
                x,
                value,
                k,
                StopReason::GradientTolerance,
                grad_norm,
                trajectory,
                values,
            ));
        }
        let mut t = cfg.base_step();
        if cfg.subgradient_mode {
            t /= ((k + 1) as f64).sqrt();
        }
        let (shrink, armijo) = match cfg.step {
            StepPolicy::Fixed { .. } => (0.5, 0.0),
            StepPolicy::Backtracking { shrink, armijo, .. } => (shrink, armijo),
        };
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let candidate = match m.exp_map(&x, &dir.vector.scaled(-t)) {
                Ok(p) => Some(p),
                Err(Error::OutOfChart(_)) => None,
                Err(e) => return Err(e),
            };
            if let Some(p) = candidate {
                if feasible.contains(m, &p)? {
                    let v = h.eval(m, &p)?;
                    if v <= value - armijo * t * dir.norm * dir.norm {
                        accepted = Some((p, v));
                        break;
                    }
                }
            }
            t *= shrink;
        }
        let Some((p, v)) = accepted else {
            return Ok(finish(
                x,
                value,
                k,
                StopReason::StepCollapse,
                grad_norm,
                trajectory,
                values,
            ));
        };
        x = p;
        value = v;
        if let Some(tr) = trajectory.as_mut() {
            tr.push(x.coords().to_vec());
        }
        if let Some(vs) = values.as_mut() {
            vs.push(value);
        }
        if cfg.subgradient_mode && t * dir.norm < cfg.grad_tol {
            return Ok(finish(
                x,
                value,
                k + 1,
                StopReason::GradientTolerance,
                grad_norm,
                trajectory,
                values,
            ));
        }
    }
    Ok(finish(
        x,
        value,
        cfg.max_iters,
        StopReason::MaxIterations,
        grad_norm,
        trajectory,
        values,
    ))
}

/// Up to `n` sampled points of `B`, in sampling order.
fn feasible_starts(setting: &Setting, n: usize, sch: &SampleScheme) -> Result<Vec<Point>> {
    let m = &setting.manifold;
    let wide = SampleScheme {
        n_pairs: n.max(1) * 8,
        ..sch.clone()
    };
    let mut out = Vec::with_capacity(n);
    for p in wide.draw_points(m)? {
        if out.len() == n {
            break;
        }
        if setting.domain.contains(m, &p)? {
            out.push(p);
        }
    }
    Ok(out)
}

/// Runs descent from several feasible starts and compares the optimal values.
///
/// Premise: `H` preinvex on the scheme. The spread of values among converged
/// runs must not exceed `tolerances.spread`; the best and worst minimizers are
/// the witness otherwise.
pub fn multistart_local_global(
    setting: &Setting,
    h: &ScalarField,
    n_starts: usize,
    cfg: &DescentConfig,
    sch: &SampleScheme,
    mode: HarnessMode,
) -> Result<CheckReport> {
    let premises = vec![("field preinvex", check_preinvex(setting, h, sch, false)?)];
    conclude("multistart_local_global", premises, mode, || {
        let results = multistart(setting, h, n_starts, cfg, sch)?;
        Ok(spread_report(&results, setting.tolerances.spread))
    })
}

/// Descent from `n_starts` feasible seeds, in seed order.
pub fn multistart(
    setting: &Setting,
    h: &ScalarField,
    n_starts: usize,
    cfg: &DescentConfig,
    sch: &SampleScheme,
) -> Result<Vec<SolveResult>> {
    let m = &setting.manifold;
    let starts = feasible_starts(setting, n_starts, sch)?;
    let fd = setting.tolerances.fd_step;
    starts
        .par_iter()
        .map(|s| geodesic_descent(m, h, s, cfg, &setting.domain, fd))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn spread_report(results: &[SolveResult], tol_spread: f64) -> CheckReport {
    let mut report = CheckReport::empty("multistart_spread");
    let converged: Vec<&SolveResult> = results.iter().filter(|r| r.converged).collect();
    report.n_evaluated = converged.len();
    report.n_inconclusive = results.len() - converged.len();
    report.set_metric("n_starts", results.len() as f64);
    report.set_metric("n_converged", converged.len() as f64);
    if converged.is_empty() {
        report.verdict = if results.is_empty() {
            Verdict::HoldsOnSamples
        } else {
            Verdict::Inconclusive
        };
        report.notes.push("no converged runs".into());
        return report;
    }
    let best = converged
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    let worst = converged
        .iter()
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    let spread = worst.value - best.value;
    report.max_gap = spread;
    report.set_metric("spread", spread);
    report.set_metric("best_value", best.value);
    if converged.len() < 2 {
        report
            .notes
            .push("vacuous: fewer than two converged runs".into());
    }
    if spread > tol_spread {
        report.verdict = Verdict::Violated;
        report.n_violations = 1;
        report.witnesses.push(Witness {
            pair_index: 0,
            r1: best.minimizer.clone(),
            s1: worst.minimizer.clone(),
            s: 0.0,
            lhs: worst.value,
            rhs: best.value,
            gap: spread,
            label: Some("discordant minimizers".into()),
        });
    } else {
        report.verdict = Verdict::HoldsOnSamples;
    }
    report
}

/// Checks that the near-optimal pool is geodesic `(E,F)`-invex and, for a
/// strictly preinvex `H`, that it has diameter below `tolerances.diameter`.
///
/// The pool is every result within `tol_opt` of the best value, with
/// `tol_opt` defaulting to `opt_rel · (1 + |best|)`.
pub fn solution_set_invex(
    setting: &Setting,
    h: &ScalarField,
    results: &[SolveResult],
    tol_opt: Option<f64>,
    sch: &SampleScheme,
) -> Result<CheckReport> {
    let m = &setting.manifold;
    let Some(best) = results.iter().map(|r| r.value).min_by(f64::total_cmp) else {
        let mut r = CheckReport::empty("solution_set_invex");
        r.notes.push("vacuous: empty pool".into());
        return Ok(r);
    };
    let tol_opt = tol_opt.unwrap_or(setting.tolerances.opt_rel * (1.0 + best.abs()));
    let pool: Vec<Point> = results
        .iter()
        .filter(|r| r.value <= best + tol_opt)
        .map(|r| m.point(r.minimizer.clone()))
        .collect::<Result<_>>()?;

    let level = SetPredicate::Intersection(vec![
        setting.domain.clone(),
        SetPredicate::sublevel(h.expr.clone(), best + tol_opt),
    ]);
    let pool_scheme = SampleScheme {
        sampler: Sampler::ExplicitList {
            points: pool.iter().map(|p| p.coords().to_vec()).collect(),
        },
        n_pairs: pool.len() * pool.len(),
        ..sch.clone()
    };
    let mut report = check_geodesic_invex_set(m, &level, &setting.maps, &pool_scheme)?;
    report.check = "solution_set_invex".into();

    let strict = check_preinvex(setting, h, sch, true)?.holds();
    let mut diam = 0.0f64;
    let mut far = (0, 0);
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            let d = m.distance(&pool[i], &pool[j])?;
            if d > diam {
                diam = d;
                far = (i, j);
            }
        }
    }
    report.set_metric("pool_size", pool.len() as f64);
    report.set_metric("pool_diameter", diam);
    report.set_metric("best_value", best);
    report.set_metric("tol_opt", tol_opt);
    report.set_metric("strict", if strict { 1.0 } else { 0.0 });
    if strict && diam >= setting.tolerances.diameter {
        report.verdict = Verdict::Violated;
        report.n_violations += 1;
        report.max_gap = report.max_gap.max(diam - setting.tolerances.diameter);
        report.witnesses.push(Witness {
            pair_index: 0,
            r1: pool[far.0].coords().to_vec(),
            s1: pool[far.1].coords().to_vec(),
            s: 0.0,
            lhs: diam,
            rhs: setting.tolerances.diameter,
            gap: diam - setting.tolerances.diameter,
            label: Some("strict pool diameter".into()),
        });
        report
            .notes
            .push("strictly preinvex objective with a spread-out pool: check tol_opt".into());
    }
    Ok(report)
}
