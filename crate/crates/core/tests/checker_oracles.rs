//! Checker verdicts and witness gaps against brute-force and algebraic oracles.

use geoinvex::invexity::{
    check_condition_a, check_geodesic_invex_set, check_invex_function, check_invex_set_flat,
    check_level_set_invex, check_preinvex, check_sum_preinvex, HarnessMode, MapTriple,
    SampleScheme, Sampler, SetPredicate, Setting, Verdict,
};
use geoinvex::maps::{BiMap, FieldExpr, PointMap, ScalarField};
use geoinvex::subgradient::{
    search_proximal_subgradient, verify_linearized_bound, verify_proximal_subgradient,
    ProximalCertificate, DEFAULT_LAMBDA_GRID,
};
use geoinvex::{Error, Manifold};

fn e2() -> Manifold {
    Manifold::euclidean(2).unwrap()
}

fn lattice(step: f64, half: i32, keep: impl Fn(&[f64]) -> bool) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in -half..=half {
        for j in -half..=half {
            let p = vec![i as f64 * step, j as f64 * step];
            if keep(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn list(points: Vec<Vec<f64>>, s_grid: usize) -> SampleScheme {
    SampleScheme::new(1, s_grid, 0, Sampler::ExplicitList { points })
}

/// Counts `(pair, μ)` with `y + μ(x − y)` outside `inside`, over ordered pairs.
fn oracle_chord_exits(points: &[Vec<f64>], grid: &[f64], inside: impl Fn(&[f64]) -> bool) -> usize {
    let mut n = 0;
    for x in points {
        for y in points {
            for &mu in grid {
                let z: Vec<f64> = y
                    .iter()
                    .zip(x)
                    .map(|(yi, xi)| yi + mu * (xi - yi))
                    .collect();
                if !inside(&z) {
                    n += 1;
                }
            }
        }
    }
    n
}

fn diff_maps() -> MapTriple {
    MapTriple::identity(BiMap::EuclideanDifference)
}

#[test]
fn ball_is_invex_under_difference() {
    let m = e2();
    let pts = lattice(0.25, 4, |p| norm(p) <= 1.0);
    let sch = list(pts.clone(), 9);
    let ball = SetPredicate::ball(m.origin(), 1.0);
    let r = check_invex_set_flat(&m, &ball, &diff_maps(), &sch).unwrap();
    assert_eq!(
        oracle_chord_exits(&pts, &sch.grid(), |z| norm(z) <= 1.0 + 1e-8),
        0
    );
    assert_eq!(r.verdict, Verdict::HoldsOnSamples);
    assert_eq!(r.n_evaluated, pts.len() * pts.len() * 9);
}

#[test]
fn two_balls_violate_with_oracle_count() {
    let m = e2();
    let inside = |z: &[f64]| norm(&[z[0] - 2.0, z[1]]) <= 1.0 || norm(&[z[0] + 2.0, z[1]]) <= 1.0;
    let pts = lattice(0.5, 6, inside);
    let sch = list(pts.clone(), 5);
    let set = SetPredicate::Union(vec![
        SetPredicate::ball(m.point(vec![-2.0, 0.0]).unwrap(), 1.0),
        SetPredicate::ball(m.point(vec![2.0, 0.0]).unwrap(), 1.0),
    ]);
    let r = check_invex_set_flat(&m, &set, &diff_maps(), &sch).unwrap();
    let tol = sch.tol;
    let expected = oracle_chord_exits(&pts, &sch.grid(), |z| {
        norm(&[z[0] - 2.0, z[1]]) <= 1.0 + tol || norm(&[z[0] + 2.0, z[1]]) <= 1.0 + tol
    });
    assert!(expected > 0);
    assert_eq!(r.verdict, Verdict::Violated);
    assert_eq!(r.n_violations, expected);
    // a midpoint between the wells is among the witnesses' chords
    let w = &r.witnesses[0];
    let z: Vec<f64> =
        w.s1.iter()
            .zip(&w.r1)
            .map(|(y, x)| y + w.s * (x - y))
            .collect();
    assert!(!inside(&z));
}

#[test]
fn annulus_violates_with_oracle_count() {
    let m = e2();
    let inside = |z: &[f64]| (1.0..=2.0).contains(&norm(z));
    let pts = lattice(0.5, 4, inside);
    let sch = list(pts.clone(), 5);
    let annulus = SetPredicate::Intersection(vec![
        SetPredicate::ball(m.origin(), 2.0),
        SetPredicate::sublevel(
            FieldExpr::Negated(Box::new(FieldExpr::SquaredDistance(m.origin()))),
            -1.0,
        ),
    ]);
    let r = check_invex_set_flat(&m, &annulus, &diff_maps(), &sch).unwrap();
    // margins are in squared units for the inner boundary, so the oracle uses them too
    let tol = sch.tol;
    let expected = oracle_chord_exits(&pts, &sch.grid(), |z| {
        norm(z) - 2.0 <= tol && 1.0 - norm(z).powi(2) <= tol
    });
    assert_eq!(r.verdict, Verdict::Violated);
    assert_eq!(r.n_violations, expected);
}

#[test]
fn zero_bimap_never_moves() {
    let m = e2();
    let pts: Vec<_> = [[-2.0, 0.0], [2.5, 0.5], [1.5, -0.5]]
        .iter()
        .map(|p| m.point(p.to_vec()).unwrap())
        .collect();
    let set = SetPredicate::Union(vec![
        SetPredicate::ball(m.point(vec![-2.0, 0.0]).unwrap(), 1.0),
        SetPredicate::ball(m.point(vec![2.0, 0.0]).unwrap(), 1.0),
    ]);
    let maps = MapTriple::identity(BiMap::zero_table(&m, &pts));
    let sch = list(pts.iter().map(|p| p.coords().to_vec()).collect(), 11);
    let r = check_invex_set_flat(&m, &set, &maps, &sch).unwrap();
    assert_eq!(r.verdict, Verdict::HoldsOnSamples);
    assert_eq!(r.n_evaluated, 9 * 11);
}

fn uniform(radius: f64, seed: u64, m: &Manifold) -> SampleScheme {
    SampleScheme::new(
        200,
        11,
        seed,
        Sampler::UniformBall {
            center: m.origin().coords().to_vec(),
            radius,
        },
    )
}

#[test]
fn quadratic_preinvex_gaps_match_algebra() {
    let m = e2();
    let bowl = ScalarField::new(FieldExpr::SquaredDistance(m.origin()));
    let cap = ScalarField::new(FieldExpr::Negated(Box::new(FieldExpr::SquaredDistance(
        m.origin(),
    ))));
    let st = Setting::new(m.clone(), diff_maps());
    let sch = uniform(1.0, 8, &m);
    assert!(check_preinvex(&st, &bowl, &sch, false).unwrap().holds());
    let r = check_preinvex(&st, &cap, &sch, false).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(r.witnesses.iter().any(|w| w.s == 0.5));
    for w in &r.witnesses {
        let d2: f64 = w.r1.iter().zip(&w.s1).map(|(a, b)| (a - b).powi(2)).sum();
        let oracle = w.s * (1.0 - w.s) * d2;
        assert!((w.gap - oracle).abs() < 1e-12, "{} vs {}", w.gap, oracle);
    }
}

#[test]
fn quadratic_invex_gaps_match_algebra() {
    let m = e2();
    let bowl = ScalarField::new(FieldExpr::SquaredDistance(m.origin()));
    let cap = ScalarField::new(FieldExpr::Negated(Box::new(FieldExpr::SquaredDistance(
        m.origin(),
    ))));
    let st = Setting::new(m.clone(), diff_maps());
    let sch = uniform(1.0, 9, &m);
    let r = check_invex_function(&st, &bowl, &sch).unwrap();
    assert!(r.holds());
    let r = check_invex_function(&st, &cap, &sch).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    for w in &r.witnesses {
        let d2: f64 = w.r1.iter().zip(&w.s1).map(|(a, b)| (a - b).powi(2)).sum();
        assert!((w.gap - d2).abs() < 1e-12);
    }
}

#[test]
fn coincident_log_sample_is_zero_on_both_sides() {
    let m = Manifold::hyperboloid(2).unwrap();
    let h = ScalarField::new(FieldExpr::SquaredDistance(
        m.hyperboloid_lift(&[0.2, 0.1]).unwrap(),
    ));
    let p = m.hyperboloid_lift(&[0.5, -0.3]).unwrap();
    let st = Setting::new(m.clone(), MapTriple::identity(BiMap::LogBased));
    let r = check_invex_function(&st, &h, &list(vec![p.coords().to_vec()], 2)).unwrap();
    assert_eq!(r.n_evaluated, 1);
    assert_eq!(r.max_gap, 0.0);
}

#[test]
fn hyperboloid_ball_and_distance_hold_on_dense_samples() {
    let m = Manifold::hyperboloid(2).unwrap();
    let st = Setting::new(m.clone(), MapTriple::identity(BiMap::LogBased));
    let sch = SampleScheme::new(
        1000,
        21,
        2,
        Sampler::UniformBall {
            center: m.origin().coords().to_vec(),
            radius: 1.5,
        },
    );
    let ball = SetPredicate::ball(m.origin(), 1.5);
    assert!(check_geodesic_invex_set(&m, &ball, &st.maps, &sch)
        .unwrap()
        .holds());
    let d2 = ScalarField::new(FieldExpr::SquaredDistance(
        m.hyperboloid_lift(&[0.4, 0.0]).unwrap(),
    ));
    assert!(check_preinvex(&st, &d2, &sch, false).unwrap().holds());
    assert!(check_preinvex(&st, &d2, &sch, true).unwrap().holds());
}

#[test]
fn constant_f_never_violates_at_start() {
    let m = Manifold::hyperboloid(2).unwrap();
    let p0 = m.hyperboloid_lift(&[0.1, 0.1]).unwrap();
    let maps = MapTriple::new(
        PointMap::Identity,
        PointMap::Constant(p0),
        BiMap::ScaledLog(3.0),
    );
    let ball = SetPredicate::ball(m.origin(), 1.0);
    let r = check_geodesic_invex_set(&m, &ball, &maps, &uniform(1.0, 4, &m)).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(r.witnesses.iter().all(|w| w.s > 0.0));
}

#[test]
fn euclidean_annulus_is_not_geodesic_invex() {
    let m = e2();
    let annulus = SetPredicate::Intersection(vec![
        SetPredicate::ball(m.origin(), 2.0),
        SetPredicate::sublevel(
            FieldExpr::Negated(Box::new(FieldExpr::SquaredDistance(m.origin()))),
            -1.0,
        ),
    ]);
    let r = check_geodesic_invex_set(&m, &annulus, &diff_maps(), &uniform(2.0, 5, &m)).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
}

/// Reparameterized-geodesic algebra: with `G = c·log`, both transported sides
/// differ from the required value by `c |c − 1| s d(E, F)`.
#[test]
fn scaled_log_condition_a_gap_matches_algebra() {
    let m = Manifold::hyperboloid(2).unwrap();
    let c = 2.0;
    let maps = MapTriple::identity(BiMap::ScaledLog(c));
    let sch = SampleScheme::new(
        100,
        6,
        12,
        Sampler::UniformBall {
            center: m.origin().coords().to_vec(),
            radius: 0.8,
        },
    );
    let r = check_condition_a(&m, &maps, &sch).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(!r.witnesses.is_empty());
    for w in &r.witnesses {
        let d = m
            .distance(
                &m.point(w.r1.clone()).unwrap(),
                &m.point(w.s1.clone()).unwrap(),
            )
            .unwrap();
        let oracle = c * (c - 1.0) * w.s * d;
        assert!((w.gap - oracle).abs() < 1e-9, "{} vs {}", w.gap, oracle);
    }
    let exact = check_condition_a(&m, &MapTriple::identity(BiMap::LogBased), &sch).unwrap();
    assert!(exact.holds());
    assert!(exact.max_gap < 1e-9);
}

#[test]
fn difference_satisfies_condition_a() {
    let m = e2();
    let r = check_condition_a(&m, &diff_maps(), &uniform(2.0, 6, &m)).unwrap();
    assert!(r.holds());
}

#[test]
fn sum_with_zero_weight_reduces_to_first_term() {
    let m = e2();
    let st = Setting::new(m.clone(), diff_maps());
    let sch = uniform(1.0, 3, &m);
    let f = ScalarField::new(FieldExpr::Negated(Box::new(FieldExpr::SquaredDistance(
        m.origin(),
    ))));
    let g = ScalarField::new(FieldExpr::SquaredDistance(m.point(vec![1.0, 0.0]).unwrap()));
    let sum = check_sum_preinvex(
        &st,
        &[(1.0, f.clone()), (0.0, g)],
        &sch,
        HarnessMode::Demonstrate,
    )
    .unwrap();
    let alone = check_preinvex(&st, &f, &sch, false).unwrap();
    assert_eq!(sum.verdict, alone.verdict);
    assert_eq!(sum.witnesses, alone.witnesses);
    assert!(!sum.falsification);

    let empty = check_sum_preinvex(&st, &[], &sch, HarnessMode::Enforce).unwrap();
    assert!(empty.holds());
    assert!(check_sum_preinvex(&st, &[(-1.0, f)], &sch, HarnessMode::Enforce).is_err());
}

#[test]
fn level_below_minimum_is_vacuous() {
    let m = Manifold::hyperboloid(2).unwrap();
    let st = Setting::new(m.clone(), MapTriple::identity(BiMap::LogBased));
    let d2 = ScalarField::new(FieldExpr::SquaredDistance(m.origin()));
    let r =
        check_level_set_invex(&st, &d2, -0.5, &uniform(1.0, 7, &m), HarnessMode::Enforce).unwrap();
    assert!(r.holds());
    assert_eq!(r.n_evaluated, 0);
    let r =
        check_level_set_invex(&st, &d2, 1.0, &uniform(1.5, 7, &m), HarnessMode::Enforce).unwrap();
    assert!(r.holds());
    assert!(r.n_evaluated > 0);
}

fn prox_scheme(center: &[f64]) -> SampleScheme {
    SampleScheme::new(
        400,
        2,
        21,
        Sampler::UniformBall {
            center: center.to_vec(),
            radius: 1.0,
        },
    )
}

#[test]
fn proximal_convex_case() {
    let m = e2();
    let y = m.point(vec![0.5, -0.3]).unwrap();
    let h = ScalarField::new(FieldExpr::SquaredDistance(m.origin()));
    for mu in [0.1, 1.0, 3.0] {
        let cert = ProximalCertificate::new(&m, &y, vec![1.0, -0.6], 0.0, mu).unwrap();
        let r = verify_proximal_subgradient(&m, &h, &cert, &prox_scheme(y.coords())).unwrap();
        assert!(r.holds());
    }
}

#[test]
fn proximal_concave_threshold() {
    let m = e2();
    let y = m.point(vec![0.5, -0.3]).unwrap();
    let h = ScalarField::new(FieldExpr::Negated(Box::new(FieldExpr::SquaredDistance(
        m.origin(),
    ))));
    let sch = prox_scheme(y.coords());
    let at = ProximalCertificate::new(&m, &y, vec![-1.0, 0.6], 1.0, 1.0).unwrap();
    let r = verify_proximal_subgradient(&m, &h, &at, &sch).unwrap();
    assert!(r.holds());
    assert!(r.max_gap.abs() < 1e-12);
    let below = ProximalCertificate::new(&m, &y, vec![-1.0, 0.6], 0.9, 1.0).unwrap();
    let r = verify_proximal_subgradient(&m, &h, &below, &sch).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    for w in &r.witnesses {
        let d2: f64 = w.r1.iter().zip(&w.s1).map(|(a, b)| (a - b).powi(2)).sum();
        assert!((w.gap - 0.1 * d2).abs() < 1e-12);
    }
    let found =
        search_proximal_subgradient(&m, &h, &y, &DEFAULT_LAMBDA_GRID, 1.0, 1e-5, &sch).unwrap();
    assert!(!found.is_empty());
    assert!(found.iter().all(|c| c.lambda() >= 1.0));
}

#[test]
fn proximal_norm_steep_sigma_fails() {
    let m = e2();
    let h = ScalarField::new(FieldExpr::Distance(m.origin()));
    let sch = prox_scheme(&[0.0, 0.0]);
    let steep = ProximalCertificate::new(&m, &m.origin(), vec![1.2, 0.0], 0.0, 1.0).unwrap();
    let r = verify_proximal_subgradient(&m, &h, &steep, &sch).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    for w in &r.witnesses {
        let oracle = 1.2 * w.r1[0] - norm(&w.r1);
        assert!((w.gap - oracle).abs() < 1e-12);
    }
    // the probe x = μσ/(2|σ|) is always among the samples
    assert!(r.max_gap >= 0.5 * (1.2 - 1.0) - 1e-12);
    let flat = ProximalCertificate::new(&m, &m.origin(), vec![0.6, 0.3], 0.0, 1.0).unwrap();
    assert!(verify_proximal_subgradient(&m, &h, &flat, &sch)
        .unwrap()
        .holds());
}

#[test]
fn smooth_convex_search_finds_gradient_with_zero_lambda() {
    let m = e2();
    let y = m.point(vec![0.5, -0.3]).unwrap();
    let h = ScalarField::new(FieldExpr::SquaredDistance(m.origin()));
    let found = search_proximal_subgradient(
        &m,
        &h,
        &y,
        &DEFAULT_LAMBDA_GRID,
        1.0,
        1e-5,
        &prox_scheme(y.coords()),
    )
    .unwrap();
    let first = &found[0];
    assert_eq!(first.lambda(), 0.0);
    assert!((first.sigma().comps()[0] - 1.0).abs() < 1e-12);
    assert!((first.sigma().comps()[1] + 0.6).abs() < 1e-12);
}

#[test]
fn downward_spike_has_no_certificate() {
    let m = e2();
    let h = ScalarField::new(FieldExpr::Negated(Box::new(FieldExpr::Distance(
        m.origin(),
    ))));
    let found = search_proximal_subgradient(
        &m,
        &h,
        &m.origin(),
        &DEFAULT_LAMBDA_GRID,
        1.0,
        1e-5,
        &prox_scheme(&[0.0, 0.0]),
    )
    .unwrap();
    assert!(found.is_empty());
}

#[test]
fn linearized_bound_guards_and_examples() {
    let cap = Manifold::sphere_cap(2, &[0.0, 0.0, 1.0], 1.0).unwrap();
    let st = Setting::new(cap.clone(), MapTriple::identity(BiMap::LogBased));
    let h = ScalarField::new(FieldExpr::SquaredDistance(cap.origin()));
    let cert = ProximalCertificate::new(&cap, &cap.origin(), vec![0.0; 3], 0.0, 0.5).unwrap();
    match verify_linearized_bound(&st, &h, &cert, &uniform(0.5, 1, &cap)) {
        Err(Error::PremiseFailure(why)) => assert!(why.contains("not Hadamard"), "{why}"),
        other => panic!("expected a premise failure, got {other:?}"),
    }

    let m = Manifold::hyperboloid(2).unwrap();
    let st = Setting::new(m.clone(), MapTriple::identity(BiMap::LogBased));
    let p0 = m.origin();
    let h = ScalarField::new(FieldExpr::SquaredDistance(p0.clone()));
    let sch = uniform(1.0, 2, &m);
    let cert = ProximalCertificate::new(&m, &p0, vec![0.0; 3], 0.0, 0.5).unwrap();
    let r = verify_linearized_bound(&st, &h, &cert, &sch).unwrap();
    assert!(r.holds());
    assert_eq!(r.metric("mu_passing"), Some(0.5));

    let base = m.hyperboloid_lift(&[0.3, 0.0]).unwrap();
    let grad = h.gradient(&m, &base, 1e-5).unwrap();
    let cert = ProximalCertificate::new(&m, &base, grad.comps().to_vec(), 0.0, 0.5).unwrap();
    let local = SampleScheme::new(
        300,
        2,
        3,
        Sampler::UniformBall {
            center: base.coords().to_vec(),
            radius: 0.5,
        },
    );
    let r = verify_linearized_bound(&st, &h, &cert, &local).unwrap();
    assert!(r.holds());
    assert!(!r.any_falsification());
}
