use geoinvex::invexity::report::{SampleResult, SampledCheck};
use geoinvex::invexity::{
    check_condition_a, check_preinvex, checks::Preinvex, MapTriple, SampleScheme, Sampler,
    SetPredicate, Setting, Verdict,
};
use geoinvex::maps::{finite_difference_gradient, BiMap, FieldExpr, ScalarField};
use geoinvex::optimize::{geodesic_descent, DescentConfig, StepPolicy};
use geoinvex::subgradient::{verify_proximal_subgradient, ProximalCertificate};
use geoinvex::{Manifold, Point};
use proptest::prelude::*;

fn manifolds() -> Vec<Manifold> {
    vec![
        Manifold::euclidean(3).unwrap(),
        Manifold::sphere_cap(2, &[0.0, 0.0, 1.0], 1.2).unwrap(),
        Manifold::hyperboloid(2).unwrap(),
    ]
}

/// A point of `m` from three numbers in `[-1, 1]`, staying well inside every chart.
fn point_of(m: &Manifold, u: [f64; 3]) -> Point {
    match m.kind() {
        geoinvex::ManifoldKind::Euclidean => m.point(u.iter().map(|x| 2.0 * x).collect()).unwrap(),
        geoinvex::ManifoldKind::SphereCap => {
            let (x, y) = (0.6 * u[0], 0.6 * u[1]);
            m.point(vec![x, y, (1.0 - x * x - y * y).sqrt()]).unwrap()
        }
        geoinvex::ManifoldKind::Hyperboloid => {
            m.hyperboloid_lift(&[1.5 * u[0], 1.5 * u[1]]).unwrap()
        }
    }
}

fn unit3() -> impl Strategy<Value = [f64; 3]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exp_inverts_log(a in unit3(), b in unit3()) {
        for m in manifolds() {
            let p = point_of(&m, a);
            let q = point_of(&m, b);
            let v = m.log_map(&p, &q).unwrap();
            let back = m.exp_map(&p, &v).unwrap();
            prop_assert!(max_diff(back.coords(), q.coords()) < 1e-9);
            prop_assert!((m.norm(&v) - m.distance(&p, &q).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn transport_is_an_isometry(a in unit3(), b in unit3(), w in unit3(), z in unit3(), s in 0.0..=1.0f64) {
        for m in manifolds() {
            let p = point_of(&m, a);
            let q = point_of(&m, b);
            let seg = m.segment_between(&p, &q).unwrap();
            let amb = |u: [f64; 3]| {
                let mut c = u.to_vec();
                c.resize(m.ambient_dim(), 0.0);
                m.project_tangent(&p, &c).unwrap()
            };
            let (w, z) = (amb(w), amb(z));
            let tw = m.parallel_transport(&w, &seg, s).unwrap();
            let tz = m.parallel_transport(&z, &seg, s).unwrap();
            prop_assert!((m.inner(&tw, &tz) - m.inner(&w, &z)).abs() < 1e-9);
            let back = m.inverse_transport(&tw, &seg, s).unwrap();
            prop_assert!(max_diff(back.comps(), w.comps()) < 1e-9);
        }
    }

    #[test]
    fn distance_is_a_metric(a in unit3(), b in unit3(), c in unit3()) {
        for m in manifolds() {
            let (p, q, r) = (point_of(&m, a), point_of(&m, b), point_of(&m, c));
            let d = |x: &Point, y: &Point| m.distance(x, y).unwrap();
            prop_assert!(d(&p, &p) < 1e-7);
            prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-9);
            prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-9);
        }
    }

    #[test]
    fn geodesic_points_split_distance(a in unit3(), b in unit3(), s in 0.0..=1.0f64) {
        for m in manifolds() {
            let (p, q) = (point_of(&m, a), point_of(&m, b));
            let x = m.geodesic_eval(&m.segment_between(&p, &q).unwrap(), s).unwrap();
            let d = m.distance(&p, &q).unwrap();
            prop_assert!((m.distance(&p, &x).unwrap() - s * d).abs() < 1e-7);
            prop_assert!((m.distance(&x, &q).unwrap() - (1.0 - s) * d).abs() < 1e-7);
        }
    }

    #[test]
    fn bimaps_land_in_the_tangent_space_at_the_second_point(a in unit3(), b in unit3(), c in 0.1..3.0f64) {
        for m in manifolds() {
            let (p, q) = (point_of(&m, a), point_of(&m, b));
            for g in [BiMap::LogBased, BiMap::ScaledLog(c)] {
                let v = g.eval(&m, &p, &q).unwrap();
                prop_assert_eq!(v.base(), &q);
                let proj = m.project_tangent(&q, v.comps()).unwrap();
                prop_assert!(max_diff(proj.comps(), v.comps()) < 1e-10 * (1.0 + m.norm(&v)));
            }
        }
    }

    #[test]
    fn weighted_sums_are_linear(a in unit3(), c1 in -2.0..2.0f64, c2 in -2.0..2.0f64) {
        for m in manifolds() {
            let x = point_of(&m, a);
            let f = FieldExpr::SquaredDistance(m.origin());
            let g = FieldExpr::Distance(point_of(&m, [0.3, -0.2, 0.1]));
            let sum = ScalarField::new(FieldExpr::WeightedSum(vec![(c1, f.clone()), (c2, g.clone())]));
            let (vf, vg) = (f.eval(&m, &x).unwrap(), g.eval(&m, &x).unwrap());
            prop_assert!((sum.eval(&m, &x).unwrap() - (c1 * vf + c2 * vg)).abs() < 1e-12);
            if let (Ok(gf), Ok(gg)) = (f.gradient(&m, &x), g.gradient(&m, &x)) {
                let gs = sum.gradient(&m, &x, 1e-5).unwrap();
                let lin: Vec<f64> = gf.comps().iter().zip(gg.comps()).map(|(u, v)| c1 * u + c2 * v).collect();
                prop_assert!(max_diff(gs.comps(), &lin) < 1e-12);
            }
        }
    }

    #[test]
    fn finite_differences_match_analytic_gradients(a in unit3()) {
        for m in manifolds() {
            let x = point_of(&m, a);
            let h = ScalarField::new(FieldExpr::WeightedSum(vec![
                (1.0, FieldExpr::SquaredDistance(point_of(&m, [0.4, 0.1, -0.5]))),
                (0.5, FieldExpr::Product(
                    Box::new(FieldExpr::SquaredDistance(m.origin())),
                    Box::new(FieldExpr::SquaredDistance(point_of(&m, [-0.3, 0.2, 0.0]))),
                )),
            ]));
            let exact = h.gradient(&m, &x, 1e-5).unwrap();
            let fd = finite_difference_gradient(&h, &m, &x, 1e-5).unwrap();
            prop_assert!(max_diff(exact.comps(), fd.comps()) < 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn witnesses_replay_exactly(seed in 0u64..1000) {
        let m = Manifold::hyperboloid(2).unwrap();
        let st = Setting::new(m.clone(), MapTriple::identity(BiMap::LogBased));
        let h = ScalarField::new(FieldExpr::Negated(Box::new(FieldExpr::SquaredDistance(m.origin()))));
        let sch = SampleScheme::new(50, 7, seed, Sampler::UniformBall {
            center: m.origin().coords().to_vec(),
            radius: 1.0,
        });
        let r = check_preinvex(&st, &h, &sch, false).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Violated);
        let check = Preinvex { setting: &st, field: &h, strict: false, tol: sch.tol };
        for w in &r.witnesses {
            let out = check.sample(&m.point(w.r1.clone()).unwrap(), &m.point(w.s1.clone()).unwrap(), w.s).unwrap();
            let SampleResult::Values(outs) = out else { panic!("witness no longer evaluates") };
            prop_assert!(outs.iter().any(|o| (o.gap - w.gap).abs() <= 1e-12 * w.gap.abs().max(1.0)));
        }
    }

    #[test]
    fn refinement_never_loses_violations(seed in 0u64..1000, n in 2usize..6, pairs in 5usize..40) {
        let m = Manifold::hyperboloid(2).unwrap();
        let maps = MapTriple::identity(BiMap::ScaledLog(1.3));
        let scheme = |n_pairs: usize, grid: usize| SampleScheme::new(n_pairs, grid, seed, Sampler::UniformBall {
            center: m.origin().coords().to_vec(),
            radius: 0.7,
        });
        let coarse = check_condition_a(&m, &maps, &scheme(pairs, n)).unwrap();
        let finer_grid = check_condition_a(&m, &maps, &scheme(pairs, 2 * n - 1)).unwrap();
        let more_pairs = check_condition_a(&m, &maps, &scheme(2 * pairs, n)).unwrap();
        for fine in [&finer_grid, &more_pairs] {
            prop_assert!(fine.n_violations >= coarse.n_violations);
            prop_assert!(fine.max_gap >= coarse.max_gap);
            if coarse.violated() {
                prop_assert!(fine.violated());
            }
        }
    }

    #[test]
    fn certificates_scale_with_the_field(a in unit3(), c in 0.1..5.0f64, lambda in 0.0..2.0f64) {
        let m = Manifold::hyperboloid(2).unwrap();
        let y = point_of(&m, a);
        let h = FieldExpr::SquaredDistance(m.origin());
        let sigma = h.gradient(&m, &y).unwrap().comps().to_vec();
        let sch = SampleScheme::new(100, 2, 5, Sampler::UniformBall { center: y.coords().to_vec(), radius: 0.5 });
        let base = ProximalCertificate::new(&m, &y, sigma.clone(), lambda, 0.5).unwrap();
        let r = verify_proximal_subgradient(&m, &ScalarField::new(h.clone()), &base, &sch).unwrap();
        let scaled_sigma: Vec<f64> = sigma.iter().map(|x| c * x).collect();
        let scaled = ProximalCertificate::new(&m, &y, scaled_sigma, c * lambda, 0.5).unwrap();
        let ch = ScalarField::new(FieldExpr::WeightedSum(vec![(c, h)]));
        let rc = verify_proximal_subgradient(&m, &ch, &scaled, &sch).unwrap();
        prop_assert_eq!(r.verdict, rc.verdict);
        prop_assert!((rc.max_gap - c * r.max_gap).abs() < 1e-9 * (1.0 + rc.max_gap.abs()));
    }

    #[test]
    fn descent_is_monotone_feasible_and_deterministic(a in unit3(), fixed in any::<bool>()) {
        let m = Manifold::hyperboloid(2).unwrap();
        let start = point_of(&m, a);
        let target = m.hyperboloid_lift(&[0.2, -0.1]).unwrap();
        let h = ScalarField::new(FieldExpr::SquaredDistance(target.clone()));
        let domain = SetPredicate::ball(m.origin(), 2.5);
        let cfg = DescentConfig {
            step: if fixed { StepPolicy::Fixed { eta: 0.25 } } else { DescentConfig::default().step },
            keep_trajectory: true,
            ..DescentConfig::default()
        };
        let r = geodesic_descent(&m, &h, &start, &cfg, &domain, 1e-5).unwrap();
        prop_assert!(r.converged);
        let values = r.values.as_ref().unwrap();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0]));
        for x in r.trajectory.as_ref().unwrap() {
            prop_assert!(domain.contains(&m, &m.point(x.clone()).unwrap()).unwrap());
        }
        prop_assert!(m.distance(&m.point(r.minimizer.clone()).unwrap(), &target).unwrap() < 1e-6);
        let again = geodesic_descent(&m, &h, &start, &cfg, &domain, 1e-5).unwrap();
        prop_assert_eq!(r, again);
    }
}
