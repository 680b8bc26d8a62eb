use cvxlab::cvec::{self, c, C64};
use cvxlab::domain::catalog::{catalog, catalog_domain, params};
use cvxlab::domain::{signed_boundary_distance, DistanceConfig, Region};
use cvxlab::expr::{Node, ScalarField};
use cvxlab::psh::circle_mean_margin;
use cvxlab::ray::{directional_distance, minkowski, RayConfig};
use cvxlab::slicing::{hartogs_contains, slice_domain, PlaneFrame};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn node(dim: usize) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (-5.0f64..5.0).prop_map(Node::Const),
        (1..=dim).prop_map(Node::Re),
        (1..=dim).prop_map(Node::Im),
        (1..=dim).prop_map(Node::Abs2),
        Just(Node::Norm2),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Mul(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| Node::Pow(Box::new(a), k)),
            prop::collection::vec(inner.clone(), 1..4).prop_map(Node::Max),
            prop::collection::vec(inner, 1..4).prop_map(Node::Min),
        ]
    })
}

fn point(dim: usize, r: f64) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-r..r, -r..r).prop_map(|(a, b)| c(a, b)), dim)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_fields_parse_back(root in node(3), z in point(3, 2.0)) {
        let f = ScalarField::new(root, 3).unwrap();
        let g = ScalarField::parse(&f.to_string(), 3).unwrap();
        prop_assert_eq!(g.to_string(), f.to_string());
        prop_assert!(close(f.eval(&z).unwrap(), g.eval(&z).unwrap(), 1e-12));
    }

    #[test]
    fn max_and_min_nodes_evaluate_pointwise(a in node(2), b in node(2), z in point(2, 2.0)) {
        let fa = ScalarField::new(a.clone(), 2).unwrap().eval(&z).unwrap();
        let fb = ScalarField::new(b.clone(), 2).unwrap().eval(&z).unwrap();
        let mx = ScalarField::new(Node::Max(vec![a.clone(), b.clone()]), 2).unwrap().eval(&z).unwrap();
        let mn = ScalarField::new(Node::Min(vec![a, b]), 2).unwrap().eval(&z).unwrap();
        prop_assert_eq!(mx, fa.max(fb));
        prop_assert_eq!(mn, fa.min(fb));
    }

    #[test]
    fn union_and_intersection_follow_membership(z in point(1, 4.0), cx in -1.5f64..1.5) {
        let a = Region::primitive(&format!("(re(1) - ({cx}))^2 + im(1)^2 - 4"), 1).unwrap();
        let b = Region::primitive("(re(1) + 1)^2 + im(1)^2 - 1", 1).unwrap();
        let u = Region::Union(vec![a.clone(), b.clone()]);
        let i = Region::Intersection(vec![a.clone(), b.clone()]);
        let k = Region::Complement(Box::new(a.clone()));
        prop_assert_eq!(u.member(&z), a.member(&z) || b.member(&z));
        prop_assert_eq!(i.member(&z), a.member(&z) && b.member(&z));
        prop_assert_eq!(u.level(&z), a.level(&z).min(b.level(&z)));
        prop_assert_eq!(i.level(&z), a.level(&z).max(b.level(&z)));
        prop_assert_eq!(k.level(&z), -a.level(&z));
    }

    #[test]
    fn slice_membership_matches_lifted_membership(seed in any::<u64>(), zeta in point(2, 1.5)) {
        let spec = catalog("hartogs-figure").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = cvec::random_in_ball(&mut rng, 2, 0.8);
        let frame = PlaneFrame::random_through(&base, &mut rng);
        let s = slice_domain(&spec, &frame).unwrap();
        prop_assert_eq!(s.spec.member(&zeta), spec.member(&frame.lift(&zeta)));
    }

    #[test]
    fn ball_distance_is_exact(z in point(2, 1.8)) {
        let spec = catalog("ball").unwrap();
        prop_assume!(cvec::norm(&z) > 1e-3 && cvec::norm(&z) < 2.0);
        let d = signed_boundary_distance(&spec, &z, &DistanceConfig::default()).unwrap();
        prop_assert!((d.value - (1.0 - cvec::norm(&z))).abs() < 1e-9, "{} at |z| = {}", d.value, cvec::norm(&z));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn minkowski_is_homogeneous(z in point(2, 0.5), x in point(2, 1.0), lr in -2.0f64..2.0, la in 0.0f64..6.3) {
        let spec = catalog("polydisc").unwrap();
        prop_assume!(cvec::norm(&x) > 1e-2);
        let lambda = C64::from_polar(lr.exp(), la);
        let cfg = RayConfig::with_angles(64);
        let h1 = minkowski(&spec, &z, &x, &cfg).unwrap();
        let h2 = minkowski(&spec, &z, &cvec::scale(&x, lambda), &cfg).unwrap();
        prop_assert!(close(h2, lambda.norm() * h1, 1e-6), "{h2} vs {}", lambda.norm() * h1);
    }

    #[test]
    fn indicatrix_is_balanced(z in point(2, 0.6), x in point(2, 1.0), seed in any::<u64>()) {
        let spec = catalog("hartogs-figure").unwrap();
        prop_assume!(spec.member(&z) && cvec::norm(&x) > 1e-2);
        let h = minkowski(&spec, &z, &x, &RayConfig::default()).unwrap();
        prop_assume!(h > 0.0 && h.is_finite());
        // scale x to just inside the indicatrix
        let x = cvec::scale(&x, c(0.99 / h, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let lambda = cvec::random_in_ball(&mut rng, 1, 1.0)[0];
            prop_assert!(spec.member(&cvec::axpy(&z, lambda, &x)));
        }
    }

    #[test]
    fn smaller_domain_has_smaller_directional_distance(z in point(2, 0.3), x in point(2, 1.0)) {
        let e = catalog_domain("lemma5-e", &params(&[("c", 0.5), ("eps", 0.5)])).unwrap();
        let bidisc = catalog_domain("polydisc", &params(&[("n", 2.0), ("r", 0.5)])).unwrap();
        prop_assume!(e.member(&z) && cvec::norm(&x) > 1e-2);
        let cfg = RayConfig::with_angles(64);
        let da = directional_distance(&e, &z, &x, &cfg).unwrap().as_f64();
        let db = directional_distance(&bidisc, &z, &x, &cfg).unwrap().as_f64();
        prop_assert!(da <= db + 1e-6, "{da} > {db}");
    }

    #[test]
    fn hartogs_fibres_shrink_monotonically(z in point(2, 0.9), w in point(2, 0.6), t in 0.0f64..1.0) {
        let spec = catalog("hartogs-figure").unwrap();
        prop_assume!(spec.member(&z));
        if hartogs_contains(&spec, &z, &w).unwrap() {
            prop_assert!(hartogs_contains(&spec, &z, &cvec::scale(&w, c(t, 0.0))).unwrap());
        }
    }

    #[test]
    fn pluriharmonic_circle_means_vanish(z in point(2, 1.0), v in point(2, 1.0), r in 0.01f64..1.0) {
        prop_assume!(cvec::norm(&v) > 1e-2);
        let f = ScalarField::parse("re(1)^2 - im(1)^2 + 3*re(2) - re(1)*im(2) - im(1)*re(2)", 2).unwrap();
        let m = circle_mean_margin(|p| f.value(p), &z, &cvec::normalized(&v), r, 32).unwrap();
        prop_assert!(m.abs() < 1e-12, "{m}");
    }
}
