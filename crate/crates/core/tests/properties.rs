use ghwp::optimality::{chain_residual, hub_residual};
use ghwp::subgradient::{chain_subgradient, full_subgradient, hub_subgradient};
use ghwp::{subgradient_bound, Configuration, ConvexSet, Point, Problem, Weights};
use proptest::prelude::*;

fn coords(dim: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, dim)
}

fn point(dim: usize, scale: f64) -> impl Strategy<Value = Point> {
    coords(dim, scale).prop_map(|c| Point::new(c).unwrap())
}

fn set(dim: usize) -> impl Strategy<Value = ConvexSet> {
    prop_oneof![
        (point(dim, 3.0), 0.1..2.0f64).prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
        (point(dim, 3.0), prop::collection::vec(0.1..2.0f64, dim))
            .prop_map(|(c, h)| ConvexSet::r#box(c, h).unwrap()),
        (point(dim, 1.0), -2.0..2.0f64)
            .prop_filter("normal must be nonzero", |(n, _)| n.norm() > 1e-3)
            .prop_map(|(n, b)| ConvexSet::half_space(n, b).unwrap()),
        point(dim, 3.0).prop_map(ConvexSet::singleton),
    ]
}

fn set_with_points(n: usize) -> impl Strategy<Value = (ConvexSet, Vec<Point>)> {
    (1..=4usize).prop_flat_map(move |dim| (set(dim), prop::collection::vec(point(dim, 6.0), n)))
}

fn weight() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 4 => 0.01..3.0f64]
}

/// A nondegenerate problem with a configuration and a second one.
fn instance() -> impl Strategy<Value = (Problem, Configuration, Configuration)> {
    (1..=3usize, 3..=6usize)
        .prop_flat_map(|(dim, m)| {
            (
                prop::collection::vec(set(dim), m),
                set(dim),
                prop::collection::vec(weight(), m),
                prop::collection::vec(weight(), m),
                prop::collection::vec(point(dim, 5.0), 2 * m + 2),
            )
        })
        .prop_filter_map("degenerate vertex", |(sets, hub, rho, omega, mut pts)| {
            let m = sets.len();
            let p = Problem::new(sets, hub, Weights::new(rho, omega).ok()?).ok()?;
            if !p.check_nondegeneracy().is_empty() {
                return None;
            }
            let v_hub = pts.pop()?;
            let v = Configuration::new(pts.split_off(m + 1), v_hub);
            let u_hub = pts.pop()?;
            Some((p, Configuration::new(pts, u_hub), v))
        })
}

fn min_pairwise_gap(u: &Configuration) -> f64 {
    let blocks: Vec<&Point> = u.blocks().collect();
    let mut gap = f64::INFINITY;
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            gap = gap.min(blocks[i].distance_to(blocks[j]));
        }
    }
    gap
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive((s, xs) in set_with_points(3)) {
        let px = s.project(&xs[0]).unwrap();
        let py = s.project(&xs[1]).unwrap();
        prop_assert!(s.project(&px).unwrap().distance_to(&px) <= 1e-14 * (1.0 + px.norm()));
        prop_assert!(px.distance_to(&py) <= xs[0].distance_to(&xs[1]) + 1e-12);
        prop_assert!(s.contains(&px, 1e-12).unwrap());
        let z = s.project(&xs[2]).unwrap();
        prop_assert!((&xs[0] - &px).dot(&(&z - &px)) <= 1e-10);
    }

    #[test]
    fn distance_is_lipschitz_and_zero_on_the_set((s, xs) in set_with_points(2)) {
        let dx = s.distance(&xs[0]).unwrap();
        let dy = s.distance(&xs[1]).unwrap();
        prop_assert!((dx - dy).abs() <= xs[0].distance_to(&xs[1]) + 1e-12);
        let px = s.project(&xs[0]).unwrap();
        prop_assert!(s.distance(&px).unwrap() <= 1e-12);
        prop_assert_eq!(dx <= 1e-12, s.contains(&xs[0], 1e-12).unwrap());
    }

    #[test]
    fn zero_lies_in_every_normal_cone((s, xs) in set_with_points(1)) {
        let px = s.project(&xs[0]).unwrap();
        prop_assert!(s.normal_cone_contains(&px, &Point::zeros(px.dim()), 1e-12).unwrap());
        // the outward residual x - Px is normal at Px
        prop_assert!(s.normal_cone_contains(&px, &(&xs[0] - &px), 1e-9).unwrap());
    }

    #[test]
    fn subgradient_inequality_holds((p, u, v) in instance()) {
        let g = full_subgradient(&p, &u).unwrap().into_configuration();
        let ju = p.objective(&u).unwrap();
        let jv = p.objective(&v).unwrap();
        prop_assert!(jv >= ju + g.dot(&v.axpy(-1.0, &u)) - 1e-9, "{} < {} + <g, v - u>", jv, ju);
    }

    #[test]
    fn subgradient_respects_bounds((p, u, _v) in instance()) {
        let g = full_subgradient(&p, &u).unwrap();
        prop_assert!(g.norm() <= subgradient_bound(&p) + 1e-12);
        let w = p.weights();
        for i in 0..p.len() {
            let gi = chain_subgradient(&p, &u, i).unwrap();
            prop_assert!(gi.norm() <= w.vertex_weight(i) + 1e-12);
        }
        let omega: f64 = w.omega.iter().sum();
        prop_assert!(hub_subgradient(&p, &u).unwrap().norm() <= omega + 1e-12);
    }

    #[test]
    fn subgradient_matches_finite_differences((p, u, _v) in instance()) {
        prop_assume!(min_pairwise_gap(&u) > 1e-3);
        let g = full_subgradient(&p, &u).unwrap().into_configuration();
        let h = 1e-6;
        let mut err = 0.0;
        for b in 0..=p.len() {
            for d in 0..p.dim() {
                let bumped = |s: f64| {
                    let mut w = u.clone();
                    let target = if b < p.len() { &mut w.chain_points[b] } else { &mut w.hub_point };
                    let mut c = target.coords().to_vec();
                    c[d] += s;
                    *target = Point::new(c).unwrap();
                    p.objective(&w).unwrap()
                };
                let fd = (bumped(h) - bumped(-h)) / (2.0 * h);
                let exact = g.blocks().nth(b).unwrap()[d];
                err += (fd - exact).powi(2);
            }
        }
        prop_assert!(err.sqrt() <= 1e-5 * g.norm().max(1.0), "fd error {}", err.sqrt());
    }

    #[test]
    fn forces_cancel_globally((p, u, _v) in instance()) {
        let mut sum = Point::zeros(p.dim());
        let mut determinate = true;
        for i in 0..p.len() {
            match chain_residual(&p, &u, i).unwrap().force() {
                Some(f) => sum = &sum + f,
                None => determinate = false,
            }
        }
        match hub_residual(&p, &u).unwrap().force() {
            Some(f) => sum = &sum + f,
            None => determinate = false,
        }
        prop_assume!(determinate);
        prop_assert!(sum.norm() <= 1e-10);
    }

    #[test]
    fn objective_is_invariant_under_relabelling((p, u, _v) in instance()) {
        let j = p.objective(&u).unwrap();
        let jr = p.rotated().objective(&u.rotated()).unwrap();
        prop_assert!((j - jr).abs() <= 1e-12 * j.max(1.0));
    }

    #[test]
    fn objective_is_convex_and_homogeneous_in_weights((p, u, v) in instance(), t in 0.0..1.0f64, c in 0.1..10.0f64) {
        let mid = u.axpy(-t, &u.axpy(-1.0, &v));
        let lhs = p.objective(&mid).unwrap();
        let rhs = (1.0 - t) * p.objective(&u).unwrap() + t * p.objective(&v).unwrap();
        prop_assert!(lhs <= rhs + 1e-9 * rhs.max(1.0));

        let w = p.weights();
        let scaled = Weights::new(
            w.rho.iter().map(|r| c * r).collect(),
            w.omega.iter().map(|o| c * o).collect(),
        ).unwrap();
        let q = Problem::new(p.chain_sets().to_vec(), p.hub_set().clone(), scaled).unwrap();
        let j = p.objective(&u).unwrap();
        prop_assert!((q.objective(&u).unwrap() - c * j).abs() <= 1e-12 * (c * j).max(1.0));
    }

    #[test]
    fn components_partition_the_chain((p, _u, _v) in instance()) {
        let comps = p.connected_components().unwrap();
        let mut seen: Vec<usize> = comps.iter().flat_map(|c| c.indices.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..p.len()).collect::<Vec<_>>());
        prop_assert_eq!(p.rotated().check_nondegeneracy().len(), p.check_nondegeneracy().len());
    }
}
