mod common;

use proptest::prelude::*;
use saddleflow_core::linalg::{distance2, dot};
use saddleflow_core::penalty::{conjugate_bruteforce, DualDomain, PenaltySpec};

/// Distance from `λ` to the dual domain, measured through the projection.
fn domain_distance(spec: &PenaltySpec, lambda: &[f64]) -> f64 {
    distance2(lambda, &spec.dual_domain().project(lambda))
}

#[test]
fn conjugate_matches_grid_supremum() {
    let mut rng = common::rng(7);
    for spec in common::catalog() {
        for m in [1usize, 2] {
            for _ in 0..100 {
                let lambda = common::uniform_vec(&mut rng, m, 1.5 * spec.dual_radius(m));
                let exact = spec.conjugate(&lambda);
                let grid = conjugate_bruteforce(&spec, &lambda, 10.0, 401).unwrap();
                let dist = domain_distance(&spec, &lambda);
                if exact.is_finite() {
                    assert!(
                        (exact - grid).abs() <= 5e-2,
                        "{spec:?} λ={lambda:?}: closed form {exact}, grid {grid}"
                    );
                } else if dist > 0.05 {
                    // Outside the domain the grid supremum grows with the grid radius.
                    assert!(grid >= 10.0 * dist - 5e-2, "{spec:?} λ={lambda:?}: grid {grid}");
                }
                assert_eq!(exact.is_finite(), spec.dual_domain().contains(&lambda));
            }
        }
    }
}

#[test]
fn fenchel_young_holds_with_equality_at_subgradients() {
    let mut rng = common::rng(8);
    for spec in common::catalog() {
        let domain = spec.dual_domain();
        for _ in 0..200 {
            let z = common::uniform_vec(&mut rng, 4, 3.0);
            let lambda = domain.project(&common::uniform_vec(&mut rng, 4, 3.0));
            let lhs = spec.eval(&z) + spec.conjugate(&lambda);
            assert!(lhs >= dot(&lambda, &z) - 1e-9, "{spec:?}");

            let g = spec.subgradient(&z);
            assert!(domain.contains(&g), "{spec:?} subgradient {g:?} outside domain");
            let tight = spec.eval(&z) + spec.conjugate(&g) - dot(&g, &z);
            assert!(tight.abs() <= 1e-9, "{spec:?} z={z:?}: gap {tight}");
        }
    }
}

#[test]
fn subgradient_inequality() {
    let mut rng = common::rng(9);
    for spec in common::catalog() {
        for _ in 0..1000 {
            let z = common::uniform_vec(&mut rng, 3, 2.0);
            let w = common::uniform_vec(&mut rng, 3, 2.0);
            let g = spec.subgradient(&z);
            let diff: Vec<f64> = w.iter().zip(&z).map(|(a, b)| a - b).collect();
            assert!(
                spec.eval(&w) >= spec.eval(&z) + dot(&g, &diff) - 1e-12,
                "{spec:?} z={z:?} w={w:?}"
            );
        }
    }
}

#[test]
fn projection_beats_every_grid_point_of_the_domain() {
    let mut rng = common::rng(10);
    for spec in common::catalog() {
        let domain = spec.dual_domain();
        let extent = 1.2 * spec.dual_radius(2);
        let h = 2.0 * extent / 200.0;
        let nodes: Vec<[f64; 2]> = (0..201)
            .flat_map(|i| (0..201).map(move |j| [-extent + h * i as f64, -extent + h * j as f64]))
            .filter(|p| domain.contains(p))
            .collect();
        for _ in 0..20 {
            let v = common::uniform_vec(&mut rng, 2, 2.0 * extent);
            let p = domain.project(&v);
            assert!(domain.contains(&p));
            let reach = distance2(&v, &p);
            let best = nodes
                .iter()
                .map(|g| distance2(&v, g))
                .fold(f64::INFINITY, f64::min);
            assert!(reach <= best + 1e-12, "{spec:?} v={v:?}: {reach} > {best}");
        }
    }
}

fn domain_strategy() -> impl Strategy<Value = DualDomain> {
    (0usize..8, 0.01f64..100.0).prop_map(|(k, r)| {
        let spec = match k % 4 {
            0 => PenaltySpec::norm(saddleflow_core::penalty::NormKind::L1, r),
            1 => PenaltySpec::norm(saddleflow_core::penalty::NormKind::L2, r),
            2 => PenaltySpec::norm(saddleflow_core::penalty::NormKind::Linf, r),
            _ => PenaltySpec::huber(r, 1.0),
        }
        .unwrap();
        if k >= 4 {
            spec.positive_part().dual_domain()
        } else {
            spec.dual_domain()
        }
    })
}

proptest! {
    #[test]
    fn projection_is_idempotent(
        domain in domain_strategy(),
        v in prop::collection::vec(-500.0f64..500.0, 1..8),
    ) {
        let p = domain.project(&v);
        prop_assert!(domain.contains(&p));
        let q = domain.project(&p);
        prop_assert!(distance2(&p, &q) <= 1e-12 * (1.0 + domain.radius));
    }

    #[test]
    fn projection_is_nonexpansive(
        domain in domain_strategy(),
        pair in (1usize..8).prop_flat_map(|m| (
            prop::collection::vec(-500.0f64..500.0, m),
            prop::collection::vec(-500.0f64..500.0, m),
        )),
    ) {
        let (v, w) = pair;
        let dp = distance2(&domain.project(&v), &domain.project(&w));
        prop_assert!(dp <= distance2(&v, &w) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn points_inside_the_domain_are_fixed(
        domain in domain_strategy(),
        v in prop::collection::vec(-500.0f64..500.0, 1..8),
    ) {
        // Halving a point of a convex set containing the origin stays inside.
        let inside: Vec<f64> = domain.project(&v).iter().map(|x| 0.5 * x).collect();
        let again = domain.project(&inside);
        prop_assert!(distance2(&inside, &again) <= 1e-12 * (1.0 + domain.radius));
    }

    #[test]
    fn penalties_are_nonnegative_and_vanish_at_zero(
        k in 0usize..8,
        z in prop::collection::vec(-50.0f64..50.0, 1..6),
    ) {
        let spec = common::catalog()[k];
        prop_assert!(spec.eval(&z) >= 0.0);
        prop_assert_eq!(spec.eval(&vec![0.0; z.len()]), 0.0);
    }
}
