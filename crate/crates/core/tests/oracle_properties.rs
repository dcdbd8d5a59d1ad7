mod common;

use proptest::prelude::*;
use saddleflow_core::linalg::{distance2, dot};
use saddleflow_core::oracle::{
    brute_force_argmax, primal_argmax, project_block_simplex, SimplexBlocks,
};

#[test]
fn argmax_matches_vertex_enumeration() {
    let mut rng = common::rng(21);
    for _ in 0..1000 {
        let m = 1 + (rand::Rng::random_range(&mut rng, 0..6usize));
        let d = 1 + (rand::Rng::random_range(&mut rng, 0..6usize));
        let round = common::random_round(&mut rng, m, d, 3);
        let lambda = common::uniform_vec(&mut rng, m, 2.0);
        let fast = primal_argmax(&round, &round.a, &lambda).unwrap();
        let slow = brute_force_argmax(&round, &round.a, &lambda).unwrap();
        assert!(fast.is_feasible(&round.blocks));
        let c = round.scores(&round.a, &lambda).unwrap();
        assert!((dot(&c, &fast) - dot(&c, &slow)).abs() <= 1e-12);
        assert_eq!(fast, slow, "tie-breaking differs");
    }
}

#[test]
fn block_projection_beats_grid_points() {
    let mut rng = common::rng(22);
    let blocks = SimplexBlocks::single(2).unwrap();
    let h = 1.0 / 200.0;
    let nodes: Vec<[f64; 2]> = (0..=200)
        .flat_map(|i| (0..=200).map(move |j| [h * i as f64, h * j as f64]))
        .filter(|p| p[0] + p[1] <= 1.0)
        .collect();
    for _ in 0..50 {
        let v = common::uniform_vec(&mut rng, 2, 2.0);
        let p = project_block_simplex(&blocks, &v).unwrap();
        assert!(p.is_feasible(&blocks));
        let best = nodes.iter().map(|g| distance2(&v, g)).fold(f64::INFINITY, f64::min);
        assert!(distance2(&v, &p) <= best + 1e-12);
    }
}

proptest! {
    #[test]
    fn argmax_is_a_feasible_vertex(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let round = common::random_round(&mut rng, 3, 7, 4);
        let lambda = common::uniform_vec(&mut rng, 3, 1.0);
        let x = primal_argmax(&round, &round.a, &lambda).unwrap();
        prop_assert!(x.is_feasible(&round.blocks));
        prop_assert!(x.iter().all(|v| *v == 0.0 || *v == 1.0));
        for range in round.blocks.ranges() {
            prop_assert!(x[range].iter().sum::<f64>() <= 1.0);
        }
    }

    #[test]
    fn block_projection_is_idempotent_and_nonexpansive(
        seed in any::<u64>(),
        v in prop::collection::vec(-5.0f64..5.0, 6),
        w in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let mut rng = common::rng(seed);
        let blocks = common::random_blocks(&mut rng, 6, 3);
        let pv = project_block_simplex(&blocks, &v).unwrap();
        let pw = project_block_simplex(&blocks, &w).unwrap();
        prop_assert!(pv.is_feasible(&blocks));
        prop_assert!(distance2(&pv, &project_block_simplex(&blocks, &pv).unwrap()) <= 1e-12);
        prop_assert!(distance2(&pv, &pw) <= distance2(&v, &w) + 1e-12);
    }
}
