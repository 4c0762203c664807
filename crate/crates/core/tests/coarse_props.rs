use hyperbary::coarse::{alexandrov_comparison_check, four_point_delta, four_point_tree_approx, FiniteMetricSpace};
use hyperbary::hyperboloid::{distance, exp_map, log_map, random_point};
use hyperbary::sampling::rng_from_seed;
use hyperbary::Point;
use proptest::prelude::*;
use rand::Rng;

/// Path metric of a random weighted tree: vertex `i > 0` hangs off a random
/// earlier vertex, so distances follow from depths and the common ancestor.
fn random_tree_metric(k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut parent = vec![0usize; k];
    let mut depth = vec![0.0f64; k];
    for i in 1..k {
        parent[i] = rng.random_range(0..i);
        depth[i] = depth[parent[i]] + rng.random_range(0.1..2.0);
    }
    let ancestors = |mut v: usize| {
        let mut a = vec![v];
        while v != 0 {
            v = parent[v];
            a.push(v);
        }
        a
    };
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        let ai = ancestors(i);
        for j in 0..k {
            let aj = ancestors(j);
            let lca = *ai.iter().find(|v| aj.contains(v)).unwrap();
            d[i][j] = depth[i] + depth[j] - 2.0 * depth[lca];
        }
    }
    d
}

fn hyperbolic_space(points: &[Point]) -> FiniteMetricSpace {
    let rows = points
        .iter()
        .map(|p| points.iter().map(|q| distance(p, q).unwrap()).collect())
        .collect();
    FiniteMetricSpace::new(rows, None).unwrap()
}

fn quadruple(points: &[Point; 4]) -> [[f64; 4]; 4] {
    let mut d = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            d[i][j] = distance(&points[i], &points[j]).unwrap();
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trees_are_zero_hyperbolic(seed in any::<u64>(), k in 2usize..14) {
        let mut rng = rng_from_seed(seed);
        let space = FiniteMetricSpace::new(random_tree_metric(k, &mut rng), None).unwrap();
        prop_assert!(space.delta_hyperbolicity().delta <= 1e-12);
        // Gromov products in a tree satisfy the ultrametric-style inequality exactly.
        for x in 0..k {
            for y in 0..k {
                for z in 0..k {
                    let xy = space.gromov_product(0, x, y).unwrap();
                    let m = space.gromov_product(0, x, z).unwrap().min(space.gromov_product(0, z, y).unwrap());
                    prop_assert!(xy >= m - 1e-12);
                }
            }
        }
    }

    #[test]
    fn delta_scales_linearly(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = rng_from_seed(seed);
        let pts: Vec<Point> = (0..12).map(|_| random_point(2, 4.0, &mut rng)).collect();
        let space = hyperbolic_space(&pts);
        let d = space.delta_hyperbolicity().delta;
        let dc = space.scaled(c).unwrap().delta_hyperbolicity().delta;
        prop_assert!((dc - c * d).abs() <= 1e-12 * c * (1.0 + d));
    }

    #[test]
    fn basepoint_delta_never_exceeds_the_global_value(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let pts: Vec<Point> = (0..10).map(|_| random_point(3, 3.0, &mut rng)).collect();
        let space = hyperbolic_space(&pts);
        let global = space.delta_hyperbolicity().delta;
        for o in 0..pts.len() {
            prop_assert!(space.delta_at_basepoint(o).unwrap().delta <= global + 1e-15);
        }
    }
}

#[test]
fn unit_four_cycle_has_delta_one() {
    let d = vec![
        vec![0.0, 1.0, 2.0, 1.0],
        vec![1.0, 0.0, 1.0, 2.0],
        vec![2.0, 1.0, 0.0, 1.0],
        vec![1.0, 2.0, 1.0, 0.0],
    ];
    let space = FiniteMetricSpace::new(d, None).unwrap();
    let r = space.delta_hyperbolicity();
    assert_eq!(r.delta, 1.0);
    assert_eq!(r.witness, Some([0, 1, 2, 3]));
}

#[test]
fn tree_approximation_on_hyperbolic_quadruples() {
    let mut rng = rng_from_seed(1000);
    for _ in 0..1000 {
        let n = rng.random_range(2..=4);
        let pts: [Point; 4] = std::array::from_fn(|_| random_point(n, 5.0, &mut rng));
        let d = quadruple(&pts);
        let delta = four_point_delta(&d);
        let t = four_point_tree_approx(&d).unwrap();
        assert!(t.distortion <= 2.0 * delta + 1e-12);
        // The approximation is itself a tree metric.
        assert!(four_point_delta(&t.tree_dist) <= 1e-12 * (1.0 + delta));
        for i in 0..4 {
            for j in 0..4 {
                assert!((t.tree_dist[i][j] - d[i][j]).abs() <= t.distortion + 1e-12);
            }
        }
    }
}

#[test]
fn hyperbolic_plane_is_an_equality_case_for_the_comparison() {
    let mut rng = rng_from_seed(2);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let x: Point = random_point(2, 3.0, &mut rng);
        let y: Point = random_point(2, 3.0, &mut rng);
        let z: Point = random_point(2, 3.0, &mut rng);
        let w = exp_map(&log_map(&x, &y).unwrap().scaled(rng.random_range(0.05..0.95)));
        let dist = |a: &Point, b: &Point| distance(a, b).unwrap();
        let v = alexandrov_comparison_check(dist(&x, &y), dist(&y, &z), dist(&x, &z), dist(&x, &w), dist(&w, &y), dist(&z, &w))
            .unwrap();
        assert!(v.satisfied);
        worst = worst.max(v.margin.abs());
    }
    assert!(worst < 1e-8, "max |margin| {worst:e}");
}

#[test]
fn sphere_satisfies_and_tripod_violates_the_comparison() {
    let q = std::f64::consts::FRAC_PI_2;
    let sphere = alexandrov_comparison_check(q, q, q, q / 2.0, q / 2.0, q).unwrap();
    assert!(sphere.satisfied && sphere.margin > 0.1);

    let tripod = alexandrov_comparison_check(2.0, 2.0, 2.0, 1.0, 1.0, 1.0).unwrap();
    assert!(!tripod.satisfied);
    // Median of the equilateral comparison triangle of side 2:
    // cosh m = cosh 2 / cosh 1.
    let median = (2.0f64.cosh() / 1.0f64.cosh()).acosh();
    assert!((tripod.comparison_distance - median).abs() < 1e-12);
}

#[test]
fn delta_of_a_large_sample_is_stable_across_seeds() {
    let estimate = |seed| {
        let mut rng = rng_from_seed(seed);
        let pts: Vec<Point> = (0..200).map(|_| random_point(2, 8.0, &mut rng)).collect();
        hyperbolic_space(&pts).delta_hyperbolicity().delta
    };
    let (a, b) = (estimate(21), estimate(22));
    assert!((a - b).abs() <= 0.1 * a.max(b), "{a} vs {b}");
    // Bounded by the δ of ideal quadruples in ℍ², log(1 + √2).
    assert!(a.max(b) < (1.0 + 2f64.sqrt()).ln());
}

#[test]
fn edge_lists_and_restriction_agree_with_matrices() {
    let space = FiniteMetricSpace::from_edge_list("a,b,1\nb,c,1\nc,d,1\nd,a,1\n").unwrap();
    assert_eq!(space.delta_hyperbolicity().delta, 1.0);
    let path = space.restrict(&[0, 1, 2]).unwrap();
    assert_eq!(path.delta_hyperbolicity().delta, 0.0);
    assert!(FiniteMetricSpace::from_edge_list("a,b,1\nc,d,1\n").is_err());
    assert!(FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], None).is_err());
}
