use hyperbary::hyperboloid::{
    ball_excess_coefficient, busemann_gradient, busemann_hessian, busemann_value, distance, exp_map, hyperbolic_ball_volume,
    log_map, random_boundary_point, random_isometry, random_point, random_tangent, unit_ball_volume, BALL_SANDWICH_EPS,
};
use hyperbary::sampling::rng_from_seed;
use hyperbary::{Ideal, Isom, Point, Tangent};
use proptest::prelude::*;
use rand::Rng;

fn geodesic_point(o: &Point, theta: &Ideal, t: f64) -> Point {
    // Unit tangent at o pointing at theta: the spatial part of xi + <o, xi> o.
    let a = hyperbary::hyperboloid::lorentz_dot(o.coords(), theta.dir());
    let v: Vec<f64> = theta.dir().iter().zip(o.coords()).map(|(x, p)| x + a * p).collect();
    let u = Tangent::new(o.clone(), v);
    exp_map(&u.scaled(t / u.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isometries_preserve_distance(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = rng_from_seed(seed);
        let g: Isom = random_isometry(n, seed ^ 0x5eed);
        let x: Point = random_point(n, 3.0, &mut rng);
        let y: Point = random_point(n, 3.0, &mut rng);
        let d = distance(&x, &y).unwrap();
        let gd = distance(&g.apply_point(&x), &g.apply_point(&y)).unwrap();
        prop_assert!((d - gd).abs() < 1e-10 * (1.0 + d));
        prop_assert!(g.apply_point(&x).sheet_residual().abs() < 1e-12);
        let back = g.inverse().apply_point(&g.apply_point(&x));
        prop_assert!(distance(&back, &x).unwrap() < 1e-9);
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng_from_seed(seed);
        let p: Vec<Point> = (0..3).map(|_| random_point(n, 4.0, &mut rng)).collect();
        let d = |i: usize, j: usize| distance(&p[i], &p[j]).unwrap();
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-10);
        prop_assert_eq!(d(0, 1), d(1, 0));
    }

    #[test]
    fn log_has_length_distance_and_inverts_exp(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng_from_seed(seed);
        let x: Point = random_point(n, 3.0, &mut rng);
        let y: Point = random_point(n, 3.0, &mut rng);
        let v = log_map(&x, &y).unwrap();
        prop_assert!((v.norm() - distance(&x, &y).unwrap()).abs() < 1e-10);
        prop_assert!(distance(&exp_map(&v), &y).unwrap() < 1e-10);
        prop_assert!(v.orthogonality_residual().abs() < 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn busemann_is_one_lipschitz_and_equivariant(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng_from_seed(seed);
        let theta: Ideal = random_boundary_point(n, &mut rng);
        let o: Point = random_point(n, 1.0, &mut rng);
        let p: Point = random_point(n, 3.0, &mut rng);
        let q: Point = random_point(n, 3.0, &mut rng);
        let diff = busemann_value(&theta, &p, &o) - busemann_value(&theta, &q, &o);
        prop_assert!(diff.abs() <= distance(&p, &q).unwrap() + 1e-12);
        let g: Isom = random_isometry(n, seed.wrapping_add(1));
        let moved = busemann_value(&g.apply_boundary(&theta), &g.apply_point(&p), &g.apply_point(&o));
        prop_assert!((moved - busemann_value(&theta, &p, &o)).abs() < 1e-10);
        prop_assert!((busemann_gradient(&theta, &p).norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn busemann_matches_its_defining_limit() {
    // B(p) = lim d(p, gamma(t)) - t along the ray from o to theta.
    let mut rng = rng_from_seed(77);
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let theta: Ideal = random_boundary_point(n, &mut rng);
        let o = Point::origin(n);
        let p: Point = random_point(n, 2.0, &mut rng);
        let t = 30.0;
        let limit = distance(&p, &geodesic_point(&o, &theta, t)).unwrap() - t;
        assert!((limit - busemann_value(&theta, &p, &o)).abs() < 1e-8);
    }
}

#[test]
fn derivative_along_the_ray_to_theta_is_minus_one() {
    let mut rng = rng_from_seed(3);
    for _ in 0..50 {
        let n = rng.random_range(2..=5);
        let theta: Ideal = random_boundary_point(n, &mut rng);
        let p: Point = random_point(n, 2.0, &mut rng);
        let g = busemann_gradient(&theta, &p);
        let toward = geodesic_point(&p, &theta, 1.0);
        let u = log_map(&p, &toward).unwrap();
        assert!((g.dot(&u) + 1.0).abs() < 1e-10);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = rng_from_seed(11);
    let h = 1e-5;
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let theta: Ideal = random_boundary_point(n, &mut rng);
        let o = Point::origin(n);
        let p: Point = random_point(n, 2.0, &mut rng);
        let v = random_tangent(&p, 1.0, &mut rng);
        let v = v.scaled(1.0 / v.norm());
        let fd = (busemann_value(&theta, &exp_map(&v.scaled(h)), &o) - busemann_value(&theta, &exp_map(&v.scaled(-h)), &o))
            / (2.0 * h);
        assert!((fd - busemann_gradient(&theta, &p).dot(&v)).abs() < 1e-7);
    }
}

/// Second derivative of `B` along the geodesic through `p` with velocity `u`.
fn second_difference(theta: &Ideal, u: &Tangent, h: f64) -> f64 {
    let o = Point::origin(u.base().dim());
    let b = |t: f64| busemann_value(theta, &exp_map(&u.scaled(t)), &o);
    (b(h) - 2.0 * b(0.0) + b(-h)) / (h * h)
}

#[test]
fn hessian_matches_second_differences() {
    let mut rng = rng_from_seed(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=5);
        let theta: Ideal = random_boundary_point(n, &mut rng);
        let p: Point = random_point(n, 2.0, &mut rng);
        let u = random_tangent(&p, 1.0, &mut rng);
        let v = random_tangent(&p, 1.0, &mut rng);
        // Polarization of the quadratic form.
        let h = 1e-4;
        let fd = 0.25 * (second_difference(&theta, &u.add(&v), h) - second_difference(&theta, &u.add(&v.scaled(-1.0)), h));
        worst = worst.max((fd - busemann_hessian(&theta, &p, &u, &v)).abs());
    }
    assert!(worst < 1e-5, "max error {worst}");
}

#[test]
fn boundary_action_is_the_limit_of_the_point_action() {
    let mut rng = rng_from_seed(5);
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let g: Isom = random_isometry(n, rng.random());
        let theta: Ideal = random_boundary_point(n, &mut rng);
        let o = Point::origin(n);
        let mut last = f64::INFINITY;
        for t in [5.0, 10.0, 20.0] {
            let gx = g.apply_point(&geodesic_point(&o, &theta, t));
            let s = gx.spatial();
            let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dir: Vec<f64> = s.iter().map(|x| x / norm).collect();
            let err = Ideal::from_direction(&dir).unwrap().angle_to(&g.apply_boundary(&theta));
            assert!(err < last.max(1e-12));
            last = err;
        }
        assert!(last < 1e-6);
    }
}

#[test]
fn ball_volume_sandwich_on_a_grid() {
    for n in 2..=5 {
        let c1 = ball_excess_coefficient(n).unwrap();
        let vn = unit_ball_volume(n);
        for k in 1..=100 {
            let eps = BALL_SANDWICH_EPS * k as f64 / 100.0;
            let v = hyperbolic_ball_volume(n, eps).unwrap();
            let e = vn * eps.powi(n as i32);
            assert!(e <= v, "lower bound fails at n={n} eps={eps}");
            assert!(v <= e * (1.0 + c1 * eps * eps), "upper bound fails at n={n} eps={eps}");
        }
    }
}

#[test]
fn ball_volume_oracles() {
    // Vol = |S^{n-1}| * int_0^r sinh^{n-1}, with the integral by composite Simpson.
    let simpson = |n: usize, r: f64| {
        let k = 20_000;
        let h = r / k as f64;
        let f = |t: f64| t.sinh().powi(n as i32 - 1);
        let mut s = f(0.0) + f(r);
        for i in 1..k {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    };
    for n in 2..=6 {
        let sphere = n as f64 * unit_ball_volume(n);
        for r in [0.3, 1.0, 2.5] {
            let v = hyperbolic_ball_volume(n, r).unwrap();
            assert!((v - sphere * simpson(n, r)).abs() < 1e-9 * v);
        }
    }
    assert!((hyperbolic_ball_volume(3, 1.0).unwrap() - 5.110_932_705_708_289).abs() < 1e-12);
    assert!((hyperbolic_ball_volume(2, 1.0).unwrap() - 3.412_276_265_284_902_4).abs() < 1e-12);
    assert!(hyperbolic_ball_volume(3, -1.0).is_err());
}
