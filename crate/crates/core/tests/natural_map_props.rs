use hyperbary::forms::h_form;
use hyperbary::hyperboloid::{busemann_value, distance, random_isometry};
use hyperbary::natural_map::{phi_lipschitz_scan, BoundaryMapKind, NaturalMapScenario, PhiEmbedding, DEFAULT_FD_STEP};
use hyperbary::sampling::rng_from_seed;
use hyperbary::{Isom, Point};
use nalgebra::DMatrix;

fn identity(scale: f64) -> NaturalMapScenario {
    NaturalMapScenario::visual(3, 128, 0, scale, BoundaryMapKind::Identity).unwrap()
}

#[test]
fn phi_is_positive_deterministic_and_normalized_at_the_origin() {
    let emb = PhiEmbedding::visual(Point::origin(3), 128, 2.0, 4).unwrap();
    let again = PhiEmbedding::visual(Point::origin(3), 128, 2.0, 4).unwrap();
    assert!(emb.phi(&Point::origin(3)).iter().all(|&v| (v - 1.0).abs() < 1e-15));
    let mut rng = rng_from_seed(1);
    for _ in 0..20 {
        let x: Point = hyperbary::hyperboloid::random_point(3, 3.0, &mut rng);
        let a = emb.phi(&x);
        assert_eq!(a, again.phi(&x));
        assert!(a.iter().all(|&v| v > 0.0));
        // Coordinates are exp(-h B / 2) computed independently.
        for (v, eta) in a.iter().zip(&emb.sample) {
            let b = busemann_value(eta, &x, &Point::origin(3));
            assert!((v - (-b).exp()).abs() <= 1e-14 * v.max(1.0));
        }
    }
}

#[test]
fn phi_respects_its_lipschitz_bound() {
    let emb = PhiEmbedding::visual(Point::origin(3), 128, 2.0, 0).unwrap();
    let r = phi_lipschitz_scan(&emb, 2.0, 2000, 9).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.max_ratio > 0.0 && r.max_ratio <= r.bound);
    assert_eq!(r.bound, 2.0 * 4f64.exp());
}

#[test]
fn identity_scenario_is_an_equality_case() {
    let sc = identity(1.0);
    let o = Point::origin(3);
    let jac = sc.jacobian_fd(&o, DEFAULT_FD_STEP).unwrap();
    assert!((jac.det_abs - 1.0).abs() < 1e-3);
    assert!(distance(&Point::new(jac.image).unwrap(), &o).unwrap() < 1e-6);
    let (pushed, res) = sc.evaluate_detailed(&o).unwrap();
    let h = h_form(&pushed, &res.point).unwrap();
    assert!(h.max_abs_diff(&DMatrix::identity(3, 3).scale(1.0 / 3.0)) < 1e-10);
}

#[test]
fn rescaled_source_scales_the_jacobian() {
    let o = Point::origin(3);
    for c in [0.5, 2.0] {
        let det = identity(c).jacobian_fd(&o, DEFAULT_FD_STEP).unwrap().det_abs;
        let expected = c.powi(-3);
        assert!((det / expected - 1.0).abs() < 0.02, "c={c}: {det}");
    }
}

#[test]
fn squeeze_scenario_respects_the_bound() {
    let sc = NaturalMapScenario::visual(3, 128, 0, 1.0, BoundaryMapKind::squeeze(2.0).unwrap()).unwrap();
    let pts = sc.sample_points(20, 1.0, 7);
    let report = sc.bound_check(&pts, DEFAULT_FD_STEP).unwrap();
    assert_eq!(report.checked, 20);
    assert_eq!(report.violations, 0);
    assert!(report.max_jacobian <= 1.0 + 1e-2);
}

#[test]
fn natural_map_is_equivariant() {
    let sc = NaturalMapScenario::visual(3, 64, 2, 1.0, BoundaryMapKind::squeeze(1.5).unwrap()).unwrap();
    let mut rng = rng_from_seed(6);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let g: Isom = random_isometry(3, 500 + k);
        let x: Point = hyperbary::hyperboloid::random_point(3, 1.0, &mut rng);
        let fx = sc.evaluate(&x).unwrap();
        let moved = sc.transformed(&g).evaluate(&g.apply_point(&x)).unwrap();
        worst = worst.max(distance(&moved, &g.apply_point(&fx)).unwrap());
    }
    assert!(worst < 1e-6, "max deviation {worst:e}");
}

#[test]
fn identity_scenario_is_nearly_contracting_near_the_basepoint() {
    let ratio = identity(1.0).lipschitz_scan(256, 0.1, 3).unwrap();
    assert!(ratio <= 1.05, "ratio {ratio}");
}
