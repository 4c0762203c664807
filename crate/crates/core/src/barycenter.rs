//! Barycenters of boundary measures.
//!
//! The barycenter of `lambda` is the unique critical point of the averaged
//! Busemann functional `B_lambda(p) = sum_theta w_theta B^o_theta(p)`. For a
//! finitely supported measure the functional is proper and strictly convex as
//! long as no atom carries half of the mass and the support is not a single
//! antipodal pair; both conditions are checked when a problem is built.
//!
//! The solver is a damped Newton iteration in the tangent space of the
//! current iterate, retracted with the exponential map.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forms::SpdForm;
use crate::hyperboloid::{
    busemann_gradient, busemann_value, exp_map, frame_coords, from_frame_coords, lorentz_dot, tangent_frame,
};
use crate::measure::{BoundaryMap, DensityFamily, MERGE_ANGLE};
use crate::{Measure, Point, Tangent};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Stop once the mass-normalized gradient norm is at most this.
    pub gradient: f64,
    pub max_iterations: usize,
    /// Hessian eigenvalues below this trigger a conditioning warning.
    pub conditioning_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-10,
            max_iterations: 100,
            conditioning_floor: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BarycenterProblem {
    measure: Measure,
    origin: Point,
    tol: Tolerances,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarycenterResult {
    pub point: Point,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub hessian_min_eigenvalue: f64,
    /// Mass-normalized functional value at each accepted iterate, starting
    /// with the initial point.
    pub values: Vec<f64>,
    /// Largest number of step halvings any iteration needed.
    pub max_halvings: usize,
}

/// Properness and nondegeneracy checks for a finitely supported measure.
pub fn check_guards(measure: &Measure) -> Result<()> {
    let frac = measure.max_atom_fraction();
    if !(frac < 0.5) {
        return Err(Error::Guard(format!(
            "an atom carries {frac:.6} of the total mass; the functional is unbounded below unless every atom is below 1/2"
        )));
    }
    let atoms = measure.atoms();
    if atoms.len() < 3 {
        return Err(Error::Guard(format!(
            "support has {} atoms; at least 3 are needed for a nondegenerate Hessian",
            atoms.len()
        )));
    }
    let first = &atoms[0].point;
    let anti = first.antipode();
    let in_pair = atoms
        .iter()
        .all(|a| a.point.angle_to(first) <= MERGE_ANGLE || a.point.angle_to(&anti) <= MERGE_ANGLE);
    if in_pair {
        return Err(Error::Guard("support lies in a single antipodal pair".into()));
    }
    Ok(())
}

impl BarycenterProblem {
    pub fn new(measure: Measure, origin: Point) -> Result<Self> {
        if measure.dim() != origin.dim() {
            return Err(Error::Argument("measure and origin dimensions differ".into()));
        }
        check_guards(&measure)?;
        Ok(Self {
            measure,
            origin,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn origin(&self) -> &Point {
        &self.origin
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn functional_value(&self, p: &Point) -> f64 {
        value(&self.measure, p, &self.origin)
    }

    pub fn functional_gradient(&self, p: &Point) -> Tangent {
        let frame = tangent_frame(p);
        let (g, _) = gradient_and_hessian(&self.measure, p, &frame);
        from_frame_coords(&frame, g.as_slice())
    }

    /// Hessian in the frame [`tangent_frame`]`(p)`.
    pub fn functional_hessian(&self, p: &Point) -> Result<SpdForm> {
        let frame = tangent_frame(p);
        let (_, h) = gradient_and_hessian(&self.measure, p, &frame);
        SpdForm::from_matrix(&h)
    }

    /// Starting point: the mass-weighted sum of the atoms' null vectors,
    /// rescaled onto the sheet.
    pub fn initial_point(&self) -> Point {
        let n = self.measure.dim();
        let mut c = vec![0.0; n + 1];
        for a in self.measure.atoms() {
            for (ci, &x) in c.iter_mut().zip(a.point.dir()) {
                *ci += a.weight * x;
            }
        }
        let q = -lorentz_dot(&c, &c);
        let s = q.sqrt();
        Point::from_spatial(&c[1..].iter().map(|x| x / s).collect::<Vec<_>>())
    }

    pub fn barycenter(&self) -> Result<BarycenterResult> {
        self.barycenter_from(&self.initial_point())
    }

    pub fn barycenter_from(&self, start: &Point) -> Result<BarycenterResult> {
        // Solve on the probability measure so the stopping rule and the
        // iterates do not depend on the overall scale of the weights.
        let mu = self.measure.normalize();
        let mut p = start.clone();
        let mut values = vec![value(&mu, &p, &self.origin)];
        let mut max_halvings = 0;
        for it in 0..=self.tol.max_iterations {
            let frame = tangent_frame(&p);
            let (g, h) = gradient_and_hessian(&mu, &p, &frame);
            let mut gnorm = g.norm();
            if gnorm <= self.tol.gradient {
                let mut it = it;
                let mut h = h;
                // One polishing step: the gradient test bounds the distance
                // to the minimizer only by gnorm / lambda_min.
                if gnorm > 0.0 {
                    if let Some(ch) = h.clone().cholesky() {
                        let step = ch.solve(&(-&g));
                        let q = exp_map(&from_frame_coords(&frame, step.as_slice()));
                        let q_frame = tangent_frame(&q);
                        let (gq, hq) = gradient_and_hessian(&mu, &q, &q_frame);
                        if gq.norm() <= gnorm {
                            values.push(value(&mu, &q, &self.origin));
                            (p, h, gnorm, it) = (q, hq, gq.norm(), it + 1);
                        }
                    }
                }
                let min_eig = SpdForm::from_matrix(&h)?.min_eigenvalue();
                if min_eig < self.tol.conditioning_floor {
                    warn!("barycenter Hessian nearly singular: min eigenvalue {min_eig:e}");
                }
                return Ok(BarycenterResult {
                    point: p,
                    iterations: it,
                    final_gradient_norm: gnorm,
                    hessian_min_eigenvalue: min_eig,
                    values,
                    max_halvings,
                });
            }
            if it == self.tol.max_iterations {
                break;
            }
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    return Err(Error::Domain("Hessian lost positive definiteness".into()));
                }
            };
            let f0 = *values.last().unwrap();
            let direction = from_frame_coords(&frame, step.as_slice());
            let mut t = 1.0;
            let mut halvings = 0;
            let (next, f_next) = loop {
                let q = exp_map(&direction.scaled(t));
                let fq = value(&mu, &q, &self.origin);
                if fq <= f0 + 4.0 * f64::EPSILON * (1.0 + f0.abs()) || halvings >= 60 {
                    break (q, fq);
                }
                t *= 0.5;
                halvings += 1;
            };
            max_halvings = max_halvings.max(halvings);
            p = next;
            values.push(f_next);
        }
        let frame = tangent_frame(&p);
        let (g, _) = gradient_and_hessian(&mu, &p, &frame);
        Err(Error::NonConvergence {
            iterations: self.tol.max_iterations,
            gradient_norm: g.norm(),
            last_iterate: p.coords().to_vec(),
        })
    }
}

fn value(mu: &Measure, p: &Point, o: &Point) -> f64 {
    mu.atoms()
        .iter()
        .map(|a| a.weight * busemann_value(&a.point, p, o))
        .sum()
}

/// Gradient and Hessian of the functional in frame coordinates at `p`.
fn gradient_and_hessian(mu: &Measure, p: &Point, frame: &[Tangent]) -> (DVector<f64>, DMatrix<f64>) {
    let n = p.dim();
    let mut g = DVector::<f64>::zeros(n);
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut mass = 0.0;
    for atom in mu.atoms() {
        let a = frame_coords(frame, &busemann_gradient(&atom.point, p));
        let w = atom.weight;
        mass += w;
        for i in 0..n {
            g[i] += w * a[i];
            for j in 0..n {
                h[(i, j)] -= w * a[i] * a[j];
            }
        }
    }
    for i in 0..n {
        h[(i, i)] += mass;
    }
    (g, h)
}

/// Barycenter of `f_* mu_x`, where `mu_x` is the member of `family` at `x`.
pub fn natural_point(x: &Point, family: &DensityFamily<f64>, f: &dyn BoundaryMap<f64>) -> Result<Point> {
    Ok(natural_point_detailed(x, family, f, Tolerances::default(), None)?.1.point)
}

/// As [`natural_point`], also returning the pushed measure; `start` seeds
/// the Newton iteration.
pub fn natural_point_detailed(
    x: &Point,
    family: &DensityFamily<f64>,
    f: &dyn BoundaryMap<f64>,
    tol: Tolerances,
    start: Option<&Point>,
) -> Result<(Measure, BarycenterResult)> {
    let pushed = family.density_at(x).pushforward(f)?;
    let problem = BarycenterProblem::new(pushed, family.basepoint.clone())?.with_tolerances(tol);
    let result = match start {
        Some(s) => problem.barycenter_from(s)?,
        None => problem.barycenter()?,
    };
    let BarycenterProblem { measure, .. } = problem;
    Ok((measure, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::{distance, random_boundary_point, random_isometry, random_point, random_tangent};
    use crate::measure::{visual_quadrature, IdentityMap, QuadratureScheme};
    use crate::sampling::rng_from_seed;
    use crate::{Ideal, Isom};
    use rand::Rng;

    fn random_measure(n: usize, atoms: usize, rng: &mut impl Rng) -> Measure {
        let a: Vec<(Ideal, f64)> = (0..atoms)
            .map(|_| (random_boundary_point(n, rng), rng.random_range(0.2..1.0)))
            .collect();
        Measure::new(n, a).unwrap()
    }

    #[test]
    fn guards_reject_heavy_atoms_and_pairs() {
        let t = Ideal::from_direction(&[1.0, 0.0]).unwrap();
        let u = Ideal::from_direction(&[0.0, 1.0]).unwrap();
        let pair = Measure::new(2, vec![(t.clone(), 1.0), (t.antipode(), 1.0)]).unwrap();
        assert!(matches!(BarycenterProblem::new(pair, Point::origin(2)), Err(Error::Guard(_))));
        let heavy = Measure::new(2, vec![(t.clone(), 2.0), (t.antipode(), 1.0), (u.clone(), 1.0)]).unwrap();
        assert!(matches!(BarycenterProblem::new(heavy, Point::origin(2)), Err(Error::Guard(_))));
        let single = Measure::new(2, vec![(u, 1.0)]).unwrap();
        assert!(matches!(BarycenterProblem::new(single, Point::origin(2)), Err(Error::Guard(_))));
    }

    #[test]
    fn symmetric_measure_has_zero_gradient_at_origin() {
        for n in 2..=5 {
            let o = Point::origin(n);
            let mu = visual_quadrature(&o, 2 * n, QuadratureScheme::Cross).unwrap();
            let prob = BarycenterProblem::new(mu, o.clone()).unwrap();
            assert!(prob.functional_gradient(&o).norm() < 1e-15);
            let r = prob.barycenter().unwrap();
            assert!(distance(&r.point, &o).unwrap() < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(4);
        for _ in 0..20 {
            let n = rng.random_range(2..=5);
            let mu = random_measure(n, 7, &mut rng);
            let o = Point::origin(n);
            let prob = BarycenterProblem::new(mu, o).unwrap();
            let p: Point = random_point(n, 1.5, &mut rng);
            let g = prob.functional_gradient(&p);
            let v = random_tangent(&p, 1.0, &mut rng);
            let v = v.scaled(1.0 / v.norm());
            let h = 1e-5;
            let fd = (prob.functional_value(&exp_map(&v.scaled(h))) - prob.functional_value(&exp_map(&v.scaled(-h))))
                / (2.0 * h);
            assert!((fd - g.dot(&v)).abs() < 1e-6, "fd {fd} vs {}", g.dot(&v));
        }
    }

    #[test]
    fn hessian_degenerates_as_third_atom_vanishes() {
        let t = Ideal::from_direction(&[1.0, 0.0]).unwrap();
        let u = Ideal::from_direction(&[0.0, 1.0]).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=6 {
            let eps = 10f64.powi(-k);
            let mu = Measure::new(
                2,
                vec![(t.clone(), (1.0 - eps) / 2.0), (t.antipode(), (1.0 - eps) / 2.0), (u.clone(), eps)],
            )
            .unwrap();
            let r = BarycenterProblem::new(mu, Point::origin(2)).unwrap().barycenter().unwrap();
            assert!(r.hessian_min_eigenvalue < last);
            let expected = eps / (1.0 - eps);
            assert!((r.hessian_min_eigenvalue - expected).abs() < 1e-6 * expected);
            last = r.hessian_min_eigenvalue;
        }
    }

    #[test]
    fn equivariance_and_start_independence() {
        let mut rng = rng_from_seed(9);
        for s in 0..20u64 {
            let n = rng.random_range(2..=4);
            let mu = random_measure(n, 6, &mut rng);
            let o = Point::origin(n);
            let base = BarycenterProblem::new(mu.clone(), o.clone()).unwrap().barycenter().unwrap();
            let g: Isom = random_isometry(n, 100 + s);
            let moved = BarycenterProblem::new(mu.pushforward(&g).unwrap(), o.clone())
                .unwrap()
                .barycenter()
                .unwrap();
            assert!(distance(&moved.point, &g.apply_point(&base.point)).unwrap() < 1e-8);
            let start: Point = random_point(n, 3.0, &mut rng);
            let other = BarycenterProblem::new(mu, o).unwrap().barycenter_from(&start).unwrap();
            assert!(distance(&other.point, &base.point).unwrap() < 1e-9);
        }
    }

    #[test]
    fn newton_values_decrease() {
        let mut rng = rng_from_seed(12);
        for _ in 0..30 {
            let n = rng.random_range(2..=5);
            let mu = random_measure(n, 5, &mut rng);
            let start: Point = random_point(n, 4.0, &mut rng);
            let r = BarycenterProblem::new(mu, Point::origin(n))
                .unwrap()
                .barycenter_from(&start)
                .unwrap();
            assert!(r.values.windows(2).all(|w| w[1] <= w[0] + 1e-14));
            assert!(r.final_gradient_norm <= 1e-10);
            assert!(r.hessian_min_eigenvalue > 0.0);
        }
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let mut rng = rng_from_seed(2);
        let mu = random_measure(3, 6, &mut rng);
        let tol = Tolerances {
            max_iterations: 0,
            ..Tolerances::default()
        };
        let far: Point = random_point(3, 3.0, &mut rng);
        match BarycenterProblem::new(mu, Point::origin(3))
            .unwrap()
            .with_tolerances(tol)
            .barycenter_from(&far)
        {
            Err(Error::NonConvergence { last_iterate, .. }) => assert_eq!(last_iterate.len(), 4),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn natural_point_identity_at_basepoint() {
        let o = Point::origin(3);
        let base = visual_quadrature(&o, 64, QuadratureScheme::Symmetric { seed: 1 }).unwrap();
        let fam = DensityFamily::new(o.clone(), base, 2.0).unwrap();
        let fx = natural_point(&o, &fam, &IdentityMap).unwrap();
        assert!(distance(&fx, &o).unwrap() < 1e-10);
        let g: Isom = random_isometry(3, 5);
        let gx = natural_point(&o, &fam, &g).unwrap();
        assert!(distance(&gx, &g.apply_point(&o)).unwrap() < 1e-6);
    }
}
