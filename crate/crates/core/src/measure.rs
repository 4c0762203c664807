//! Finitely supported positive measures on the ideal boundary.
//!
//! Continuous measures (visual measures, conformal densities) are only ever
//! handled through quadrature: a [`BoundaryMeasure`] is a list of weighted
//! atoms, with atoms closer than [`MERGE_ANGLE`] merged on construction.

use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::hyperboloid::{busemann_value, lorentz_dot, tangent_frame, BoundaryPoint, HPoint, Isometry};
use crate::real::Real;
use crate::sampling::rng_from_seed;

/// Angular separation below which two atoms are treated as the same point.
pub const MERGE_ANGLE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom<T: Real> {
    pub point: BoundaryPoint<T>,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMeasure<T: Real> {
    n: usize,
    atoms: Vec<Atom<T>>,
}

impl<T: Real> BoundaryMeasure<T> {
    /// Builds a measure on the boundary of `H^n`, merging near-coincident atoms.
    pub fn new(n: usize, atoms: Vec<(BoundaryPoint<T>, T)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Argument("a boundary measure needs at least one atom".into()));
        }
        for (p, w) in &atoms {
            if p.dim() != n {
                return Err(Error::Argument(format!(
                    "atom of dimension {} in a measure on the boundary of H^{n}",
                    p.dim()
                )));
            }
            if !(*w > T::zero()) || !w.is_finite() {
                return Err(Error::Argument(format!("atom weight must be positive and finite, got {w}")));
            }
        }
        Ok(Self {
            n,
            atoms: merge_duplicates(atoms),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, a| acc + a.weight)
    }

    /// Largest atom weight as a fraction of the total mass.
    pub fn max_atom_fraction(&self) -> T {
        let max = self.atoms.iter().fold(T::zero(), |acc, a| acc.max(a.weight));
        max / self.total_mass()
    }

    pub fn normalize(&self) -> Self {
        let mass = self.total_mass();
        self.map_weights(|w| w / mass)
    }

    pub fn scale(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::Argument(format!("scale factor must be positive, got {c}")));
        }
        Ok(self.map_weights(|w| w * c))
    }

    fn map_weights(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    point: a.point.clone(),
                    weight: f(a.weight),
                })
                .collect(),
        }
    }

    /// Multiplies each atom's weight by `factor(atom)`.
    pub fn reweighted(&self, factor: impl Fn(&BoundaryPoint<T>) -> T) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| (a.point.clone(), a.weight * factor(&a.point)))
            .collect();
        Self::new(self.n, atoms)
    }

    /// Image measure under a boundary map; weights are carried over and
    /// atoms that land on the same point are merged.
    pub fn pushforward<M: BoundaryMap<T> + ?Sized>(&self, f: &M) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let raw = f.map_raw(&a.point);
                if raw.len() != self.n + 1 {
                    return Err(Error::Contract("boundary map changed the dimension".into()));
                }
                Ok((BoundaryPoint::from_null(&raw)?, a.weight))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, atoms)
    }

    /// `int theta dmu` over the unit spatial directions.
    pub fn spatial_moment(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.n];
        for a in &self.atoms {
            for (mi, &x) in m.iter_mut().zip(a.point.spatial()) {
                *mi += a.weight * x;
            }
        }
        m
    }

    pub fn cast<U: Real>(&self) -> BoundaryMeasure<U> {
        BoundaryMeasure {
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    point: a.point.cast(),
                    weight: U::lit(a.weight.to_f64_lossy()),
                })
                .collect(),
        }
    }
}

/// Union of atoms closer than [`MERGE_ANGLE`]; each merged atom keeps the
/// position of its earliest member and the summed weight.
fn merge_duplicates<T: Real>(atoms: Vec<(BoundaryPoint<T>, T)>) -> Vec<Atom<T>> {
    let len = atoms.len();
    let tol = T::lit(MERGE_ANGLE);
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| {
        atoms[a].0.spatial()[0]
            .partial_cmp(&atoms[b].0.spatial()[0])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut parent: Vec<usize> = (0..len).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (k, &i) in order.iter().enumerate() {
        let xi = atoms[i].0.spatial()[0];
        for &j in &order[k + 1..] {
            if atoms[j].0.spatial()[0] - xi > tol {
                break;
            }
            if atoms[i].0.angle_to(&atoms[j].0) <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut weight = vec![T::zero(); len];
    for (i, (_, w)) in atoms.iter().enumerate() {
        let r = find(&mut parent, i);
        weight[r] += *w;
    }
    atoms
        .into_iter()
        .enumerate()
        .filter(|(i, _)| parent[*i] == *i)
        .map(|(i, (point, _))| Atom {
            point,
            weight: weight[i],
        })
        .collect()
}

/// A transformation of the ideal boundary. Implementors return the image as
/// an ambient vector, which must be future-pointing and null; it is rescaled
/// and validated by [`BoundaryMeasure::pushforward`].
pub trait BoundaryMap<T: Real> {
    fn map_raw(&self, theta: &BoundaryPoint<T>) -> Vec<T>;

    fn apply(&self, theta: &BoundaryPoint<T>) -> Result<BoundaryPoint<T>> {
        BoundaryPoint::from_null(&self.map_raw(theta))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMap;

impl<T: Real> BoundaryMap<T> for IdentityMap {
    fn map_raw(&self, theta: &BoundaryPoint<T>) -> Vec<T> {
        theta.dir().to_vec()
    }
}

impl<T: Real> BoundaryMap<T> for Isometry<T> {
    fn map_raw(&self, theta: &BoundaryPoint<T>) -> Vec<T> {
        self.apply_boundary(theta).dir().to_vec()
    }
}

/// Adapter for closures.
pub struct MapFn<F>(pub F);

impl<T: Real, F: Fn(&BoundaryPoint<T>) -> Vec<T>> BoundaryMap<T> for MapFn<F> {
    fn map_raw(&self, theta: &BoundaryPoint<T>) -> Vec<T> {
        (self.0)(theta)
    }
}

/// `outer . inner`.
pub struct Composed<'a, T: Real> {
    pub outer: &'a dyn BoundaryMap<T>,
    pub inner: &'a dyn BoundaryMap<T>,
}

impl<T: Real> BoundaryMap<T> for Composed<'_, T> {
    fn map_raw(&self, theta: &BoundaryPoint<T>) -> Vec<T> {
        let mid = self.inner.map_raw(theta);
        match BoundaryPoint::from_null(&mid) {
            Ok(p) => self.outer.map_raw(&p),
            // propagate the invalid vector so pushforward reports it
            Err(_) => mid,
        }
    }
}

/// A family `p -> mu_p` of boundary measures with
/// `d mu_p / d mu_q (theta) = exp(-exponent * (B_theta(p) - B_theta(q)))`,
/// generated from its value at `basepoint`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityFamily<T: Real> {
    pub basepoint: HPoint<T>,
    pub base_measure: BoundaryMeasure<T>,
    pub exponent: T,
}

impl<T: Real> DensityFamily<T> {
    pub fn new(basepoint: HPoint<T>, base_measure: BoundaryMeasure<T>, exponent: T) -> Result<Self> {
        if !(exponent > T::zero()) || !exponent.is_finite() {
            return Err(Error::Argument(format!("density exponent must be positive, got {exponent}")));
        }
        if basepoint.dim() != base_measure.dim() {
            return Err(Error::Argument("basepoint and base measure dimensions differ".into()));
        }
        Ok(Self {
            basepoint,
            base_measure,
            exponent,
        })
    }

    /// The member of the family at `p`.
    pub fn density_at(&self, p: &HPoint<T>) -> BoundaryMeasure<T> {
        let o = &self.basepoint;
        let l = self.exponent;
        BoundaryMeasure {
            n: self.base_measure.n,
            atoms: self
                .base_measure
                .atoms
                .iter()
                .map(|a| Atom {
                    point: a.point.clone(),
                    weight: a.weight * (-l * busemann_value(&a.point, p, o)).exp(),
                })
                .collect(),
        }
    }

    /// Image family under an isometry: basepoint and atoms are moved by `g`.
    pub fn transformed(&self, g: &Isometry<T>) -> Self {
        Self {
            basepoint: g.apply_point(&self.basepoint),
            base_measure: BoundaryMeasure {
                n: self.base_measure.n,
                atoms: self
                    .base_measure
                    .atoms
                    .iter()
                    .map(|a| Atom {
                        point: g.apply_boundary(&a.point),
                        weight: a.weight,
                    })
                    .collect(),
            },
            exponent: self.exponent,
        }
    }
}

/// Sphere point sets used to discretize visual measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureScheme {
    /// The `2n` vertices of the cross-polytope; requires `m = 2n`.
    Cross,
    /// Antipodally symmetric equal-weight set with isotropic second moment.
    /// Coincides with [`QuadratureScheme::Cross`] when `m = 2n`.
    Symmetric { seed: u64 },
    /// Randomly shifted Halton points pushed to the sphere, no symmetrization.
    LowDiscrepancy { seed: u64 },
}

impl QuadratureScheme {
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        match name {
            "cross" => Ok(Self::Cross),
            "symmetric" => Ok(Self::Symmetric { seed }),
            "low-discrepancy" => Ok(Self::LowDiscrepancy { seed }),
            other => Err(Error::Argument(format!("unsupported quadrature scheme '{other}'"))),
        }
    }
}

impl FromStr for QuadratureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, 0)
    }
}

/// Equal-weight quadrature (total mass 1) of the visual measure at `p`: the
/// push-forward of the uniform measure on the unit tangent sphere at `p`
/// under the radial map.
pub fn visual_quadrature<T: Real>(p: &HPoint<T>, m: usize, scheme: QuadratureScheme) -> Result<BoundaryMeasure<T>> {
    let n = p.dim();
    if m < n + 2 {
        return Err(Error::Argument(format!("need at least n + 2 = {} samples, got {m}", n + 2)));
    }
    let dirs = sphere_points(n, m, scheme)?;
    let frame = tangent_frame(p);
    let w = T::one() / T::lit(dirs.len() as f64);
    let atoms = dirs
        .iter()
        .map(|u| {
            let mut xi = p.coords().to_vec();
            for (e, &c) in frame.iter().zip(u) {
                for (x, &ev) in xi.iter_mut().zip(e.vec()) {
                    *x += T::lit(c) * ev;
                }
            }
            debug_assert!(lorentz_dot(&xi, &xi).abs() < T::lit(1e-6) * xi[0] * xi[0]);
            BoundaryPoint::from_null(&xi).map(|b| (b, w))
        })
        .collect::<Result<Vec<_>>>()?;
    BoundaryMeasure::new(n, atoms)
}

/// Unit vectors in `R^n` for the given scheme.
pub fn sphere_points(n: usize, m: usize, scheme: QuadratureScheme) -> Result<Vec<Vec<f64>>> {
    match scheme {
        QuadratureScheme::Cross => {
            if m != 2 * n {
                return Err(Error::Argument(format!("cross scheme needs m = 2n = {}, got {m}", 2 * n)));
            }
            Ok(cross_polytope(n))
        }
        QuadratureScheme::Symmetric { seed } => {
            if m == 2 * n {
                return Ok(cross_polytope(n));
            }
            if !m.is_multiple_of(2) {
                return Err(Error::Argument(format!("symmetric scheme needs an even sample count, got {m}")));
            }
            let half = halton_sphere(n, m / 2, seed);
            let mut pts = half.clone();
            pts.extend(half.into_iter().map(|v| v.into_iter().map(|x| -x).collect()));
            Ok(isotropic_rebalance(pts, n))
        }
        QuadratureScheme::LowDiscrepancy { seed } => Ok(halton_sphere(n, m, seed)),
    }
}

fn cross_polytope(n: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(2 * n);
    for sign in [1.0, -1.0] {
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = sign;
            pts.push(v);
        }
    }
    pts
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn halton_sphere(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n <= PRIMES.len(), "Halton bases exhausted");
    let mut rng = rng_from_seed(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut pts = Vec::with_capacity(count);
    let mut i = 1u64;
    while pts.len() < count {
        let g: Vec<f64> = (0..n)
            .map(|k| {
                let u = (radical_inverse(i, PRIMES[k]) + shift[k]).fract().clamp(1e-12, 1.0 - 1e-12);
                normal.inverse_cdf(u)
            })
            .collect();
        i += 1;
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            pts.push(g.into_iter().map(|x| x / norm).collect());
        }
    }
    pts
}

/// Fixed-point iteration `y <- normalize(M^{-1/2} y)`, `M = (n/m) sum y y^T`,
/// until the equal-weight second moment is `Id / n`. Linear maps commute
/// with `y -> -y`, so antipodal symmetry is kept.
fn isotropic_rebalance(mut pts: Vec<Vec<f64>>, n: usize) -> Vec<Vec<f64>> {
    let m = pts.len() as f64;
    for _ in 0..500 {
        let mut mom = DMatrix::<f64>::zeros(n, n);
        for y in &pts {
            for i in 0..n {
                for j in 0..n {
                    mom[(i, j)] += y[i] * y[j];
                }
            }
        }
        mom *= n as f64 / m;
        let dev = (&mom - DMatrix::<f64>::identity(n, n)).amax();
        if dev < 1e-15 {
            break;
        }
        let eig = SymmetricEigen::new(mom);
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
        for y in pts.iter_mut() {
            let z: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[(i, j)] * y[j]).sum()).collect();
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            *y = z.into_iter().map(|x| x / norm).collect();
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::{random_isometry, random_point};
    use crate::sampling::rng_from_seed;

    type M = BoundaryMeasure<f64>;

    fn bp(v: &[f64]) -> BoundaryPoint<f64> {
        BoundaryPoint::from_direction(v).unwrap()
    }

    #[test]
    fn rejects_bad_weights_and_empty() {
        assert!(M::new(2, vec![]).is_err());
        assert!(M::new(2, vec![(bp(&[1.0, 0.0]), 0.0)]).is_err());
        assert!(M::new(2, vec![(bp(&[1.0, 0.0]), -1.0)]).is_err());
        assert!(M::new(3, vec![(bp(&[1.0, 0.0]), 1.0)]).is_err());
    }

    #[test]
    fn merges_near_duplicates() {
        let a = bp(&[1.0, 0.0, 0.0]);
        let b = bp(&[1.0, 1e-11, 0.0]);
        let c = bp(&[0.0, 1.0, 0.0]);
        let mu = M::new(3, vec![(a.clone(), 1.0), (c, 2.0), (b, 0.5)]).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.atoms()[0].point, a);
        assert_eq!(mu.atoms()[0].weight, 1.5);
        // 1e-7 apart is a genuine second atom
        let d = bp(&[1.0, 1e-7, 0.0]);
        let mu = M::new(3, vec![(bp(&[1.0, 0.0, 0.0]), 1.0), (d, 1.0)]).unwrap();
        assert_eq!(mu.len(), 2);
    }

    #[test]
    fn cross_scheme_in_the_plane() {
        let o = HPoint::<f64>::origin(2);
        let mu = visual_quadrature(&o, 4, QuadratureScheme::Symmetric { seed: 0 }).unwrap();
        assert_eq!(mu.len(), 4);
        let dirs: Vec<Vec<f64>> = mu.atoms().iter().map(|a| a.point.spatial().to_vec()).collect();
        for want in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
            assert!(dirs.iter().any(|d| (d[0] - want[0]).abs() < 1e-15 && (d[1] - want[1]).abs() < 1e-15));
        }
        assert!(mu.atoms().iter().all(|a| a.weight == 0.25));
    }

    #[test]
    fn quadrature_errors() {
        let o = HPoint::<f64>::origin(3);
        assert!(visual_quadrature(&o, 4, QuadratureScheme::Symmetric { seed: 0 }).is_err());
        assert!(visual_quadrature(&o, 9, QuadratureScheme::Symmetric { seed: 0 }).is_err());
        assert!(visual_quadrature(&o, 8, QuadratureScheme::Cross).is_err());
        assert!(QuadratureScheme::parse("gauss", 0).is_err());
    }

    #[test]
    fn symmetric_scheme_is_balanced_and_isotropic() {
        for (n, m) in [(2, 16), (3, 64), (3, 128), (5, 100)] {
            let o = HPoint::<f64>::origin(n);
            let mu = visual_quadrature(&o, m, QuadratureScheme::Symmetric { seed: 4 }).unwrap();
            assert_eq!(mu.len(), m);
            assert!((mu.total_mass() - 1.0).abs() < 1e-14);
            let w0 = mu.atoms()[0].weight;
            assert!(mu.atoms().iter().all(|a| a.weight == w0));
            assert!(mu.spatial_moment().iter().all(|x| x.abs() < 1e-12));
            for i in 0..n {
                for j in 0..n {
                    let s: f64 = mu.atoms().iter().map(|a| a.weight * a.point.spatial()[i] * a.point.spatial()[j]).sum();
                    let want = if i == j { 1.0 / n as f64 } else { 0.0 };
                    assert!((s - want).abs() < 1e-13, "n={n} m={m} ({i},{j}) {s}");
                }
            }
        }
    }

    #[test]
    fn low_discrepancy_moment_shrinks_with_m() {
        let o = HPoint::<f64>::origin(3);
        let moment = |m: usize| {
            let mu = visual_quadrature(&o, m, QuadratureScheme::LowDiscrepancy { seed: 2 }).unwrap();
            mu.spatial_moment().iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        let (a, b, c) = (moment(64), moment(1024), moment(16384));
        assert!(a > b && b > c, "{a} {b} {c}");
        assert!(c < 5e-3);
    }

    #[test]
    fn visual_quadrature_off_origin_has_unit_mass() {
        let mut rng = rng_from_seed(2);
        let p: HPoint<f64> = random_point(3, 2.0, &mut rng);
        let mu = visual_quadrature(&p, 32, QuadratureScheme::Symmetric { seed: 1 }).unwrap();
        assert!((mu.total_mass() - 1.0).abs() < 1e-14);
        assert_eq!(mu.len(), 32);
    }

    #[test]
    fn mass_arithmetic() {
        let o = HPoint::<f64>::origin(3);
        let mu = visual_quadrature(&o, 20, QuadratureScheme::Symmetric { seed: 9 }).unwrap();
        let mu = mu.reweighted(|p| 1.0 + p.spatial()[0].abs()).unwrap();
        assert!((mu.normalize().total_mass() - 1.0).abs() < 1e-15);
        assert!((mu.scale(2.0).unwrap().total_mass() - 2.0 * mu.total_mass()).abs() < 1e-15);
        let a = mu.scale(7.0).unwrap().normalize();
        let b = mu.normalize();
        for (x, y) in a.atoms().iter().zip(b.atoms()) {
            assert!((x.weight - y.weight).abs() < 1e-16);
        }
        assert!(mu.scale(0.0).is_err());
        assert!(mu.scale(-1.0).is_err());
    }

    #[test]
    fn pushforward_identity_isometry_and_composition() {
        let o = HPoint::<f64>::origin(3);
        let mu = visual_quadrature(&o, 24, QuadratureScheme::Symmetric { seed: 3 }).unwrap();
        assert_eq!(mu.pushforward(&IdentityMap).unwrap(), mu);
        let g: Isometry<f64> = random_isometry(3, 1);
        let h: Isometry<f64> = random_isometry(3, 2);
        let pg = mu.pushforward(&g).unwrap();
        assert_eq!(pg.total_mass(), mu.total_mass());
        let two_step = pg.pushforward(&h).unwrap();
        let one_step = mu.pushforward(&h.compose(&g)).unwrap();
        assert_eq!(two_step.len(), one_step.len());
        for (a, b) in two_step.atoms().iter().zip(one_step.atoms()) {
            assert!(a.point.angle_to(&b.point) < 1e-10);
            assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn pushforward_rejects_non_null_images() {
        let o = HPoint::<f64>::origin(2);
        let mu = visual_quadrature(&o, 4, QuadratureScheme::Cross).unwrap();
        let bad = MapFn(|t: &BoundaryPoint<f64>| vec![1.0, 2.0 * t.spatial()[0], 2.0 * t.spatial()[1]]);
        assert!(matches!(mu.pushforward(&bad), Err(Error::Contract(_))));
        let past = MapFn(|t: &BoundaryPoint<f64>| vec![-1.0, t.spatial()[0], t.spatial()[1]]);
        assert!(matches!(mu.pushforward(&past), Err(Error::Contract(_))));
    }

    #[test]
    fn density_family_cocycle_and_mass_bound() {
        let n = 3;
        let o = HPoint::<f64>::origin(n);
        let base = visual_quadrature(&o, 64, QuadratureScheme::Symmetric { seed: 5 }).unwrap();
        let fam = DensityFamily::new(o.clone(), base.clone(), (n - 1) as f64).unwrap();
        assert_eq!(fam.density_at(&o), base);
        let mut rng = rng_from_seed(17);
        for _ in 0..20 {
            let p: HPoint<f64> = random_point(n, 2.0, &mut rng);
            let q: HPoint<f64> = random_point(n, 2.0, &mut rng);
            let (mp, mq) = (fam.density_at(&p), fam.density_at(&q));
            for (a, b) in mp.atoms().iter().zip(mq.atoms()) {
                let want = (-fam.exponent
                    * (busemann_value(&a.point, &p, &o) - busemann_value(&a.point, &q, &o)))
                .exp();
                assert!((a.weight / b.weight - want).abs() < 1e-10 * want.max(1.0));
            }
            let d = crate::hyperboloid::distance(&o, &p).unwrap();
            assert!(mp.total_mass() <= (fam.exponent * d).exp());
        }
    }
}
