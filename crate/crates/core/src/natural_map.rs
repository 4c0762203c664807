//! The natural map `F(x) = bar(f_* mu_x)` for a density family on the
//! boundary of ℍⁿ, the square-root embedding `Φ`, and numerical checks of
//! the Jacobian bound.
//!
//! A scenario may carry a metric scale `c`: the source space is ℍⁿ with its
//! distances multiplied by `c`, so its entropy is `(n-1)/c`. Lengths on the
//! source side (finite-difference steps, Lipschitz ratios) are measured in
//! the scaled metric.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::barycenter::{natural_point_detailed, BarycenterResult, Tolerances};
use crate::error::{Error, Result};
use crate::forms::{h_form, jacobian_upper_bound, k_form};
use crate::hyperboloid::{
    busemann_value, distance, exp_map, frame_coords, from_frame_coords, log_map, random_point, random_tangent,
    tangent_frame,
};
use crate::measure::{visual_quadrature, BoundaryMap, Composed, QuadratureScheme};
use crate::sampling::chunk_rng;
use crate::{Density, Ideal, Isom, Measure, Point};

/// `x -> (exp(-h B_eta(x) / 2))_eta` over a finite boundary sample, with the
/// empirical-mean inner product on the target.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiEmbedding {
    pub sample: Vec<Ideal>,
    pub h: f64,
    pub origin: Point,
}

impl PhiEmbedding {
    pub fn new(sample: Vec<Ideal>, h: f64, origin: Point) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Argument("boundary sample is empty".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!("entropy parameter {h} must be positive")));
        }
        if sample.iter().any(|s| s.dim() != origin.dim()) {
            return Err(Error::Argument("sample and origin dimensions differ".into()));
        }
        Ok(Self { sample, h, origin })
    }

    /// Uses the atoms of the visual quadrature at `origin`.
    pub fn visual(origin: Point, m: usize, h: f64, seed: u64) -> Result<Self> {
        let q = visual_quadrature(&origin, m, QuadratureScheme::Symmetric { seed })?;
        Self::new(q.atoms().iter().map(|a| a.point.clone()).collect(), h, origin)
    }

    pub fn phi(&self, x: &Point) -> Vec<f64> {
        self.sample
            .iter()
            .map(|eta| (-0.5 * self.h * busemann_value(eta, x, &self.origin)).exp())
            .collect()
    }

    /// Root-mean-square distance between two images.
    pub fn mean_norm_distance(a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (s / a.len() as f64).sqrt()
    }

    /// Lipschitz bound `h e^{D h}` on a ball of diameter `D` around the origin.
    pub fn lipschitz_bound(&self, diameter: f64) -> f64 {
        self.h * (diameter * self.h).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub pairs: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub violations: usize,
}

/// Empirical Lipschitz ratios of `Φ` over random pairs in the ball of
/// diameter `diameter` centred at the origin.
pub fn phi_lipschitz_scan(emb: &PhiEmbedding, diameter: f64, pairs: usize, seed: u64) -> Result<LipschitzReport> {
    if !(diameter > 0.0) {
        return Err(Error::Argument("diameter must be positive".into()));
    }
    let n = emb.origin.dim();
    let to_origin = Isom::translation_to(&emb.origin);
    let bound = emb.lipschitz_bound(diameter);
    let ratios = (0..pairs.div_ceil(PAIR_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let count = PAIR_CHUNK.min(pairs - c * PAIR_CHUNK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let x = to_origin.apply_point(&random_point(n, 0.5 * diameter, &mut rng));
                let y = to_origin.apply_point(&random_point(n, 0.5 * diameter, &mut rng));
                let d = distance(&x, &y)?;
                if d > 0.0 {
                    out.push(PhiEmbedding::mean_norm_distance(&emb.phi(&x), &emb.phi(&y)) / d);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(LipschitzReport {
        pairs: ratios.len(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        bound,
        violations: ratios.iter().filter(|&&r| r > bound).count(),
    })
}

const PAIR_CHUNK: usize = 256;

/// The boundary maps shipped with the scenarios.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryMapKind {
    Identity,
    Isometry(Isom),
    /// Stereographic chart from the pole `-e_n`, first chart coordinate
    /// multiplied by `stretch`. Not induced by an isometry unless
    /// `stretch = 1`.
    Squeeze { stretch: f64 },
    /// `g . f . g^{-1}`.
    Conjugated { inner: Box<BoundaryMapKind>, by: Isom },
}

impl BoundaryMapKind {
    pub fn squeeze(stretch: f64) -> Result<Self> {
        if !(stretch > 0.0 && stretch.is_finite()) {
            return Err(Error::Argument(format!("squeeze factor {stretch} must be positive")));
        }
        Ok(Self::Squeeze { stretch })
    }

    pub fn conjugated(self, g: Isom) -> Self {
        Self::Conjugated {
            inner: Box::new(self),
            by: g,
        }
    }
}

fn squeeze_direction(u: &[f64], stretch: f64) -> Vec<f64> {
    let n = u.len();
    let denom = 1.0 + u[n - 1];
    if denom <= 1e-300 {
        return u.to_vec();
    }
    let mut y: Vec<f64> = u[..n - 1].iter().map(|x| x / denom).collect();
    y[0] *= stretch;
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let mut out: Vec<f64> = y.iter().map(|v| 2.0 * v / (1.0 + r2)).collect();
    out.push((1.0 - r2) / (1.0 + r2));
    out
}

impl BoundaryMap<f64> for BoundaryMapKind {
    fn map_raw(&self, theta: &Ideal) -> Vec<f64> {
        match self {
            Self::Identity => theta.dir().to_vec(),
            Self::Isometry(g) => g.apply_boundary(theta).dir().to_vec(),
            Self::Squeeze { stretch } => {
                let mut v = vec![1.0];
                v.extend(squeeze_direction(theta.spatial(), *stretch));
                v
            }
            Self::Conjugated { inner, by } => {
                let ginv = by.inverse();
                Composed {
                    outer: by,
                    inner: &Composed {
                        outer: inner.as_ref(),
                        inner: &ginv,
                    },
                }
                .map_raw(theta)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct NaturalMapScenario {
    pub n: usize,
    /// Entropy of the source space, used in the Jacobian bounds.
    pub h: f64,
    /// Metric scale of the source space.
    pub scale: f64,
    pub family: Density,
    pub map: BoundaryMapKind,
}

impl NaturalMapScenario {
    pub fn new(family: Density, map: BoundaryMapKind, h: f64, scale: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!("entropy {h} must be positive")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Argument(format!("metric scale {scale} must be positive")));
        }
        let n = family.basepoint.dim();
        if n < 2 {
            return Err(Error::Argument("dimension must be at least 2".into()));
        }
        Ok(Self {
            n,
            h,
            scale,
            family,
            map,
        })
    }

    /// Visual family at the origin on ℍⁿ scaled by `scale`: entropy
    /// `(n-1)/scale`, density exponent `n-1` in unscaled Busemann units.
    pub fn visual(n: usize, m: usize, seed: u64, scale: f64, map: BoundaryMapKind) -> Result<Self> {
        let o = Point::origin(n);
        let base = visual_quadrature(&o, m, QuadratureScheme::Symmetric { seed })?;
        let h = (n as f64 - 1.0) / scale;
        let family = Density::new(o, base, h * scale)?;
        Self::new(family, map, h, scale)
    }

    /// Image under `g` of the source point, the family and the boundary map.
    pub fn transformed(&self, g: &Isom) -> Self {
        Self {
            n: self.n,
            h: self.h,
            scale: self.scale,
            family: self.family.transformed(g),
            map: self.map.clone().conjugated(g.clone()),
        }
    }

    fn solve(&self, x: &Point, tol: Tolerances, start: Option<&Point>) -> Result<(Measure, BarycenterResult)> {
        if x.dim() != self.n {
            return Err(Error::Argument("point dimension differs from scenario".into()));
        }
        natural_point_detailed(x, &self.family, &self.map, tol, start)
    }

    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        Ok(self.solve(x, Tolerances::default(), None)?.1.point)
    }

    pub fn evaluate_detailed(&self, x: &Point) -> Result<(Measure, BarycenterResult)> {
        self.solve(x, Tolerances::default(), None)
    }

    /// Central differences of [`Self::evaluate`] along the orthonormal frame
    /// at `x`, expressed in the frame at `F(x)`, with one Richardson step
    /// (`step` and `step/2`). `step` is a length in the source metric.
    pub fn jacobian_fd(&self, x: &Point, step: f64) -> Result<JacobianReport> {
        if !(1e-6..=1e-2).contains(&step) {
            return Err(Error::Argument(format!("finite-difference step {step} outside [1e-6, 1e-2]")));
        }
        let tol = Tolerances {
            gradient: FD_GRADIENT_TOL,
            ..Tolerances::default()
        };
        let fx = self.solve(x, tol, None)?.1.point;
        let frame_x = tangent_frame(x);
        let frame_f = tangent_frame(&fx);
        let n = self.n;
        let derivative = |t: f64| -> Result<Vec<Vec<f64>>> {
            // Hyperbolic length of a source step of length t.
            let th = t / self.scale;
            let mut cols = Vec::with_capacity(n);
            for e in &frame_x {
                let plus = self.solve(&exp_map(&e.scaled(th)), tol, Some(&fx))?.1.point;
                let minus = self.solve(&exp_map(&e.scaled(-th)), tol, Some(&fx))?.1.point;
                let a = frame_coords(&frame_f, &log_map(&fx, &plus)?);
                let b = frame_coords(&frame_f, &log_map(&fx, &minus)?);
                cols.push(a.iter().zip(&b).map(|(p, m)| (p - m) / (2.0 * t)).collect());
            }
            Ok(cols)
        };
        let coarse = derivative(step)?;
        let fine = derivative(0.5 * step)?;
        let mut matrix = vec![vec![0.0; n]; n];
        for j in 0..n {
            for i in 0..n {
                matrix[i][j] = (4.0 * fine[j][i] - coarse[j][i]) / 3.0;
            }
        }
        let det = nalgebra::DMatrix::from_fn(n, n, |i, j| matrix[i][j]).determinant();
        Ok(JacobianReport {
            image: fx.coords().to_vec(),
            matrix,
            det_abs: det.abs(),
        })
    }

    /// `(h/(n-1))^n`.
    pub fn entropy_bound(&self) -> f64 {
        (self.h / (self.n as f64 - 1.0)).powi(self.n as i32)
    }

    /// Evaluates the Jacobian and both upper bounds at each point. Failures
    /// are recorded per sample.
    pub fn bound_check(&self, points: &[Point], step: f64) -> Result<BoundCheckReport> {
        if self.n < 3 {
            return Err(Error::Argument("the Jacobian bound needs n >= 3".into()));
        }
        let samples: Vec<BoundSample> = points.par_iter().map(|x| self.bound_sample(x, step)).collect();
        let checked = samples.iter().filter(|s| s.error.is_none()).count();
        let violations = samples.iter().filter(|s| s.satisfied == Some(false)).count();
        let max_jacobian = samples.iter().filter_map(|s| s.jacobian).fold(0.0, f64::max);
        Ok(BoundCheckReport {
            n: self.n,
            h: self.h,
            scale: self.scale,
            entropy_bound: self.entropy_bound(),
            tolerance: BOUND_TOL,
            checked,
            violations,
            max_jacobian,
            samples,
        })
    }

    /// `count` points drawn in the hyperbolic ball of `radius` around the
    /// family basepoint.
    pub fn sample_points(&self, count: usize, radius: f64, seed: u64) -> Vec<Point> {
        let t = Isom::translation_to(&self.family.basepoint);
        let mut rng = crate::sampling::rng_from_seed(seed);
        (0..count)
            .map(|_| t.apply_point(&random_point(self.n, radius, &mut rng)))
            .collect()
    }

    fn bound_sample(&self, x: &Point, step: f64) -> BoundSample {
        let mut out = BoundSample {
            x: x.coords().to_vec(),
            image: None,
            jacobian: None,
            form_bound: None,
            entropy_bound: self.entropy_bound(),
            det_h: None,
            margin: None,
            satisfied: None,
            error: None,
        };
        let run = || -> Result<(Vec<f64>, f64, f64, f64)> {
            let jac = self.jacobian_fd(x, step)?;
            let (pushed, res) = self.evaluate_detailed(x)?;
            let fx = res.point;
            let h = h_form(&pushed, &fx)?;
            let k = k_form(&pushed, &fx)?;
            let bound = jacobian_upper_bound(&h, &k, self.h, self.n)?;
            Ok((jac.image, jac.det_abs, bound, h.det()))
        };
        match run() {
            Ok((image, jac, bound, det_h)) => {
                let cap = bound.min(out.entropy_bound);
                out.image = Some(image);
                out.jacobian = Some(jac);
                out.form_bound = Some(bound);
                out.det_h = Some(det_h);
                out.margin = Some(cap - jac);
                out.satisfied = Some(jac <= cap + BOUND_TOL);
            }
            Err(e) => out.error = Some(e.to_string()),
        }
        out
    }

    /// Largest ratio `d(F(x), F(y)) / d_source(x, y)` over random pairs in a
    /// ball of hyperbolic `radius` around the basepoint.
    pub fn lipschitz_scan(&self, pairs: usize, radius: f64, seed: u64) -> Result<f64> {
        let t = Isom::translation_to(&self.family.basepoint);
        let ratios = (0..pairs.div_ceil(PAIR_CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_rng(seed, c as u64);
                let count = PAIR_CHUNK.min(pairs - c * PAIR_CHUNK);
                let mut best: f64 = 0.0;
                for _ in 0..count {
                    let x = t.apply_point(&random_point(self.n, radius, &mut rng));
                    let v = random_tangent(&x, 1.0, &mut rng);
                    let len = rng.random_range(0.05..0.5);
                    let y = exp_map(&v.scaled(len / v.norm()));
                    let d = self.scale * distance(&x, &y)?;
                    best = best.max(distance(&self.evaluate(&x)?, &self.evaluate(&y)?)? / d);
                }
                Ok(best)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ratios.into_iter().fold(0.0, f64::max))
    }
}

/// Gradient tolerance used for the solves inside finite differences.
pub const FD_GRADIENT_TOL: f64 = 1e-12;
/// Absolute slack allowed on the Jacobian bounds.
pub const BOUND_TOL: f64 = 1e-2;
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianReport {
    /// Coordinates of `F(x)`.
    pub image: Vec<f64>,
    /// Row `i`, column `j`: component `i` at `F(x)` of the derivative along
    /// frame vector `j` at `x`.
    pub matrix: Vec<Vec<f64>>,
    pub det_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundSample {
    pub x: Vec<f64>,
    pub image: Option<Vec<f64>>,
    pub jacobian: Option<f64>,
    /// `h^n sqrt(det H) / (n^{n/2} det K)` at `F(x)`.
    pub form_bound: Option<f64>,
    pub entropy_bound: f64,
    pub det_h: Option<f64>,
    /// `min(form_bound, entropy_bound) - jacobian`.
    pub margin: Option<f64>,
    pub satisfied: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheckReport {
    pub n: usize,
    pub h: f64,
    pub scale: f64,
    pub entropy_bound: f64,
    pub tolerance: f64,
    pub checked: usize,
    pub violations: usize,
    pub max_jacobian: f64,
    pub samples: Vec<BoundSample>,
}

/// Frame coordinates of `F(x)` relative to `x`; handy for reports.
pub fn displacement(x: &Point, fx: &Point) -> Result<Vec<f64>> {
    Ok(frame_coords(&tangent_frame(x), &log_map(x, fx)?))
}

/// Inverse of [`displacement`].
pub fn displaced(x: &Point, coords: &[f64]) -> Point {
    exp_map(&from_frame_coords(&tangent_frame(x), coords))
}
