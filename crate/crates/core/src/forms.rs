//! The second-moment form `H`, the averaged Hessian form `K = Id - H`, the
//! brain-in-a-jar determinant inequality and the Jacobian upper bound built
//! from them.
//!
//! Forms are expressed in the deterministic orthonormal frame returned by
//! [`tangent_frame`], so matrices computed at the same point are reproducible.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperboloid::{busemann_gradient, busemann_hessian, frame_coords, tangent_frame};
use crate::sampling::{chunk_rng, flat_dirichlet, haar_orthogonal};
use crate::{Measure, Point};

/// Symmetric positive-semidefinite bilinear form; only the upper triangle
/// is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdForm {
    n: usize,
    upper: Vec<f64>,
}

/// Most negative eigenvalue tolerated for a semidefinite form.
pub const PSD_SLACK: f64 = 1e-12;

impl SpdForm {
    /// Symmetrizes `m` and checks that it is positive semidefinite.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let form = Self::from_matrix_unchecked(m)?;
        let min = form.min_eigenvalue();
        if min < -PSD_SLACK {
            return Err(Error::Argument(format!("form is not positive semidefinite (eigenvalue {min:e})")));
        }
        Ok(form)
    }

    fn from_matrix_unchecked(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::Argument("form must be a nonempty square matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("non-finite form entry".into()));
        }
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        Ok(Self { n, upper })
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        m.fill_diagonal(c);
        Self::from_matrix_unchecked(&m).expect("square")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn det(&self) -> f64 {
        self.to_matrix().determinant()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_matrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `Id - self`.
    pub fn complement(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n) - self.to_matrix()
    }

    /// Max-norm distance between two forms.
    pub fn max_abs_diff(&self, other: &DMatrix<f64>) -> f64 {
        (self.to_matrix() - other).amax()
    }
}

fn check_measure(mu: &Measure, p: &Point) -> Result<()> {
    if mu.dim() != p.dim() {
        return Err(Error::Argument("measure and point dimensions differ".into()));
    }
    Ok(())
}

/// `H = (1/|mu|) sum w grad B_theta (x) grad B_theta` at `p`.
///
/// Busemann gradients do not depend on the normalization point, so neither
/// does `H`.
pub fn h_form(mu: &Measure, p: &Point) -> Result<SpdForm> {
    check_measure(mu, p)?;
    let n = p.dim();
    let frame = tangent_frame(p);
    let mass = mu.total_mass();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for atom in mu.atoms() {
        let a = frame_coords(&frame, &busemann_gradient(&atom.point, p));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += atom.weight * a[i] * a[j];
            }
        }
    }
    m /= mass;
    SpdForm::from_matrix(&m)
}

/// `K = (1/|mu|) sum w Hess B_theta`, assembled from the Busemann Hessian
/// itself rather than from `Id - H`.
pub fn k_form(mu: &Measure, p: &Point) -> Result<SpdForm> {
    check_measure(mu, p)?;
    let n = p.dim();
    let frame = tangent_frame(p);
    let mass = mu.total_mass();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for atom in mu.atoms() {
        for i in 0..n {
            for j in i..n {
                let v = atom.weight * busemann_hessian(&atom.point, p, &frame[i], &frame[j]);
                m[(i, j)] += v;
                if i != j {
                    m[(j, i)] += v;
                }
            }
        }
    }
    m /= mass;
    SpdForm::from_matrix(&m)
}

/// `(n / (n-1)^2)^n`.
pub fn brain_in_a_jar_bound(n: usize) -> f64 {
    let nf = n as f64;
    (nf / ((nf - 1.0) * (nf - 1.0))).powi(n as i32)
}

/// `det(H) / det(Id - H)^2` for a trace-one positive form; `+inf` when
/// `Id - H` is singular.
pub fn brain_in_a_jar_ratio(h: &SpdForm) -> Result<f64> {
    let n = h.dim();
    if n < 2 {
        return Err(Error::Argument("brain-in-a-jar needs n >= 2".into()));
    }
    let tr = h.trace();
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::Argument(format!("form must have trace 1, got {tr}")));
    }
    let det_h = h.det();
    let det_c = h.complement().determinant();
    if det_c.abs() < 1e-300 {
        return Ok(f64::INFINITY);
    }
    Ok(det_h / (det_c * det_c))
}

/// `h^n sqrt(det H) / (n^{n/2} det K)`.
pub fn jacobian_upper_bound(h_form: &SpdForm, k_form: &SpdForm, entropy: f64, n: usize) -> Result<f64> {
    if h_form.dim() != n || k_form.dim() != n {
        return Err(Error::Argument("form dimensions differ from n".into()));
    }
    let det_k = k_form.det();
    if det_k.abs() < 1e-14 {
        return Err(Error::Domain(format!("K is singular (det {det_k:e})")));
    }
    let det_h = h_form.det().max(0.0);
    let nf = n as f64;
    Ok(entropy.powi(n as i32) * det_h.sqrt() / (nf.powf(nf / 2.0) * det_k))
}

/// Trace-one SPD matrix with flat-Dirichlet spectrum and Haar eigenvectors.
pub fn random_trace_one_spd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpdForm {
    let spectrum = flat_dirichlet(n, rng);
    let q = haar_orthogonal(n, rng);
    let m = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(spectrum)) * q.transpose();
    SpdForm::from_matrix_unchecked(&m).expect("square")
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct JarScanReport {
    pub n: usize,
    pub samples: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub violations: usize,
}

const SCAN_CHUNK: usize = 4096;

/// Monte-Carlo scan of the brain-in-a-jar ratio over random trace-one SPD
/// matrices. Chunks draw from independent seeded streams, so the report does
/// not depend on how many threads run the scan.
pub fn jar_scan(n: usize, samples: usize, seed: u64) -> Result<JarScanReport> {
    if n < 2 {
        return Err(Error::Argument("jar scan needs n >= 2".into()));
    }
    let bound = brain_in_a_jar_bound(n);
    let chunks = samples.div_ceil(SCAN_CHUNK);
    let (max_ratio, violations) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let count = SCAN_CHUNK.min(samples - c * SCAN_CHUNK);
            let mut max = f64::NEG_INFINITY;
            let mut bad = 0usize;
            for _ in 0..count {
                let h = random_trace_one_spd(n, &mut rng);
                let r = brain_in_a_jar_ratio(&h).unwrap_or(f64::NAN);
                if r > bound * (1.0 + 1e-12) {
                    bad += 1;
                }
                if r > max {
                    max = r;
                }
            }
            (max, bad)
        })
        .reduce(|| (f64::NEG_INFINITY, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    Ok(JarScanReport {
        n,
        samples,
        max_ratio,
        bound,
        violations,
    })
}
