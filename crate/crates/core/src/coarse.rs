//! Finite metric spaces: Gromov products, δ-hyperbolicity, four-point tree
//! approximation and the curvature ≥ −1 comparison test.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for metric axioms and geodesic-collinearity checks.
pub const METRIC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    pub fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("distance matrix is not square".into()));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Argument("label count differs from matrix size".into()));
            }
        }
        let dist: Vec<f64> = rows.into_iter().flatten().collect();
        let space = Self { n, dist, labels };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.d(i, i) != 0.0 {
                return Err(Error::Argument(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                let v = self.d(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Argument(format!("entry ({i},{j}) = {v} is not a finite nonnegative distance")));
                }
                if (v - self.d(j, i)).abs() > METRIC_TOL {
                    return Err(Error::Argument(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        let bad = (0..n).into_par_iter().find_map_first(|i| {
            for j in 0..n {
                for k in 0..n {
                    if self.d(i, k) > self.d(i, j) + self.d(j, k) + METRIC_TOL {
                        return Some((i, j, k));
                    }
                }
            }
            None
        });
        if let Some((i, j, k)) = bad {
            return Err(Error::Argument(format!("triangle inequality fails for ({i},{j},{k})")));
        }
        Ok(())
    }

    /// Parses N rows of N comma-separated distances.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("bad distance {f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows, None)
    }

    /// Parses `u,v,weight` lines of an undirected graph and closes them under
    /// shortest paths. Vertices are labelled by name in order of first use.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut names: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() < 2 || record.len() > 3 {
                return Err(Error::Parse(format!("expected u,v[,weight], got {record:?}")));
            }
            let mut id = |s: &str| {
                *index.entry(s.to_string()).or_insert_with(|| {
                    names.push(s.to_string());
                    names.len() - 1
                })
            };
            let u = id(&record[0]);
            let v = id(&record[1]);
            let w = match record.get(2) {
                Some(s) => s.parse::<f64>().map_err(|e| Error::Parse(format!("bad weight {s:?}: {e}")))?,
                None => 1.0,
            };
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Parse(format!("edge weight {w} must be finite and nonnegative")));
            }
            edges.push((u, v, w));
        }
        let n = names.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for (u, v, w) in edges {
            if w < d[u][v] {
                d[u][v] = w;
                d[v][u] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = d[i][k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let via = dik + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        if d.iter().flatten().any(|v| v.is_infinite()) {
            return Err(Error::Argument("graph is disconnected".into()));
        }
        Self::new(d, Some(names))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|l| l == label)
    }

    #[inline]
    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn dist(&self, i: usize, j: usize) -> Result<f64> {
        self.check(&[i, j])?;
        Ok(self.d(i, j))
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Argument(format!("scale {c} must be positive")));
        }
        Ok(Self {
            n: self.n,
            dist: self.dist.iter().map(|v| c * v).collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        self.check(idx)?;
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i].clone()).collect());
        Ok(Self {
            n: idx.len(),
            dist: idx.iter().flat_map(|&i| idx.iter().map(move |&j| self.d(i, j))).collect(),
            labels,
        })
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&i| i >= self.n) {
            Some(i) => Err(Error::Argument(format!("index {i} out of range for {} points", self.n))),
            None => Ok(()),
        }
    }

    /// `(x|y)_o`.
    pub fn gromov_product(&self, o: usize, x: usize, y: usize) -> Result<f64> {
        self.check(&[o, x, y])?;
        Ok(0.5 * (self.d(x, o) + self.d(y, o) - self.d(x, y)))
    }

    /// Half the gap between the two largest pairing sums of a quadruple.
    #[inline]
    fn quad_delta(&self, a: usize, b: usize, c: usize, e: usize) -> f64 {
        let s = sorted_desc([
            self.d(a, b) + self.d(c, e),
            self.d(a, c) + self.d(b, e),
            self.d(a, e) + self.d(b, c),
        ]);
        0.5 * (s[0] - s[1])
    }

    /// Smallest δ for which the Gromov-product inequality holds for every
    /// basepoint and triple, with a quadruple attaining it.
    pub fn delta_hyperbolicity(&self) -> DeltaReport {
        let n = self.n;
        if n < 4 {
            return DeltaReport::zero();
        }
        (0..n)
            .into_par_iter()
            .map(|a| {
                let mut best = DeltaReport::zero();
                for b in a + 1..n {
                    for c in b + 1..n {
                        for e in c + 1..n {
                            let v = self.quad_delta(a, b, c, e);
                            if v > best.delta {
                                best = DeltaReport {
                                    delta: v,
                                    witness: Some([a, b, c, e]),
                                };
                            }
                        }
                    }
                }
                best
            })
            .reduce(DeltaReport::zero, DeltaReport::better)
    }

    /// δ with the basepoint held fixed at `o`.
    pub fn delta_at_basepoint(&self, o: usize) -> Result<DeltaReport> {
        self.check(&[o])?;
        let n = self.n;
        if n < 4 {
            return Ok(DeltaReport::zero());
        }
        let others: Vec<usize> = (0..n).filter(|&i| i != o).collect();
        Ok(others
            .par_iter()
            .enumerate()
            .map(|(ia, &a)| {
                let mut best = DeltaReport::zero();
                for (ib, &b) in others.iter().enumerate().skip(ia + 1) {
                    for &c in &others[ib + 1..] {
                        let v = self.quad_delta(o, a, b, c);
                        if v > best.delta {
                            best = DeltaReport {
                                delta: v,
                                witness: Some([o, a, b, c]),
                            };
                        }
                    }
                }
                best
            })
            .reduce(DeltaReport::zero, DeltaReport::better))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaReport {
    pub delta: f64,
    /// A quadruple attaining `delta`; the earliest in lexicographic order.
    pub witness: Option<[usize; 4]>,
}

impl DeltaReport {
    fn zero() -> Self {
        Self {
            delta: 0.0,
            witness: None,
        }
    }

    fn better(a: Self, b: Self) -> Self {
        match (a.witness, b.witness) {
            (None, _) => b,
            (_, None) => a,
            (Some(wa), Some(wb)) => {
                if b.delta > a.delta || (b.delta == a.delta && wb < wa) {
                    b
                } else {
                    a
                }
            }
        }
    }
}

fn sorted_desc(mut s: [f64; 3]) -> [f64; 3] {
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeApproximation {
    pub tree_dist: [[f64; 4]; 4],
    pub distortion: f64,
}

/// Four-point δ of a 4×4 metric.
pub fn four_point_delta(d: &[[f64; 4]; 4]) -> f64 {
    let s = sorted_desc([d[0][1] + d[2][3], d[0][2] + d[1][3], d[0][3] + d[1][2]]);
    0.5 * (s[0] - s[1])
}

/// Lowers the two distances of the largest pairing sum until it ties the
/// middle one, which makes the metric realizable in a tree.
pub fn four_point_tree_approx(d: &[[f64; 4]; 4]) -> Result<TreeApproximation> {
    let rows: Vec<Vec<f64>> = d.iter().map(|r| r.to_vec()).collect();
    FiniteMetricSpace::new(rows, None)?;
    const PAIRINGS: [[(usize, usize); 2]; 3] = [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
    let sums: Vec<f64> = PAIRINGS.iter().map(|p| d[p[0].0][p[0].1] + d[p[1].0][p[1].1]).collect();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    let excess = 0.5 * (sums[order[0]] - sums[order[1]]);
    let mut t = *d;
    if excess > 0.0 {
        let [(a, b), (c, e)] = PAIRINGS[order[0]];
        t[a][b] -= excess;
        t[b][a] = t[a][b];
        // The second distance is set from the target sum so the tie is exact
        // up to a single rounding.
        t[c][e] = sums[order[1]] - t[a][b];
        t[e][c] = t[c][e];
    }
    let mut distortion: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            distortion = distortion.max((t[i][j] - d[i][j]).abs());
        }
    }
    Ok(TreeApproximation {
        tree_dist: t,
        distortion,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlexandrovVerdict {
    pub satisfied: bool,
    pub comparison_distance: f64,
    /// `d(z,w) − d(z̃,w̃)`.
    pub margin: f64,
}

/// Compares `d(z,w)` against the ℍ² comparison configuration for `w` on a
/// geodesic from `x` to `y`.
pub fn alexandrov_comparison_check(
    dxy: f64,
    dyz: f64,
    dxz: f64,
    dxw: f64,
    dwy: f64,
    dzw: f64,
) -> Result<AlexandrovVerdict> {
    let all = [dxy, dyz, dxz, dxw, dwy, dzw];
    if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Argument("distances must be finite and nonnegative".into()));
    }
    if (dxw + dwy - dxy).abs() > METRIC_TOL {
        return Err(Error::Argument(format!(
            "w is not on a geodesic from x to y: d(x,w)+d(w,y)-d(x,y) = {:e}",
            dxw + dwy - dxy
        )));
    }
    for (a, b, c) in [(dxy, dyz, dxz), (dxz, dzw, dxw), (dyz, dzw, dwy)] {
        if a > b + c + METRIC_TOL || b > a + c + METRIC_TOL || c > a + b + METRIC_TOL {
            return Err(Error::Argument(format!("({a}, {b}, {c}) is not a valid triangle")));
        }
    }
    let comparison = if dxy == 0.0 || dxw == 0.0 {
        dxz
    } else if dxz == 0.0 {
        dxw
    } else {
        let cos_gamma = (dxy.cosh() * dxz.cosh() - dyz.cosh()) / (dxy.sinh() * dxz.sinh());
        if !(-1.0 - METRIC_TOL..=1.0 + METRIC_TOL).contains(&cos_gamma) {
            return Err(Error::Argument(format!(
                "comparison triangle is degenerate: cosine of angle at x is {cos_gamma}"
            )));
        }
        let cos_gamma = cos_gamma.clamp(-1.0, 1.0);
        let ch = dxz.cosh() * dxw.cosh() - dxz.sinh() * dxw.sinh() * cos_gamma;
        ch.max(1.0).acosh()
    };
    let margin = dzw - comparison;
    Ok(AlexandrovVerdict {
        satisfied: margin >= -METRIC_TOL,
        comparison_distance: comparison,
        margin,
    })
}
