//! Volume-growth entropy of graphs and volume series, and truncated
//! Patterson–Sullivan densities of discrete isometry groups.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperboloid::{busemann_value, distance};
use crate::{Ideal, Isom, Measure, Point};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    labels: Vec<String>,
}

impl Graph {
    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); vertex_count];
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::Argument(format!("edge ({u},{v}) out of range")));
            }
            adj[u].push(v);
            if u != v {
                adj[v].push(u);
            }
        }
        Ok(Self {
            adj,
            labels: (0..vertex_count).map(|i| i.to_string()).collect(),
        })
    }

    /// Parses `u,v[,weight]` lines; weights must be 1 since balls are
    /// combinatorial.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() < 2 || record.len() > 3 {
                return Err(Error::Parse(format!("expected u,v[,weight], got {record:?}")));
            }
            if let Some(w) = record.get(2) {
                let w: f64 = w.parse().map_err(|e| Error::Parse(format!("bad weight {w:?}: {e}")))?;
                if w != 1.0 {
                    return Err(Error::Parse(format!("graph growth needs unit weights, got {w}")));
                }
            }
            let mut id = |s: &str| {
                *index.entry(s.to_string()).or_insert_with(|| {
                    labels.push(s.to_string());
                    labels.len() - 1
                })
            };
            edges.push((id(&record[0]), id(&record[1])));
        }
        let mut g = Self::from_edges(labels.len(), &edges)?;
        g.labels = labels;
        Ok(g)
    }

    /// The `degree`-regular tree truncated at `depth` around vertex 0.
    pub fn regular_tree(degree: usize, depth: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Argument("tree degree must be at least 2".into()));
        }
        let mut edges = Vec::new();
        let mut frontier = vec![0usize];
        let mut count = 1usize;
        for level in 0..depth {
            let children = if level == 0 { degree } else { degree - 1 };
            let mut next = Vec::with_capacity(frontier.len() * children);
            for &v in &frontier {
                for _ in 0..children {
                    edges.push((v, count));
                    next.push(count);
                    count += 1;
                }
            }
            frontier = next;
        }
        Self::from_edges(count, &edges)
    }

    /// The square grid on `[-radius, radius]^2`; see [`Graph::grid_centre`].
    pub fn grid(radius: usize) -> Result<Self> {
        let side = 2 * radius + 1;
        let r = radius as i64;
        let cell = |x: i64, y: i64| ((y + r) * side as i64 + (x + r)) as usize;
        let mut edges = Vec::new();
        for y in -r..=r {
            for x in -r..=r {
                if x < r {
                    edges.push((cell(x, y), cell(x + 1, y)));
                }
                if y < r {
                    edges.push((cell(x, y), cell(x, y + 1)));
                }
            }
        }
        Self::from_edges(side * side, &edges)
    }

    pub fn grid_centre(radius: usize) -> usize {
        radius * (2 * radius + 1) + radius
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallGrowthSeries {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
}

impl BallGrowthSeries {
    pub fn new(radii: Vec<f64>, volumes: Vec<f64>) -> Result<Self> {
        if radii.len() != volumes.len() {
            return Err(Error::Argument("radii and volumes differ in length".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("radii must be strictly increasing".into()));
        }
        if volumes.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("volumes must be nondecreasing".into()));
        }
        Ok(Self { radii, volumes })
    }

    /// Hyperbolic ball volumes in dimension `n` at the given radii.
    pub fn hyperbolic(n: usize, radii: Vec<f64>) -> Result<Self> {
        let volumes = radii
            .iter()
            .map(|&r| crate::hyperboloid::hyperbolic_ball_volume(n, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(radii, volumes)
    }
}

/// Sizes of the combinatorial balls `B(base, R)` for `R = 1..=rmax`,
/// counting reachable vertices only.
pub fn ball_counts(graph: &Graph, base: usize, rmax: usize) -> Result<BallGrowthSeries> {
    if base >= graph.vertex_count() {
        return Err(Error::Argument(format!("base vertex {base} out of range")));
    }
    if rmax < 1 {
        return Err(Error::Argument("rmax must be at least 1".into()));
    }
    let mut depth = vec![usize::MAX; graph.vertex_count()];
    let mut per_level = vec![0usize; rmax + 1];
    depth[base] = 0;
    per_level[0] = 1;
    let mut queue = VecDeque::from([base]);
    while let Some(v) = queue.pop_front() {
        if depth[v] == rmax {
            continue;
        }
        for &w in &graph.adj[v] {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                per_level[depth[w]] += 1;
                queue.push_back(w);
            }
        }
    }
    let mut total = per_level[0];
    let mut volumes = Vec::with_capacity(rmax);
    for &c in &per_level[1..] {
        total += c;
        volumes.push(total as f64);
    }
    BallGrowthSeries::new((1..=rmax).map(|r| r as f64).collect(), volumes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub h: f64,
    /// Radius range used by the fit.
    pub window: [f64; 2],
    pub r2: f64,
    pub points: usize,
}

/// Least-squares slope of `log volume` against radius over the upper half
/// of the radius range.
pub fn entropy_estimate(series: &BallGrowthSeries) -> Result<EntropyReport> {
    let k = series.radii.len();
    if k < 4 {
        return Err(Error::Argument(format!("need at least 4 data points, got {k}")));
    }
    if let Some(v) = series.volumes.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("volume {v} is not positive")));
    }
    let mid = 0.5 * (series.radii[0] + series.radii[k - 1]);
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .radii
        .iter()
        .zip(&series.volumes)
        .filter(|(r, _)| **r >= mid)
        .map(|(r, v)| (*r, v.ln()))
        .unzip();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let h = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(EntropyReport {
        h,
        window: [xs[0], xs[xs.len() - 1]],
        r2,
        points: xs.len(),
    })
}

/// Orbit points closer than this are identified.
pub const ORBIT_DEDUP_TOL: f64 = 1e-6;
pub const ORBIT_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct OrbitSample {
    pub generators: Vec<Isom>,
    pub basepoint: Point,
    /// Orbit points `γ·o` within `radius` of `o`, with the word length at
    /// which each was first reached. The basepoint itself comes first.
    pub orbit: Vec<(Point, usize)>,
    pub radius: f64,
    displacement: Vec<f64>,
}

fn cell_key(p: &Point, q: f64) -> Vec<i64> {
    let c = p.coords();
    let mut key = Vec::with_capacity(c.len());
    key.push((c[0].ln() / q).floor() as i64);
    key.extend(c[1..].iter().map(|x| (x / (c[0] * q)).floor() as i64));
    key
}

impl OrbitSample {
    /// Breadth-first enumeration over words in the generators and their
    /// inverses. Elements displacing `o` by more than `radius + margin` are
    /// not expanded; `margin` defaults to twice the largest generator
    /// displacement.
    pub fn enumerate(generators: Vec<Isom>, basepoint: Point, radius: f64, margin: Option<f64>) -> Result<Self> {
        let n = basepoint.dim();
        if generators.iter().any(|g| g.dim() != n) {
            return Err(Error::Argument("generator and basepoint dimensions differ".into()));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Argument(format!("truncation radius {radius} must be finite and nonnegative")));
        }
        let mut letters: Vec<Isom> = Vec::with_capacity(2 * generators.len());
        for g in &generators {
            letters.push(g.clone());
            letters.push(g.inverse());
        }
        let reach = letters
            .iter()
            .map(|g| distance(&basepoint, &g.apply_point(&basepoint)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let limit = radius + margin.unwrap_or(2.0 * reach);

        // Cells are relative to the point's height so that rounding noise and
        // the separation of genuine orbit points scale alike.
        let q = ORBIT_DEDUP_TOL;
        let mut seen: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let mut all_points: Vec<Point> = Vec::new();
        let mut orbit = Vec::new();
        let mut displacement = Vec::new();
        // Words are extended on the left and kept freely reduced; each entry
        // holds `γ·o` and the index of the first letter of `γ`.
        let mut queue: VecDeque<(Point, Option<usize>, usize)> = VecDeque::new();

        let mut visit = |p: &Point,
                         len: usize,
                         seen: &mut HashMap<Vec<i64>, Vec<usize>>,
                         all_points: &mut Vec<Point>|
         -> Result<Option<f64>> {
            let d = distance(&basepoint, p)?;
            if d > limit {
                return Ok(None);
            }
            let key = cell_key(p, q);
            let mut neighbour = key.clone();
            let dims = key.len();
            for code in 0..3usize.pow(dims as u32) {
                let mut c = code;
                for (slot, k) in neighbour.iter_mut().zip(&key) {
                    *slot = k + (c % 3) as i64 - 1;
                    c /= 3;
                }
                if let Some(ids) = seen.get(&neighbour) {
                    for &id in ids {
                        if distance(&all_points[id], p)? < q {
                            return Ok(None);
                        }
                    }
                }
            }
            seen.entry(key).or_default().push(all_points.len());
            all_points.push(p.clone());
            if d <= radius {
                if orbit.len() >= ORBIT_CAP {
                    return Err(Error::Argument(format!("orbit exceeds {ORBIT_CAP} points; lower the radius")));
                }
                orbit.push((p.clone(), len));
                displacement.push(d);
            }
            Ok(Some(d))
        };

        visit(&basepoint, 0, &mut seen, &mut all_points)?;
        queue.push_back((basepoint.clone(), None, 0));
        while let Some((p, first, len)) = queue.pop_front() {
            for (j, letter) in letters.iter().enumerate() {
                // Letters 2i and 2i+1 are mutually inverse.
                if first == Some(j ^ 1) {
                    continue;
                }
                let next = letter.apply_point(&p);
                if visit(&next, len + 1, &mut seen, &mut all_points)?.is_some() {
                    queue.push_back((next, Some(j), len + 1));
                }
            }
            if all_points.len() > 4 * ORBIT_CAP {
                return Err(Error::Argument("orbit enumeration exceeded its work budget".into()));
            }
        }
        Ok(Self {
            generators,
            basepoint,
            orbit,
            radius,
            displacement,
        })
    }

    pub fn len(&self) -> usize {
        self.orbit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbit.is_empty()
    }

    /// `d(o, γ·o)` for each orbit point, in orbit order.
    pub fn displacements(&self) -> &[f64] {
        &self.displacement
    }

    /// The sub-sample within `radius` of the basepoint.
    pub fn truncated(&self, radius: f64) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.displacement[i] <= radius).collect();
        Self {
            generators: self.generators.clone(),
            basepoint: self.basepoint.clone(),
            orbit: keep.iter().map(|&i| self.orbit[i].clone()).collect(),
            radius: radius.min(self.radius),
            displacement: keep.iter().map(|&i| self.displacement[i]).collect(),
        }
    }
}

/// Sums in fixed-size chunks so the result does not depend on scheduling.
fn chunked_sum(values: &[f64]) -> f64 {
    values
        .par_chunks(4096)
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `Σ_γ e^{−s·d(x, γ·o)}` over the truncated orbit.
pub fn poincare_series(orbit: &OrbitSample, x: &Point, s: f64) -> Result<f64> {
    if orbit.is_empty() {
        return Err(Error::InsufficientOrbit("empty orbit".into()));
    }
    if !(s > 0.0) {
        return Err(Error::Argument(format!("series exponent {s} must be positive")));
    }
    let terms = orbit
        .orbit
        .par_iter()
        .map(|(p, _)| distance(x, p).map(|d| (-s * d).exp()))
        .collect::<Result<Vec<_>>>()?;
    Ok(chunked_sum(&terms))
}

fn series_from_displacements(d: &[f64], s: f64, cut: f64) -> f64 {
    let terms: Vec<f64> = d.iter().filter(|&&v| v <= cut).map(|v| (-s * v).exp()).collect();
    chunked_sum(&terms)
}

/// Exponent at which the series over radius `R` stops doubling relative
/// to radius `R/2`; zero when even the counting function does not double.
pub fn critical_exponent(orbit: &OrbitSample) -> Result<f64> {
    if orbit.is_empty() {
        return Err(Error::InsufficientOrbit("empty orbit".into()));
    }
    let d = orbit.displacements();
    let r = orbit.radius;
    let ratio = |s: f64| series_from_displacements(d, s, r) / series_from_displacements(d, s, 0.5 * r);
    if ratio(0.0) < 2.0 {
        return Ok(0.0);
    }
    let mut hi = orbit.basepoint.dim() as f64;
    while ratio(hi) >= 2.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Domain("series ratio does not settle".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) >= 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Radial projection of `p` to the boundary as seen from `o`.
pub fn project_from(o: &Point, p: &Point) -> Result<Ideal> {
    let t = Isom::translation_to(o);
    let q = t.inverse().apply_point(p);
    let s = q.spatial();
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Domain("cannot project the basepoint itself".into()));
    }
    let dir: Vec<f64> = s.iter().map(|x| x / norm).collect();
    Ok(t.apply_boundary(&Ideal::from_direction(&dir)?))
}

/// Orbit points other than the basepoint, paired with their projections.
fn projected(orbit: &OrbitSample) -> Result<Vec<(&Point, Ideal, f64)>> {
    orbit
        .orbit
        .par_iter()
        .zip(orbit.displacements())
        .filter(|(_, d)| **d > ORBIT_DEDUP_TOL)
        .map(|((p, _), d)| Ok((p, project_from(&orbit.basepoint, p)?, *d)))
        .collect()
}

/// Atoms `e^{−s·d(x, γ·o)}` at the projections of `γ·o ≠ o`, normalized so
/// the measure at the basepoint has unit mass.
pub fn patterson_sullivan_atoms(orbit: &OrbitSample, x: &Point, s: f64, min_points: usize) -> Result<Measure> {
    if !(s > 0.0) {
        return Err(Error::Argument(format!("series exponent {s} must be positive")));
    }
    let pts = projected(orbit)?;
    if pts.len() < min_points.max(1) {
        return Err(Error::InsufficientOrbit(format!(
            "{} orbit points besides the basepoint, need {min_points}; increase the radius",
            pts.len()
        )));
    }
    let base_terms: Vec<f64> = pts.iter().map(|(_, _, d)| (-s * d).exp()).collect();
    let z = chunked_sum(&base_terms);
    let atoms = pts
        .par_iter()
        .map(|(p, theta, _)| Ok((theta.clone(), (-s * distance(x, p)?).exp() / z)))
        .collect::<Result<Vec<_>>>()?;
    Measure::new(x.dim(), atoms)
}

/// Mean over atoms of `|log(w_p/w_q) + ℓ·(B_θ(p) − B_θ(q))|`, measuring how
/// far the atomized family is from a conformal density of dimension `ℓ`.
pub fn conformal_residual(orbit: &OrbitSample, ell: f64, s: f64, p: &Point, q: &Point) -> Result<f64> {
    let pts = projected(orbit)?;
    if pts.is_empty() {
        return Err(Error::InsufficientOrbit("no orbit points besides the basepoint".into()));
    }
    let o = &orbit.basepoint;
    let terms = pts
        .par_iter()
        .map(|(g, theta, _)| {
            let log_ratio = -s * (distance(p, g)? - distance(q, g)?);
            let b = busemann_value(theta, p, o) - busemann_value(theta, q, o);
            Ok((log_ratio + ell * b).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunked_sum(&terms) / terms.len() as f64)
}

/// Boosts of translation length `length` along each coordinate axis of ℍⁿ,
/// for the first `rank` axes.
pub fn axis_boosts(n: usize, rank: usize, length: f64) -> Result<Vec<Isom>> {
    if rank > n {
        return Err(Error::Argument(format!("rank {rank} exceeds dimension {n}")));
    }
    Ok((1..=rank).map(|axis| Isom::boost(n, axis, length)).collect())
}
