//! JSON exchange formats.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::barycenter::Tolerances;
use crate::error::{Error, Result};
use crate::hyperboloid::random_isometry;
use crate::measure::{visual_quadrature, QuadratureScheme};
use crate::natural_map::{BoundaryMapKind, NaturalMapScenario};
use crate::{Density, Ideal, Isom, Measure, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    /// Spatial part of the null vector; renormalized on load.
    pub dir: Vec<f64>,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub n: usize,
    pub atoms: Vec<AtomJson>,
}

impl MeasureJson {
    pub fn from_measure(mu: &Measure) -> Self {
        Self {
            n: mu.dim(),
            atoms: mu
                .atoms()
                .iter()
                .map(|a| AtomJson {
                    dir: a.point.spatial().to_vec(),
                    w: a.weight,
                })
                .collect(),
        }
    }

    pub fn to_measure(&self) -> Result<Measure> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                if a.dir.len() != self.n {
                    return Err(Error::Parse(format!(
                        "atom direction has {} entries, expected n = {}",
                        a.dir.len(),
                        self.n
                    )));
                }
                Ok((Ideal::from_direction(&a.dir)?, a.w))
            })
            .collect::<Result<Vec<_>>>()?;
        Measure::new(self.n, atoms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemJson {
    #[serde(flatten)]
    pub measure: MeasureJson,
    /// Minkowski coordinates of the normalization point; the model origin
    /// when absent.
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl ProblemJson {
    pub fn origin_point(&self) -> Result<Point> {
        match &self.origin {
            None => Ok(Point::origin(self.measure.n)),
            Some(c) => {
                if c.len() != self.measure.n + 1 {
                    return Err(Error::Parse(format!(
                        "origin has {} coordinates, expected n + 1 = {}",
                        c.len(),
                        self.measure.n + 1
                    )));
                }
                Point::new(c.clone())
            }
        }
    }

    pub fn tolerances(&self) -> Result<Tolerances> {
        let mut t = Tolerances::default();
        if let Some(g) = self.tol {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Parse(format!("tolerance {g} must be positive")));
            }
            t.gradient = g;
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyJson {
    #[serde(flatten)]
    pub measure: MeasureJson,
    pub exponent: f64,
    #[serde(default)]
    pub basepoint: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

impl MapJson {
    pub fn to_map(&self, n: usize) -> Result<BoundaryMapKind> {
        let num = |key: &str| self.params.get(key).and_then(Value::as_f64);
        match self.kind.as_str() {
            "identity" => Ok(BoundaryMapKind::Identity),
            "squeeze" => BoundaryMapKind::squeeze(num("stretch").unwrap_or(2.0)),
            "isometry" => {
                if let Some(m) = self.params.get("matrix") {
                    let rows: Vec<Vec<f64>> = serde_json::from_value(m.clone())?;
                    let g = Isom::from_rows(&rows)?;
                    if g.dim() != n {
                        return Err(Error::Parse("isometry dimension differs from n".into()));
                    }
                    Ok(BoundaryMapKind::Isometry(g))
                } else if let Some(seed) = self.params.get("seed").and_then(Value::as_u64) {
                    Ok(BoundaryMapKind::Isometry(random_isometry(n, seed)))
                } else {
                    Err(Error::Parse("isometry map needs params.matrix or params.seed".into()))
                }
            }
            other => Err(Error::Parse(format!("unknown boundary map kind '{other}'"))),
        }
    }
}

/// Natural-map scenario. Without `family`, the visual family at the origin
/// is discretized with `m` symmetric quadrature points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub n: usize,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub family: Option<FamilyJson>,
    pub map: MapJson,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Points at which to evaluate, as Minkowski coordinates.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
}

pub const DEFAULT_QUADRATURE: usize = 128;

impl ScenarioJson {
    /// Builds the scenario; `m` and `seed` override the file when given.
    pub fn to_scenario(&self, m: Option<usize>, seed: Option<u64>) -> Result<NaturalMapScenario> {
        let n = self.n;
        if !(2..=8).contains(&n) {
            return Err(Error::Parse(format!("dimension {n} outside 2..=8")));
        }
        let scale = self.scale.unwrap_or(1.0);
        let h = self.h.unwrap_or((n as f64 - 1.0) / scale);
        let map = self.map.to_map(n)?;
        let family = match &self.family {
            Some(f) => {
                if f.measure.n != n {
                    return Err(Error::Parse("family dimension differs from n".into()));
                }
                let base = match &f.basepoint {
                    Some(c) => Point::new(c.clone())?,
                    None => Point::origin(n),
                };
                Density::new(base, f.measure.to_measure()?, f.exponent)?
            }
            None => {
                let m = m.or(self.m).unwrap_or(DEFAULT_QUADRATURE);
                let seed = seed.or(self.seed).unwrap_or(0);
                let o = Point::origin(n);
                let base = visual_quadrature(&o, m, QuadratureScheme::Symmetric { seed })?;
                Density::new(o, base, h * scale)?
            }
        };
        NaturalMapScenario::new(family, map, h, scale)
    }

    pub fn evaluation_points(&self) -> Result<Vec<Point>> {
        match &self.points {
            None => Ok(vec![Point::origin(self.n)]),
            Some(ps) => ps
                .iter()
                .map(|c| {
                    if c.len() != self.n + 1 {
                        return Err(Error::Parse(format!("point has {} coordinates, expected {}", c.len(), self.n + 1)));
                    }
                    Point::new(c.clone())
                })
                .collect(),
        }
    }
}

/// Generators as a list of `(n+1)×(n+1)` Lorentz matrices.
pub fn parse_generators(text: &str) -> Result<Vec<Isom>> {
    let mats: Vec<Vec<Vec<f64>>> = serde_json::from_str(text)?;
    if mats.is_empty() {
        return Err(Error::Parse("generator list is empty".into()));
    }
    let gens = mats.iter().map(|m| Isom::from_rows(m)).collect::<Result<Vec<_>>>()?;
    if gens.iter().any(|g| g.dim() != gens[0].dim()) {
        return Err(Error::Parse("generators have different dimensions".into()));
    }
    Ok(gens)
}
