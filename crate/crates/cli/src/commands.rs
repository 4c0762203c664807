use serde::Serialize;

use hyperbary::barycenter::BarycenterProblem;
use hyperbary::coarse::{alexandrov_comparison_check, four_point_delta, four_point_tree_approx, FiniteMetricSpace};
use hyperbary::forms::jar_scan;
use hyperbary::growth::{
    ball_counts, critical_exponent, entropy_estimate, patterson_sullivan_atoms, BallGrowthSeries, EntropyReport, Graph,
    OrbitSample,
};
use hyperbary::hyperboloid::{distance, hyperbolic_ball_volume, unit_ball_volume};
use hyperbary::io::{parse_generators, MeasureJson, ProblemJson, ScenarioJson};
use hyperbary::natural_map::{BoundCheckReport, JacobianReport, DEFAULT_FD_STEP};
use hyperbary::Point;

use crate::output::{float, to_csv, to_json};
use crate::{CliError, Command, Global};

type Out = Result<Vec<u8>, CliError>;

pub fn dispatch(cmd: &Command, g: &Global) -> Out {
    match cmd {
        Command::Barycenter => barycenter(g),
        Command::NaturalMap => natural_map(g),
        Command::JarScan => jar(g),
        Command::Delta { edges, basepoint } => delta(g, *edges, *basepoint),
        Command::Tree4 => tree4(g),
        Command::Alexandrov { distances } => alexandrov(distances),
        Command::Entropy { builtin, base } => entropy(g, builtin.as_deref(), base.as_deref()),
        Command::BallVolume { dr, radii } => ball_volume(g, *dr, radii.as_deref()),
        Command::Ps { radius, min_points } => ps(g, *radius, *min_points),
    }
}

fn read_input(g: &Global) -> Result<String, CliError> {
    let path = g
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("--input is required for this subcommand".into()))?;
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn json(value: &impl Serialize) -> Out {
    to_json(value).map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Core(hyperbary::Error::Parse(e.to_string())))
}

#[derive(Serialize)]
struct BarycenterOut {
    point: Vec<f64>,
    distance_from_origin: f64,
    functional_value: f64,
    iterations: usize,
    final_gradient_norm: f64,
    hessian_min_eigenvalue: f64,
    values: Vec<f64>,
}

fn barycenter(g: &Global) -> Out {
    let problem: ProblemJson = parse_json(&read_input(g)?)?;
    let mu = problem.measure.to_measure()?;
    let origin = problem.origin_point()?;
    let mut tol = problem.tolerances()?;
    if let Some(t) = g.tol {
        tol.gradient = t;
    }
    let prob = BarycenterProblem::new(mu, origin.clone())?.with_tolerances(tol);
    let r = prob.barycenter()?;
    json(&BarycenterOut {
        distance_from_origin: distance(&r.point, &origin)?,
        functional_value: *r.values.last().unwrap_or(&0.0),
        point: r.point.coords().to_vec(),
        iterations: r.iterations,
        final_gradient_norm: r.final_gradient_norm,
        hessian_min_eigenvalue: r.hessian_min_eigenvalue,
        values: r.values,
    })
}

#[derive(Serialize)]
struct NaturalMapOut {
    n: usize,
    h: f64,
    scale: f64,
    atoms: usize,
    step: f64,
    entropy_bound: f64,
    evaluations: Vec<JacobianReport>,
    bound_check: Option<BoundCheckReport>,
}

fn natural_map(g: &Global) -> Out {
    let scenario: ScenarioJson = parse_json(&read_input(g)?)?;
    let sc = scenario.to_scenario(g.m, Some(g.seed))?;
    let step = g.step.unwrap_or(DEFAULT_FD_STEP);
    let evaluations = scenario
        .evaluation_points()?
        .iter()
        .map(|x| sc.jacobian_fd(x, step))
        .collect::<Result<Vec<_>, _>>()?;
    let bound_check = match g.samples {
        Some(k) if k > 0 => Some(sc.bound_check(&sc.sample_points(k, 1.0, g.seed), step)?),
        _ => None,
    };
    json(&NaturalMapOut {
        n: sc.n,
        h: sc.h,
        scale: sc.scale,
        atoms: sc.family.base_measure.len(),
        step,
        entropy_bound: sc.entropy_bound(),
        evaluations,
        bound_check,
    })
}

fn jar(g: &Global) -> Out {
    let n = g.n.ok_or_else(|| CliError::Input("jar-scan needs --n".into()))?;
    let samples = g.samples.unwrap_or(100_000);
    let r = jar_scan(n, samples, g.seed)?;
    to_csv(
        &["n", "samples", "max_ratio", "bound", "violations"],
        &[vec![
            r.n.to_string(),
            r.samples.to_string(),
            float(r.max_ratio),
            float(r.bound),
            r.violations.to_string(),
        ]],
    )
    .map_err(|e| CliError::Input(e.to_string()))
}

#[derive(Serialize)]
struct DeltaOut {
    points: usize,
    delta: f64,
    witness: Option<[usize; 4]>,
    witness_labels: Option<Vec<String>>,
    basepoint: Option<usize>,
}

fn delta(g: &Global, edges: bool, basepoint: Option<usize>) -> Out {
    let text = read_input(g)?;
    let space = if edges {
        FiniteMetricSpace::from_edge_list(&text)?
    } else {
        FiniteMetricSpace::from_csv(&text)?
    };
    let r = match basepoint {
        Some(o) => space.delta_at_basepoint(o)?,
        None => space.delta_hyperbolicity(),
    };
    let witness_labels = match (r.witness, space.labels()) {
        (Some(w), Some(l)) => Some(w.iter().map(|&i| l[i].clone()).collect()),
        _ => None,
    };
    json(&DeltaOut {
        points: space.len(),
        delta: r.delta,
        witness: r.witness,
        witness_labels,
        basepoint,
    })
}

#[derive(Serialize)]
struct Tree4Out {
    tree_dist: [[f64; 4]; 4],
    distortion: f64,
    delta: f64,
    distortion_bound: f64,
}

fn tree4(g: &Global) -> Out {
    let space = FiniteMetricSpace::from_csv(&read_input(g)?)?;
    if space.len() != 4 {
        return Err(CliError::Input(format!("tree4 needs a 4x4 metric, got {} points", space.len())));
    }
    let mut d = [[0.0; 4]; 4];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = space.dist(i, j)?;
        }
    }
    let t = four_point_tree_approx(&d)?;
    let delta = four_point_delta(&d);
    json(&Tree4Out {
        tree_dist: t.tree_dist,
        distortion: t.distortion,
        delta,
        distortion_bound: 2.0 * delta,
    })
}

fn alexandrov(d: &[f64]) -> Out {
    if d.len() != 6 {
        return Err(CliError::Input("--distances needs dxy,dyz,dxz,dxw,dwy,dzw".into()));
    }
    json(&alexandrov_comparison_check(d[0], d[1], d[2], d[3], d[4], d[5])?)
}

#[derive(Serialize)]
struct EntropyOut {
    #[serde(flatten)]
    report: EntropyReport,
    radii: Vec<f64>,
    volumes: Vec<f64>,
}

fn entropy(g: &Global, builtin: Option<&str>, base: Option<&str>) -> Out {
    let rmax_f = g.rmax.unwrap_or(10.0);
    let series = if builtin == Some("hyperbolic") {
        let n = g.n.unwrap_or(3);
        if !(rmax_f > 0.0) {
            return Err(CliError::Input("--rmax must be positive".into()));
        }
        // 101 radii spanning [rmax/2, rmax].
        let radii = (0..=100).map(|k| 0.5 * rmax_f * (1.0 + k as f64 / 100.0)).collect();
        BallGrowthSeries::hyperbolic(n, radii)?
    } else {
        if rmax_f < 1.0 || rmax_f.fract() != 0.0 {
            return Err(CliError::Input(format!("--rmax must be a positive integer for graphs, got {rmax_f}")));
        }
        let rmax = rmax_f as usize;
        let (graph, base_idx) = match builtin {
            Some("grid") => (Graph::grid(rmax)?, Graph::grid_centre(rmax)),
            Some(b) if b.starts_with("tree:") => {
                let deg: usize = b[5..]
                    .parse()
                    .map_err(|_| CliError::Input(format!("bad tree degree in '{b}'")))?;
                (Graph::regular_tree(deg, rmax)?, 0)
            }
            Some(other) => return Err(CliError::Input(format!("unknown builtin graph '{other}'"))),
            None => {
                let graph = Graph::from_edge_list(&read_input(g)?)?;
                let idx = match base {
                    Some(label) => graph
                        .index_of(label)
                        .ok_or_else(|| CliError::Input(format!("no vertex labelled '{label}'")))?,
                    None => 0,
                };
                (graph, idx)
            }
        };
        ball_counts(&graph, base_idx, rmax)?
    };
    let report = entropy_estimate(&series)?;
    json(&EntropyOut {
        report,
        radii: series.radii,
        volumes: series.volumes,
    })
}

fn ball_volume(g: &Global, dr: f64, radii: Option<&[f64]>) -> Out {
    let n = g.n.unwrap_or(3);
    let radii: Vec<f64> = match radii {
        Some(r) => r.to_vec(),
        None => {
            let rmax = g.rmax.unwrap_or(2.0);
            if !(dr > 0.0) || !(rmax >= 0.0) {
                return Err(CliError::Input("--dr must be positive and --rmax nonnegative".into()));
            }
            let steps = (rmax / dr + 1e-9).floor() as usize;
            (0..=steps).map(|k| k as f64 * dr).collect()
        }
    };
    let vn = unit_ball_volume(n);
    let mut rows = Vec::with_capacity(radii.len());
    for &r in &radii {
        let v = hyperbolic_ball_volume(n, r)?;
        let e = vn * r.powi(n as i32);
        let ratio = if e > 0.0 { float(v / e) } else { String::new() };
        rows.push(vec![n.to_string(), float(r), float(v), float(e), ratio]);
    }
    to_csv(&["n", "r", "volume", "euclidean_volume", "ratio"], &rows).map_err(|e| CliError::Input(e.to_string()))
}

#[derive(Serialize)]
struct PsOut {
    exponent: f64,
    s: f64,
    radius: f64,
    orbit_points: usize,
    total_mass: f64,
    measure: MeasureJson,
}

fn ps(g: &Global, radius: f64, min_points: usize) -> Out {
    let gens = parse_generators(&read_input(g)?)?;
    let n = gens[0].dim();
    let o = Point::origin(n);
    let orbit = OrbitSample::enumerate(gens, o.clone(), radius, None)?;
    let exponent = critical_exponent(&orbit)?;
    let s = exponent + 0.01;
    let mu = patterson_sullivan_atoms(&orbit, &o, s, min_points)?;
    json(&PsOut {
        exponent,
        s,
        radius,
        orbit_points: orbit.len(),
        total_mass: mu.total_mass(),
        measure: MeasureJson::from_measure(&mu),
    })
}
