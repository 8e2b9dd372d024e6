//! Benchmark dataset generation.

use std::collections::BTreeMap;

use rand::Rng;

use super::burgers::{self, solve_burgers};
use super::darcy::{self, solve_darcy};
use super::diffusion_reaction::solve_diffusion_reaction;
use super::grf::{PeriodicField, RbfGrf};
use super::{DatagenError, Dataset, ExampleId, GridSolution, PointKind};
use crate::geometry::{DomainSpec, Shape};
use crate::rng;

pub const DR_LENGTH_SCALE: f64 = 0.2;
pub const DR_DIFFUSION: f64 = 0.01;
pub const DR_REACTION: f64 = 0.01;
pub const BURGERS_VISCOSITY: f64 = 0.01;
/// Boundary points per Darcy domain; the branch input has twice as many
/// entries.
pub const DARCY_BOUNDARY_POINTS: usize = 100;

/// Training sets use scattered collocation points; test sets use the full
/// evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Train,
    Test,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::Train => "train",
            Layout::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub example: ExampleId,
    /// Number of realizations `N`.
    pub n: usize,
    pub seed: u64,
    pub layout: Layout,
    /// Nodes per axis of the diffusion-reaction grid (also `m`).
    pub dr_grid: usize,
    /// Spatial resolution of the Burgers solver.
    pub burgers_nx: usize,
    /// Time steps of the Burgers solver.
    pub burgers_steps: usize,
    pub darcy_grid_n: usize,
    /// Random collocation points per realization (diffusion-reaction and
    /// Darcy training layouts).
    pub colloc: usize,
    /// Interior random points of the Burgers training layout.
    pub burgers_interior: usize,
    /// Random points on each of `x = 0` and `x = 1` (Burgers training
    /// layout).
    pub burgers_edge: usize,
}

impl DatasetSpec {
    pub fn new(example: ExampleId, n: usize, seed: u64, layout: Layout) -> Self {
        Self {
            example,
            n,
            seed,
            layout,
            dr_grid: 100,
            burgers_nx: 256,
            burgers_steps: 1000,
            darcy_grid_n: darcy::DEFAULT_GRID_N,
            colloc: match example {
                ExampleId::Darcy => 1000,
                _ => 100,
            },
            burgers_interior: 2500,
            burgers_edge: 50,
        }
    }
}

struct Builder {
    inputs: Vec<f64>,
    colloc: Vec<f64>,
    solution: Vec<f64>,
    kinds: Vec<u8>,
    q: Option<usize>,
}

impl Builder {
    fn new() -> Self {
        Self {
            inputs: Vec::new(),
            colloc: Vec::new(),
            solution: Vec::new(),
            kinds: Vec::new(),
            q: None,
        }
    }

    fn push(&mut self, input: &[f64], points: &[([f64; 2], f64, PointKind)]) {
        debug_assert!(self.q.is_none_or(|q| q == points.len()));
        self.q = Some(points.len());
        self.inputs.extend_from_slice(input);
        for (p, u, k) in points {
            self.colloc.extend_from_slice(p);
            self.solution.push(*u);
            self.kinds.push(*k as u8);
        }
    }
}

/// Grid nodes of a unit-square solution, classified by edge: `x = 0` and
/// `x = 1` are boundary points, `t = 0` initial points.
fn grid_points(sol: &GridSolution) -> Vec<([f64; 2], f64, PointKind)> {
    let (xs, ts) = (&sol.axes[0], &sol.axes[1]);
    let mut out = Vec::with_capacity(xs.len() * ts.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &t) in ts.iter().enumerate() {
            let kind = if i == 0 || i + 1 == xs.len() {
                PointKind::Boundary
            } else if j == 0 {
                PointKind::Initial
            } else {
                PointKind::Interior
            };
            out.push(([x, t], sol.at(i, j), kind));
        }
    }
    out
}

/// Generates `spec.n` realizations. Realization `n` draws from its own
/// stream derived from `(spec.seed, n)`.
pub fn build_dataset(spec: &DatasetSpec) -> Result<Dataset, DatagenError> {
    if spec.n == 0 {
        return Err(DatagenError::InvalidParameter("dataset needs at least one realization".into()));
    }
    let mut meta = BTreeMap::new();
    meta.insert("layout".to_string(), spec.layout.name().to_string());
    meta.insert("seed".to_string(), spec.seed.to_string());
    let mut b = Builder::new();
    let mut domains = Vec::new();
    let (sensors, sensor_dim) = match spec.example {
        ExampleId::DiffusionReaction => {
            let nx = spec.dr_grid;
            let xs: Vec<f64> = (0..nx).map(|i| i as f64 / (nx - 1) as f64).collect();
            let grf = RbfGrf::new(&xs, DR_LENGTH_SCALE)?;
            meta.insert("length_scale".into(), format!("{DR_LENGTH_SCALE:?}"));
            meta.insert("diffusion".into(), format!("{DR_DIFFUSION:?}"));
            meta.insert("reaction".into(), format!("{DR_REACTION:?}"));
            meta.insert("grid".into(), format!("{nx}x{nx}"));
            for n in 0..spec.n {
                let mut g = rng::stream(spec.seed, "realization", n as u64);
                let f = grf.sample(&mut g);
                let sol = solve_diffusion_reaction(&f, DR_DIFFUSION, DR_REACTION, nx, nx)?;
                let pts = match spec.layout {
                    Layout::Test => grid_points(&sol),
                    Layout::Train => (0..spec.colloc)
                        .map(|_| {
                            let (x, t) = (g.random::<f64>(), g.random::<f64>());
                            ([x, t], sol.interpolate(x, t), PointKind::Interior)
                        })
                        .collect(),
                };
                b.push(&f, &pts);
            }
            (xs, 1)
        }
        ExampleId::Burgers => {
            let nx = spec.burgers_nx;
            let per = burgers::OUTPUT_NODES - 1;
            let xs: Vec<f64> = (0..=per).map(|i| i as f64 / per as f64).collect();
            meta.insert("viscosity".into(), format!("{BURGERS_VISCOSITY:?}"));
            meta.insert("solver_nx".into(), nx.to_string());
            meta.insert("solver_steps".into(), spec.burgers_steps.to_string());
            for n in 0..spec.n {
                let mut g = rng::stream(spec.seed, "realization", n as u64);
                let u0 = PeriodicField::sample_riesz((nx - 1) / 2, &mut g);
                let sensors: Vec<f64> = xs.iter().map(|&x| u0.eval(x)).collect();
                let sol = solve_burgers(&u0.on_grid(nx), BURGERS_VISCOSITY, spec.burgers_steps)?;
                let pts = match spec.layout {
                    Layout::Test => grid_points(&sol),
                    Layout::Train => {
                        let mut pts = Vec::new();
                        for (i, &x) in xs.iter().enumerate() {
                            pts.push(([x, 0.0], sol.at(i, 0), PointKind::Initial));
                        }
                        for x in [0.0, 1.0] {
                            for _ in 0..spec.burgers_edge {
                                let t = g.random::<f64>();
                                pts.push(([x, t], sol.interpolate(x, t), PointKind::Boundary));
                            }
                        }
                        for _ in 0..spec.burgers_interior {
                            let (x, t) = (g.random::<f64>(), g.random::<f64>());
                            pts.push(([x, t], sol.interpolate(x, t), PointKind::Interior));
                        }
                        pts
                    }
                };
                b.push(&sensors, &pts);
            }
            (xs, 1)
        }
        ExampleId::Darcy => {
            let gn = spec.darcy_grid_n;
            meta.insert("grid".into(), format!("{gn}x{gn}"));
            meta.insert("branch_input".into(), "boundary polyline x1 y1 x2 y2 ...".into());
            for n in 0..spec.n {
                let mut g = rng::stream(spec.seed, "realization", n as u64);
                let shape = Shape::ALL[n % Shape::ALL.len()];
                let domain = DomainSpec::sample(shape, &mut g);
                let input: Vec<f64> = domain
                    .boundary_points(DARCY_BOUNDARY_POINTS)
                    .map_err(|e| DatagenError::InvalidParameter(e.to_string()))?
                    .into_iter()
                    .flatten()
                    .collect();
                let sol = solve_darcy(&domain, gn)?;
                let classify = |x: f64, y: f64, u: f64| {
                    if domain.contains(x, y) {
                        ([x, y], u, PointKind::Interior)
                    } else {
                        ([x, y], 0.0, PointKind::Outside)
                    }
                };
                let pts: Vec<_> = match spec.layout {
                    Layout::Test => {
                        let axis = &sol.axes[0];
                        let mut pts = Vec::with_capacity(gn * gn);
                        for (i, &x) in axis.iter().enumerate() {
                            for (j, &y) in axis.iter().enumerate() {
                                pts.push(classify(x, y, sol.at(i, j)));
                            }
                        }
                        pts
                    }
                    Layout::Train => (0..spec.colloc)
                        .map(|_| {
                            let (x, y) = (
                                darcy::BOX_SIZE * g.random::<f64>(),
                                darcy::BOX_SIZE * g.random::<f64>(),
                            );
                            classify(x, y, sol.interpolate(x, y))
                        })
                        .collect(),
                };
                b.push(&input, &pts);
                domains.push(domain);
            }
            let sensors = (0..2 * DARCY_BOUNDARY_POINTS)
                .map(|i| (i / 2) as f64 / DARCY_BOUNDARY_POINTS as f64)
                .collect();
            (sensors, 1)
        }
    };
    let m = sensors.len() / sensor_dim;
    let data = Dataset {
        example: spec.example,
        sensors,
        sensor_dim,
        m,
        inputs: b.inputs,
        q: b.q.expect("at least one realization"),
        d: 2,
        colloc: b.colloc,
        solution: Some(b.solution),
        kinds: b.kinds,
        domains: (spec.example == ExampleId::Darcy).then_some(domains),
        meta,
    };
    data.validate()?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(example: ExampleId, n: usize, layout: Layout) -> DatasetSpec {
        let mut s = DatasetSpec::new(example, n, 5, layout);
        s.darcy_grid_n = 81;
        s.burgers_nx = 64;
        s.burgers_steps = 200;
        s.burgers_interior = 100;
        s
    }

    #[test]
    fn dr_layouts() {
        let train = build_dataset(&small(ExampleId::DiffusionReaction, 3, Layout::Train)).unwrap();
        assert_eq!((train.len(), train.m, train.q), (3, 100, 100));
        let test = build_dataset(&small(ExampleId::DiffusionReaction, 2, Layout::Test)).unwrap();
        assert_eq!(test.q, 10_000);
        assert_eq!(test.kind(0, 0), PointKind::Boundary);
        assert_eq!(test.kind(0, 100), PointKind::Initial);
        assert_eq!(test.kind(0, 101), PointKind::Interior);
        // zero initial and boundary data
        for j in 0..test.q {
            if test.kind(1, j) != PointKind::Interior {
                assert_eq!(test.value(1, j).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn burgers_layout_is_stratified() {
        let data = build_dataset(&small(ExampleId::Burgers, 2, Layout::Train)).unwrap();
        assert_eq!(data.m, 101);
        assert_eq!(data.q, 101 + 100 + 100);
        let count = |k: PointKind| (0..data.q).filter(|&j| data.kind(0, j) == k).count();
        assert_eq!(count(PointKind::Initial), 101);
        assert_eq!(count(PointKind::Boundary), 100);
        // initial values are the sensor values
        for i in 0..101 {
            assert!((data.value(0, i).unwrap() - data.input(0)[i]).abs() < 1e-12);
        }
        assert_eq!(data.input(1)[0], data.input(1)[100]);
    }

    #[test]
    fn darcy_shapes_rotate_and_masks_agree() {
        let data = build_dataset(&small(ExampleId::Darcy, 6, Layout::Train)).unwrap();
        assert_eq!((data.m, data.q), (200, 1000));
        let shapes: Vec<Shape> = (0..6).map(|n| data.domain(n).unwrap().shape()).collect();
        for s in Shape::ALL {
            assert_eq!(shapes.iter().filter(|&&x| x == s).count(), 2);
        }
        for n in 0..6 {
            let d = data.domain(n).unwrap();
            for j in 0..data.q {
                let p = data.point(n, j);
                assert_eq!(data.kind(n, j) == PointKind::Interior, d.contains(p[0], p[1]));
                if data.kind(n, j) == PointKind::Outside {
                    assert_eq!(data.value(n, j).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small(ExampleId::DiffusionReaction, 2, Layout::Train);
        assert_eq!(build_dataset(&spec).unwrap(), build_dataset(&spec).unwrap());
        let mut other = spec.clone();
        other.seed += 1;
        assert_ne!(build_dataset(&spec).unwrap().inputs, build_dataset(&other).unwrap().inputs);
    }

    #[test]
    fn test_grid_values_are_solver_nodes() {
        let data = build_dataset(&small(ExampleId::Darcy, 1, Layout::Test)).unwrap();
        let d = data.domain(0).unwrap();
        let sol = solve_darcy(d, 81).unwrap();
        for j in 0..data.q {
            let (i, k) = (j / 81, j % 81);
            if data.kind(0, j) == PointKind::Interior {
                assert_eq!(data.value(0, j).unwrap(), sol.at(i, k));
            }
        }
    }
}
