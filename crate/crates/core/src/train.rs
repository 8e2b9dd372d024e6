//! Least-squares training of the coefficient matrix `α`.
//!
//! Every row of the system is linear in `α`. A data row at `(f, y)` reads
//! `Σᵢⱼ c(y) tᵢ(y) hⱼ(f) αᵢⱼ = u(y) − g(y)`; a physics row applies the
//! differential operator to `c·tᵢ` instead, using the analytic trunk
//! derivatives.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::index;
use thiserror::Error;

use crate::datagen::{Dataset, PointKind};
use crate::jet::ScalarJet;
use crate::linalg::{
    solve_least_squares_with, LinalgError, LsqSolution, LsqSystem, NormalEquations, SolveOptions,
};
use crate::model::{ConstraintWrapper, ModelError, RannDeepONet};
use crate::rng;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dataset has no solution values")]
    MissingSolutionValues,
    #[error("physics-informed training needs a linear operator; {0} is nonlinear")]
    NonlinearPde(&'static str),
    #[error("dataset and model disagree: {0}")]
    Incompatible(String),
    #[error("no usable rows (every candidate point has c = 0 or lies outside)")]
    NoRows,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

/// Right-hand side `f(y)` of a realization.
pub type SourceFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum SourceTerm {
    Constant(f64),
    /// `f(sensor_values, y)`.
    Field(Arc<SourceFn>),
}

impl std::fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceTerm::Constant(v) => write!(f, "Constant({v})"),
            SourceTerm::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl SourceTerm {
    fn eval(&self, sensors: &[f64], y: &[f64]) -> f64 {
        match self {
            SourceTerm::Constant(v) => *v,
            SourceTerm::Field(f) => f(sensors, y),
        }
    }
}

/// Differential operators understood by the physics-informed assembly.
#[derive(Debug, Clone)]
pub enum PdeOperator {
    /// `−∇·(K∇u) = f` with constant permeability `K`.
    Diffusion { permeability: f64, source: SourceTerm },
    /// `u_t − D u_xx − κu² = f`.
    DiffusionReaction { diffusion: f64, reaction: f64 },
    /// `u_t + u u_x − ν u_xx = 0`.
    Burgers { viscosity: f64 },
}

impl PdeOperator {
    /// `−K Δ` applied to a jet.
    fn apply(&self, jet: &ScalarJet) -> Result<f64, TrainError> {
        match self {
            PdeOperator::Diffusion { permeability, .. } => Ok(-permeability * jet.laplacian()),
            PdeOperator::DiffusionReaction { .. } => Err(TrainError::NonlinearPde("diffusion-reaction")),
            PdeOperator::Burgers { .. } => Err(TrainError::NonlinearPde("Burgers")),
        }
    }

    fn source(&self) -> Result<&SourceTerm, TrainError> {
        match self {
            PdeOperator::Diffusion { source, .. } => Ok(source),
            PdeOperator::DiffusionReaction { .. } => Err(TrainError::NonlinearPde("diffusion-reaction")),
            PdeOperator::Burgers { .. } => Err(TrainError::NonlinearPde("Burgers")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainMode {
    DataDriven,
    PhysicsInformed(PdeOperator),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Truncated SVD of the assembled matrix.
    Svd,
    /// Streamed `AᵀA` accumulation; the design matrix is never stored.
    NormalEquations,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Total number of rows drawn.
    pub sample_budget: usize,
    /// `λ`; soft boundary rows are scaled by `√λ`.
    pub boundary_weight: f64,
    pub rel_tol: f64,
    pub ridge: f64,
    pub rng_seed: u64,
    pub mode: TrainMode,
    pub solver: SolverKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sample_budget: 40_000,
            boundary_weight: 1.0,
            rel_tol: crate::linalg::DEFAULT_REL_TOL,
            ridge: 0.0,
            rng_seed: 0,
            mode: TrainMode::DataDriven,
            solver: SolverKind::Svd,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub residual_norm: f64,
    pub train_seconds: f64,
    pub solve_seconds: f64,
    pub rows_used: usize,
    pub effective_rank: usize,
}

/// A sampled `(realization, point)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowPick {
    pub realization: usize,
    pub point: usize,
}

fn check_compat(model: &RannDeepONet, data: &Dataset) -> Result<(), TrainError> {
    if data.m != model.sensor_count() {
        return Err(TrainError::Incompatible(format!(
            "{} sensors in the dataset, {} branch inputs",
            data.m,
            model.sensor_count()
        )));
    }
    if data.d != model.coord_dim() {
        return Err(TrainError::Incompatible(format!(
            "{}-dimensional points, model expects {}",
            data.d,
            model.coord_dim()
        )));
    }
    Ok(())
}

/// Allocates `budget` picks across strata proportionally to their sizes
/// (floor, then largest remainder) and samples each stratum without
/// replacement. Returns picks sorted by `(realization, point)`.
pub fn stratified_sample(strata: &[Vec<RowPick>], budget: usize, seed: u64) -> Vec<RowPick> {
    let total: usize = strata.iter().map(Vec::len).sum();
    if budget >= total {
        let mut all: Vec<RowPick> = strata.iter().flatten().copied().collect();
        all.sort_unstable();
        return all;
    }
    let mut quota: Vec<usize> = strata.iter().map(|s| s.len() * budget / total).collect();
    let mut rest: Vec<(usize, usize)> = strata
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.len() * budget) % total, i))
        .collect();
    // largest remainder first, ties by stratum order
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = budget - quota.iter().sum::<usize>();
    for &(_, i) in rest.iter().take(missing) {
        quota[i] += 1;
    }
    let mut out = Vec::with_capacity(budget);
    for (i, (stratum, &want)) in strata.iter().zip(&quota).enumerate() {
        let mut g = rng::stream(seed, "rows", i as u64);
        out.extend(index::sample(&mut g, stratum.len(), want).into_iter().map(|t| stratum[t]));
    }
    out.sort_unstable();
    out
}

/// Candidate rows grouped by point kind. Outside points are never used;
/// points where the constraint factor vanishes are dropped because their
/// rows are identically zero. With `interior_only`, boundary and initial
/// points are skipped too.
fn candidates(
    model: &RannDeepONet,
    data: &Dataset,
    interior_only: bool,
) -> Result<Vec<(PointKind, Vec<RowPick>)>, TrainError> {
    let kinds = [PointKind::Interior, PointKind::Boundary, PointKind::Initial];
    let mut strata: Vec<(PointKind, Vec<RowPick>)> = kinds.iter().map(|&k| (k, Vec::new())).collect();
    let wrapper = model.constraint();
    for n in 0..data.len() {
        for j in 0..data.q {
            let kind = data.kind(n, j);
            if kind == PointKind::Outside || (interior_only && kind != PointKind::Interior) {
                continue;
            }
            if !wrapper.is_none() && wrapper.c_value(data.point(n, j), data.domain(n))? == 0.0 {
                continue;
            }
            let slot = kinds.iter().position(|&k| k == kind).expect("known kind");
            strata[slot].1.push(RowPick {
                realization: n,
                point: j,
            });
        }
    }
    Ok(strata)
}

fn pick_rows(
    model: &RannDeepONet,
    data: &Dataset,
    budget: usize,
    seed: u64,
    interior_only: bool,
) -> Result<Vec<RowPick>, TrainError> {
    let strata: Vec<Vec<RowPick>> = candidates(model, data, interior_only)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let picks = stratified_sample(&strata, budget, seed);
    if picks.is_empty() {
        return Err(TrainError::NoRows);
    }
    if picks.len() < model.coefficient_count() {
        log::warn!(
            "{} rows for {} unknowns; the system is underdetermined",
            picks.len(),
            model.coefficient_count()
        );
    }
    Ok(picks)
}

/// Writes `scale · (t ⊗ h)` into `row` (column `i·k + j`).
fn outer_into(row: &mut [f64], t: &[f64], h: &[f64], scale: f64) {
    let k = h.len();
    for (i, &ti) in t.iter().enumerate() {
        let a = scale * ti;
        for (dst, &hj) in row[i * k..(i + 1) * k].iter_mut().zip(h) {
            *dst = a * hj;
        }
    }
}

/// Branch features per realization, computed on first use.
struct BranchCache<'a> {
    model: &'a RannDeepONet,
    data: &'a Dataset,
    index: usize,
    h: Vec<f64>,
}

impl<'a> BranchCache<'a> {
    fn new(model: &'a RannDeepONet, data: &'a Dataset) -> Self {
        Self {
            model,
            data,
            index: usize::MAX,
            h: Vec::new(),
        }
    }

    fn get(&mut self, n: usize) -> Result<&[f64], TrainError> {
        if self.index != n {
            self.h = self.model.branch_features(self.data.input(n))?;
            self.index = n;
        }
        Ok(&self.h)
    }
}

fn data_rows(model: &RannDeepONet, data: &Dataset, picks: &[RowPick]) -> Result<LsqSystem, TrainError> {
    let cols = model.coefficient_count();
    let wrapper = model.constraint();
    let mut a = vec![0.0; picks.len() * cols];
    let mut rhs = Vec::with_capacity(picks.len());
    let mut cache = BranchCache::new(model, data);
    for (r, pick) in picks.iter().enumerate() {
        let (n, j) = (pick.realization, pick.point);
        let y = data.point(n, j);
        let u = data.value(n, j).ok_or(TrainError::MissingSolutionValues)?;
        let c = wrapper.c_value(y, data.domain(n))?;
        let t = model.trunk_features(y)?;
        let h = cache.get(n)?;
        outer_into(&mut a[r * cols..(r + 1) * cols], &t, h, c);
        rhs.push(u - wrapper.g_value(y));
    }
    Ok(LsqSystem::from_rows(&a, cols, rhs)?)
}

/// Data rows for up to `sample_budget` sampled `(n, j)` pairs.
pub fn assemble_data_rows(
    model: &RannDeepONet,
    data: &Dataset,
    sample_budget: usize,
    rng_seed: u64,
) -> Result<LsqSystem, TrainError> {
    check_compat(model, data)?;
    if data.solution.is_none() {
        return Err(TrainError::MissingSolutionValues);
    }
    let picks = pick_rows(model, data, sample_budget, rng_seed, false)?;
    data_rows(model, data, &picks)
}

fn physics_rows(
    model: &RannDeepONet,
    data: &Dataset,
    pde: &PdeOperator,
    picks: &[RowPick],
    boundary_weight: f64,
) -> Result<LsqSystem, TrainError> {
    let cols = model.coefficient_count();
    let wrapper = model.constraint();
    let source = pde.source()?;
    let scale = boundary_weight.sqrt();
    let mut a = vec![0.0; picks.len() * cols];
    let mut rhs = Vec::with_capacity(picks.len());
    let mut cache = BranchCache::new(model, data);
    let mut lt = vec![0.0; model.trunk_width()];
    for (r, pick) in picks.iter().enumerate() {
        let (n, j) = (pick.realization, pick.point);
        let y = data.point(n, j);
        let row = &mut a[r * cols..(r + 1) * cols];
        if data.kind(n, j) != PointKind::Interior {
            // soft boundary/initial data row, only reachable without a wrapper
            let t = model.trunk_features(y)?;
            let h = cache.get(n)?;
            outer_into(row, &t, h, scale);
            rhs.push(scale * data.value(n, j).unwrap_or(0.0));
            continue;
        }
        let c = wrapper.c_jet(y, data.domain(n), 2)?;
        let jets = model.trunk_features_derivatives(y, 2)?;
        for (i, v) in lt.iter_mut().enumerate() {
            *v = pde.apply(&c.product(&jets.jet(i)))?;
        }
        let g = wrapper.g_jet(y, 2);
        let h = cache.get(n)?;
        outer_into(row, &lt, h, 1.0);
        rhs.push(source.eval(data.input(n), y) - pde.apply(&g)?);
    }
    Ok(LsqSystem::from_rows(&a, cols, rhs)?)
}

/// PDE residual rows at sampled interior points, plus `√λ`-weighted
/// boundary and initial data rows when the model has no hard constraint.
pub fn assemble_physics_rows(
    model: &RannDeepONet,
    data: &Dataset,
    pde: &PdeOperator,
    sample_budget: usize,
    boundary_weight: f64,
    rng_seed: u64,
) -> Result<LsqSystem, TrainError> {
    check_compat(model, data)?;
    pde.source()?;
    if !(boundary_weight > 0.0) {
        return Err(TrainError::InvalidConfig(format!("λ = {boundary_weight} must be positive")));
    }
    let hard = !matches!(model.constraint(), ConstraintWrapper::None);
    let picks = pick_rows(model, data, sample_budget, rng_seed, hard)?;
    physics_rows(model, data, pde, &picks, boundary_weight)
}

const STREAM_BLOCK: usize = 2048;

/// Assembles rows per the configured mode, solves for `α` and installs it.
pub fn train(model: &mut RannDeepONet, data: &Dataset, config: &TrainConfig) -> Result<TrainReport, TrainError> {
    let start = Instant::now();
    check_compat(model, data)?;
    if config.sample_budget == 0 {
        return Err(TrainError::InvalidConfig("sample budget must be positive".into()));
    }
    let opts = SolveOptions {
        rel_tol: config.rel_tol,
        ridge: config.ridge,
    };
    let (picks, build): (Vec<RowPick>, Box<dyn Fn(&[RowPick]) -> Result<LsqSystem, TrainError>>) =
        match &config.mode {
            TrainMode::DataDriven => {
                if data.solution.is_none() {
                    return Err(TrainError::MissingSolutionValues);
                }
                let picks = pick_rows(model, data, config.sample_budget, config.rng_seed, false)?;
                let m = &*model;
                (picks, Box::new(move |p: &[RowPick]| data_rows(m, data, p)))
            }
            TrainMode::PhysicsInformed(pde) => {
                pde.source()?;
                if !(config.boundary_weight > 0.0) {
                    return Err(TrainError::InvalidConfig("λ must be positive".into()));
                }
                let hard = !model.constraint().is_none();
                let picks = pick_rows(model, data, config.sample_budget, config.rng_seed, hard)?;
                let m = &*model;
                let w = config.boundary_weight;
                (picks, Box::new(move |p: &[RowPick]| physics_rows(m, data, pde, p, w)))
            }
        };
    let solution: LsqSolution = match config.solver {
        SolverKind::Svd => solve_least_squares_with(&build(&picks)?, &opts)?,
        SolverKind::NormalEquations => {
            let mut acc = NormalEquations::new(model.coefficient_count());
            for block in picks.chunks(STREAM_BLOCK) {
                acc.accumulate(&build(block)?)?;
            }
            acc.solve(&opts)?
        }
    };
    drop(build);
    let rows_used = picks.len();
    model.set_alpha_flat(solution.coefficients)?;
    Ok(TrainReport {
        residual_norm: solution.residual_norm,
        train_seconds: start.elapsed().as_secs_f64(),
        solve_seconds: solution.solve_seconds,
        rows_used,
        effective_rank: solution.effective_rank,
    })
}
