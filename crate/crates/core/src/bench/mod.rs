//! Experiment harness: dataset generation, training, evaluation and
//! reports.

mod config;
pub mod io;

pub use config::{BenchExample, ExperimentConfig, Scale};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::datagen::{build_dataset, DatagenError, Dataset, ExampleId, Layout, PointKind};
use crate::features::Hypercube;
use crate::geometry::Shape;
use crate::linalg::{relative_l2_error, LinalgError};
use crate::model::{Architecture, ConstraintWrapper, ModelError, PeriodicEmbedding, RannDeepONet};
use crate::train::{self, PdeOperator, SourceTerm, TrainConfig, TrainError, TrainMode, TrainReport};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("format version {got} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, got: u32 },
    #[error("{file}: expected {expected} bytes, found {got}")]
    TruncatedArray { file: String, expected: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Error of one test realization.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseError {
    pub case: usize,
    pub shape: Option<Shape>,
    /// Points entering the error.
    pub points: usize,
    pub rel_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeStats {
    pub shape: Shape,
    pub cases: usize,
    pub mean_rel_l2: f64,
    pub worst_rel_l2: f64,
    pub worst_case: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cases: Vec<CaseError>,
    pub mean_rel_l2: f64,
    pub worst_rel_l2: f64,
    pub worst_case: usize,
    /// Empty unless the dataset carries domains.
    pub per_shape: Vec<ShapeStats>,
}

impl Evaluation {
    fn from_cases(cases: Vec<CaseError>) -> Self {
        let (mean, worst, worst_case) = summarize(&cases);
        let per_shape = Shape::ALL
            .into_iter()
            .filter_map(|s| {
                let sub: Vec<CaseError> = cases.iter().filter(|c| c.shape == Some(s)).cloned().collect();
                (!sub.is_empty()).then(|| {
                    let (mean, worst, worst_case) = summarize(&sub);
                    ShapeStats {
                        shape: s,
                        cases: sub.len(),
                        mean_rel_l2: mean,
                        worst_rel_l2: worst,
                        worst_case,
                    }
                })
            })
            .collect();
        Self {
            cases,
            mean_rel_l2: mean,
            worst_rel_l2: worst,
            worst_case,
            per_shape,
        }
    }

    /// `[evaluation]` section plus one `[shape.*]` section per shape.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "[evaluation]\ncases = {}\npoints = {}\nmean_rel_l2 = {:e}\nworst_rel_l2 = {:e}\nworst_case = {}\n",
            self.cases.len(),
            self.points(),
            self.mean_rel_l2,
            self.worst_rel_l2,
            self.worst_case
        );
        for st in &self.per_shape {
            let _ = write!(
                s,
                "\n[shape.{}]\ncases = {}\nmean_rel_l2 = {:e}\nworst_rel_l2 = {:e}\nworst_case = {}\n",
                st.shape.name(),
                st.cases,
                st.mean_rel_l2,
                st.worst_rel_l2,
                st.worst_case
            );
        }
        s
    }

    /// `case,shape,points,rel_l2`
    pub fn cases_csv(&self) -> String {
        let mut s = String::from("case,shape,points,rel_l2\n");
        for c in &self.cases {
            let shape = c.shape.map_or("-", |s| s.name());
            let _ = writeln!(s, "{},{},{},{:e}", c.case, shape, c.points, c.rel_l2);
        }
        s
    }

    pub fn points(&self) -> usize {
        self.cases.iter().map(|c| c.points).sum()
    }
}

fn summarize(cases: &[CaseError]) -> (f64, f64, usize) {
    let mean = cases.iter().map(|c| c.rel_l2).sum::<f64>() / cases.len() as f64;
    let worst = cases
        .iter()
        .fold(None::<&CaseError>, |w, c| match w {
            Some(w) if w.rel_l2 >= c.rel_l2 => Some(w),
            _ => Some(c),
        })
        .expect("at least one case");
    (mean, worst.rel_l2, worst.case)
}

/// Prediction and reference of one realization, over the points that count
/// towards the error (every point except those outside the domain).
#[derive(Debug, Clone, PartialEq)]
pub struct CaseField {
    pub case: usize,
    /// Flat `points × d`.
    pub points: Vec<f64>,
    pub reference: Vec<f64>,
    pub prediction: Vec<f64>,
}

pub fn evaluate_case(model: &RannDeepONet, data: &Dataset, n: usize) -> Result<CaseField, BenchError> {
    let values = data.values(n).ok_or(TrainError::MissingSolutionValues)?;
    let mut points = Vec::with_capacity(data.q * data.d);
    let mut reference = Vec::with_capacity(data.q);
    for j in 0..data.q {
        if data.kind(n, j) != PointKind::Outside {
            points.extend_from_slice(data.point(n, j));
            reference.push(values[j]);
        }
    }
    let prediction = model.evaluate_batch(data.model_input(n), &points)?;
    Ok(CaseField {
        case: n,
        points,
        reference,
        prediction,
    })
}

/// Relative ℓ² error of every realization. Realizations are split across
/// the available cores.
pub fn evaluate(model: &RannDeepONet, data: &Dataset) -> Result<Evaluation, BenchError> {
    if data.is_empty() {
        return Err(BenchError::ConfigInvalid("empty test set".into()));
    }
    let one = |n: usize| -> Result<CaseError, BenchError> {
        let f = evaluate_case(model, data, n)?;
        Ok(CaseError {
            case: n,
            shape: data.domain(n).map(|d| d.shape()),
            points: f.reference.len(),
            rel_l2: relative_l2_error(&f.prediction, &f.reference)?,
        })
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(data.len());
    let cases: Vec<CaseError> = if threads <= 1 {
        (0..data.len()).map(one).collect::<Result<_, _>>()?
    } else {
        let chunk = data.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let one = &one;
                    s.spawn(move || {
                        (t * chunk..((t + 1) * chunk).min(data.len()))
                            .map(one)
                            .collect::<Result<Vec<_>, _>>()
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(data.len());
            for h in handles {
                all.extend(h.join().expect("evaluation thread panicked")?);
            }
            Ok::<_, BenchError>(all)
        })?
    };
    Ok(Evaluation::from_cases(cases))
}

/// Raw coordinate box of an example's trunk input.
fn coord_box(example: ExampleId) -> Hypercube {
    let hi = match example {
        ExampleId::Darcy => crate::datagen::darcy::BOX_SIZE,
        _ => 1.0,
    };
    Hypercube::uniform(2, 0.0, hi).expect("non-empty box")
}

/// Seeds a model for `config`. The branch hypercube is the bounding box of
/// the training inputs.
pub fn build_model(config: &ExperimentConfig, train_data: &Dataset) -> Result<RannDeepONet, BenchError> {
    if train_data.m != config.m {
        return Err(BenchError::ConfigInvalid(format!(
            "dataset has {} sensors, configuration m = {}",
            train_data.m, config.m
        )));
    }
    let embedding = match config.example {
        BenchExample::Burgers => Some(PeriodicEmbedding::new(2.0 * std::f64::consts::PI, 1, vec![0])?),
        _ => None,
    };
    let constraint = match (config.example, config.hard_constraint) {
        (_, false) | (BenchExample::Burgers, true) => ConstraintWrapper::None,
        (BenchExample::Dr, true) => ConstraintWrapper::unit_interval_time(),
        (BenchExample::Darcy | BenchExample::DarcyPi, true) => ConstraintWrapper::domain(),
    };
    let arch = Architecture {
        sensors: config.m,
        branch_width: config.k,
        trunk_width: config.p,
        coord_dim: 2,
        branch_range: config.r_b,
        trunk_range: config.r_t,
        hypercube_bias: config.hypercube_bias,
        embedding,
        seed: config.model_seed(),
    };
    let sensor_box = Hypercube::bounding(&train_data.inputs, train_data.m, 1e-3)
        .map_err(ModelError::from)?;
    Ok(RannDeepONet::random(
        &arch,
        &sensor_box,
        &coord_box(config.example.dataset_example()),
        constraint,
    )?)
}

pub fn train_config(config: &ExperimentConfig) -> Result<TrainConfig, BenchError> {
    let mode = match config.example {
        BenchExample::DarcyPi => {
            if !config.hard_constraint {
                return Err(BenchError::ConfigInvalid(
                    "darcy_pi has no boundary rows and needs hard_constraint = true".into(),
                ));
            }
            TrainMode::PhysicsInformed(PdeOperator::Diffusion {
                permeability: 1.0,
                source: SourceTerm::Constant(1.0),
            })
        }
        _ => TrainMode::DataDriven,
    };
    Ok(TrainConfig {
        sample_budget: config.sample_budget,
        boundary_weight: config.boundary_weight,
        rel_tol: config.rel_tol,
        ridge: config.ridge,
        rng_seed: config.sample_seed(),
        mode,
        solver: config.solver,
    })
}

/// Loads `data_dir/{train,test}` when configured, otherwise generates.
pub fn dataset_for(config: &ExperimentConfig, layout: Layout) -> Result<Dataset, BenchError> {
    let data = match &config.data_dir {
        Some(dir) => io::load_dataset(&dir.join(layout.name()))?,
        None => build_dataset(&config.dataset_spec(layout))?,
    };
    if data.example != config.example.dataset_example() {
        return Err(BenchError::ConfigInvalid(format!(
            "{} dataset for a {} experiment",
            data.example, config.example
        )));
    }
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub os: &'static str,
    pub arch: &'static str,
    pub cpus: usize,
    pub version: &'static str,
}

impl Environment {
    pub fn capture() -> Self {
        Self {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub datagen_seconds: f64,
    pub train_seconds: f64,
    pub solve_seconds: f64,
    pub eval_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub train: TrainReport,
    pub eval: Evaluation,
    pub timings: Timings,
    pub environment: Environment,
    /// Field of the worst test realization.
    pub worst: CaseField,
}

/// Published training times of the full-size settings.
fn reference_train_seconds(config: &ExperimentConfig) -> f64 {
    match (config.example, config.hard_constraint) {
        (BenchExample::Dr, true) => 90.74,
        (BenchExample::Dr, false) => 173.21,
        (BenchExample::Burgers, _) => 289.00,
        (BenchExample::Darcy, _) => 243.55,
        (BenchExample::DarcyPi, _) => 99.00,
    }
}

impl BenchReport {
    /// Deterministic part of the report: configuration, solve statistics
    /// and errors. Timings and host details are in
    /// [`BenchReport::render_timing`].
    pub fn render(&self) -> String {
        let mut s = String::from("[experiment]\n");
        let mut c = self.config.clone();
        c.data_dir = None;
        c.out_dir = None;
        s.push_str(&c.to_text());
        let _ = write!(
            s,
            "\n[training]\nrows_used = {}\neffective_rank = {}\nresidual_norm = {:e}\n",
            self.train.rows_used, self.train.effective_rank, self.train.residual_norm
        );
        s.push('\n');
        s.push_str(&self.eval.render());
        s
    }

    /// Timings, the published training time of the full-size setting on
    /// other hardware (context only), and host details.
    pub fn render_timing(&self) -> String {
        let t = &self.timings;
        let env = &self.environment;
        format!(
            "[timing]\ndatagen_seconds = {:.3}\ntrain_seconds = {:.3}\nsolve_seconds = {:.3}\neval_seconds = {:.3}\n\
             reference_train_seconds = {:.2}\n\n\
             [environment]\nos = {}\narch = {}\ncpus = {}\nversion = {}\n",
            t.datagen_seconds,
            t.train_seconds,
            t.solve_seconds,
            t.eval_seconds,
            reference_train_seconds(&self.config),
            env.os,
            env.arch,
            env.cpus,
            env.version
        )
    }

    pub fn worst_case_csv(&self) -> String {
        let names = match self.config.example.dataset_example() {
            ExampleId::Darcy => "x,y",
            _ => "x,t",
        };
        let mut s = format!("{names},reference,prediction\n");
        let w = &self.worst;
        for (i, (r, p)) in w.reference.iter().zip(&w.prediction).enumerate() {
            let y = &w.points[2 * i..2 * i + 2];
            let _ = writeln!(s, "{:e},{:e},{:e},{:e}", y[0], y[1], r, p);
        }
        s
    }

    /// Writes `report.txt`, `timing.txt`, `cases.csv` and `worst_case.csv`.
    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        fs::create_dir_all(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
        for (name, text) in [
            ("report.txt", self.render()),
            ("timing.txt", self.render_timing()),
            ("cases.csv", self.eval.cases_csv()),
            ("worst_case.csv", self.worst_case_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// Trains a fresh model on `train_data` and evaluates it on `test_data`.
pub fn run_on(
    config: &ExperimentConfig,
    train_data: &Dataset,
    test_data: &Dataset,
) -> Result<(RannDeepONet, BenchReport), BenchError> {
    config.validate()?;
    let mut model = build_model(config, train_data)?;
    let tc = train_config(config)?;
    log::info!(
        "{}: training k = {}, p = {} on {} realizations",
        config.example,
        config.k,
        config.p,
        train_data.len()
    );
    let report = train::train(&mut model, train_data, &tc)?;
    let start = Instant::now();
    let eval = evaluate(&model, test_data)?;
    let worst = evaluate_case(&model, test_data, eval.worst_case)?;
    let eval_seconds = start.elapsed().as_secs_f64();
    log::info!("{}: mean rel. l2 {:e}", config.example, eval.mean_rel_l2);
    Ok((
        model,
        BenchReport {
            config: config.clone(),
            timings: Timings {
                datagen_seconds: 0.0,
                train_seconds: report.train_seconds,
                solve_seconds: report.solve_seconds,
                eval_seconds,
            },
            train: report,
            eval,
            environment: Environment::capture(),
            worst,
        },
    ))
}

/// Generates (or loads) the data, trains once and evaluates. Writes the
/// report files when `config.out_dir` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    train_config(config)?;
    let start = Instant::now();
    log::info!("{}: preparing {} + {} realizations", config.example, config.n_train, config.n_test);
    let train_data = dataset_for(config, Layout::Train)?;
    let test_data = dataset_for(config, Layout::Test)?;
    let datagen_seconds = start.elapsed().as_secs_f64();
    let (_, mut report) = run_on(config, &train_data, &test_data)?;
    report.timings.datagen_seconds = datagen_seconds;
    if let Some(dir) = &config.out_dir {
        report.write(dir)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Branch width `k`.
    HiddenK,
    /// Trunk width `p`.
    OutputP,
}

impl std::str::FromStr for SweepAxis {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "k" => Ok(SweepAxis::HiddenK),
            "p" => Ok(SweepAxis::OutputP),
            other => Err(BenchError::ConfigInvalid(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub width: usize,
    pub mean_rel_l2: f64,
    pub worst_rel_l2: f64,
    pub effective_rank: usize,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let name = match self.axis {
            SweepAxis::HiddenK => "k",
            SweepAxis::OutputP => "p",
        };
        let mut s = format!("{name},mean_rel_l2,worst_rel_l2,effective_rank,train_seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{},{:.3}",
                r.width, r.mean_rel_l2, r.worst_rel_l2, r.effective_rank, r.train_seconds
            );
        }
        s
    }

    pub fn min_error(&self, pred: impl Fn(usize) -> bool) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| pred(r.width))
            .map(|r| r.mean_rel_l2)
            .min_by(f64::total_cmp)
    }
}

/// Repeats the experiment for each width on the same data and seeds.
/// Writes `sweep_<axis>.csv` when `config.out_dir` is set.
pub fn neuron_sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[usize]) -> Result<SweepTable, BenchError> {
    if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::ConfigInvalid("sweep values must be non-empty and ascending".into()));
    }
    config.validate()?;
    let train_data = dataset_for(config, Layout::Train)?;
    let test_data = dataset_for(config, Layout::Test)?;
    let mut rows = Vec::with_capacity(values.len());
    for &width in values {
        let mut c = config.clone();
        match axis {
            SweepAxis::HiddenK => c.k = width,
            SweepAxis::OutputP => c.p = width,
        }
        let (_, report) = run_on(&c, &train_data, &test_data)?;
        rows.push(SweepRow {
            width,
            mean_rel_l2: report.eval.mean_rel_l2,
            worst_rel_l2: report.eval.worst_rel_l2,
            effective_rank: report.train.effective_rank,
            train_seconds: report.train.train_seconds,
        });
    }
    let table = SweepTable { axis, rows };
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
        let name = match axis {
            SweepAxis::HiddenK => "sweep_k.csv",
            SweepAxis::OutputP => "sweep_p.csv",
        };
        let path = dir.join(name);
        fs::write(&path, table.to_csv()).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(table)
}
