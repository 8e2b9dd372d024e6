//! Experiment configuration and the flat `key = value` config format.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::BenchError;
use crate::datagen::{DatasetSpec, ExampleId, Layout};
use crate::rng;
use crate::train::SolverKind;

/// Benchmark problems. `darcy_pi` shares the Darcy data but trains on the
/// PDE residual instead of interior solution values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchExample {
    Dr,
    Burgers,
    Darcy,
    DarcyPi,
}

impl BenchExample {
    pub const ALL: [BenchExample; 4] = [
        BenchExample::Dr,
        BenchExample::Burgers,
        BenchExample::Darcy,
        BenchExample::DarcyPi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchExample::Dr => "dr",
            BenchExample::Burgers => "burgers",
            BenchExample::Darcy => "darcy",
            BenchExample::DarcyPi => "darcy_pi",
        }
    }

    pub fn dataset_example(self) -> ExampleId {
        match self {
            BenchExample::Dr => ExampleId::DiffusionReaction,
            BenchExample::Burgers => ExampleId::Burgers,
            BenchExample::Darcy | BenchExample::DarcyPi => ExampleId::Darcy,
        }
    }
}

impl fmt::Display for BenchExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchExample {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| BenchError::ConfigInvalid(format!("unknown example `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

impl FromStr for Scale {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(BenchError::ConfigInvalid(format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub example: BenchExample,
    /// Sensors per realization. Fixed at 101 for Burgers and 200 for Darcy;
    /// for diffusion-reaction it is also the solver grid size.
    pub m: usize,
    pub k: usize,
    pub p: usize,
    pub r_b: f64,
    pub r_t: f64,
    pub sample_budget: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Master seed; data, model and row sampling use derived streams.
    pub seed: u64,
    pub hard_constraint: bool,
    pub hypercube_bias: bool,
    pub boundary_weight: f64,
    pub rel_tol: f64,
    pub ridge: f64,
    pub solver: SolverKind,
    /// Darcy solver and evaluation grid nodes per axis.
    pub darcy_grid_n: usize,
    pub burgers_nx: usize,
    pub burgers_steps: usize,
    /// Load `train/` and `test/` datasets from here instead of generating.
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Full-size settings of the published experiments.
    pub fn paper(example: BenchExample) -> Self {
        let base = Self {
            example,
            m: 100,
            k: 120,
            p: 100,
            r_b: 0.003,
            r_t: 8.0,
            sample_budget: 40_000,
            n_train: 10_000,
            n_test: 1_000,
            seed: 2024,
            hard_constraint: true,
            hypercube_bias: true,
            boundary_weight: 1.0,
            rel_tol: crate::linalg::DEFAULT_REL_TOL,
            ridge: 0.0,
            solver: SolverKind::NormalEquations,
            darcy_grid_n: crate::datagen::darcy::DEFAULT_GRID_N,
            burgers_nx: 256,
            burgers_steps: 1000,
            data_dir: None,
            out_dir: None,
        };
        match example {
            BenchExample::Dr => base,
            BenchExample::Burgers => Self {
                m: 101,
                k: 200,
                p: 120,
                r_b: 0.5,
                r_t: 2.0,
                sample_budget: 86_432,
                n_train: 1_000,
                n_test: 100,
                hard_constraint: false,
                ..base
            },
            BenchExample::Darcy => Self {
                m: 200,
                k: 200,
                p: 60,
                r_b: 0.05,
                r_t: 1.0,
                sample_budget: 150_000,
                n_train: 2_700,
                n_test: 300,
                ..base
            },
            BenchExample::DarcyPi => Self {
                m: 200,
                k: 150,
                p: 60,
                r_b: 0.05,
                r_t: 2.0,
                sample_budget: 120_000,
                n_train: 2_700,
                n_test: 300,
                ..base
            },
        }
    }

    /// Reduced settings that finish in minutes on one core.
    pub fn desk(example: BenchExample) -> Self {
        let paper = Self::paper(example);
        let base = Self {
            solver: SolverKind::Svd,
            ..paper
        };
        match example {
            // r_t = 8 is too steep for 50 trunk neurons and 10⁴ rows
            BenchExample::Dr => Self {
                k: 60,
                p: 50,
                r_t: 3.0,
                sample_budget: 10_000,
                n_train: 1_000,
                n_test: 100,
                ..base
            },
            BenchExample::Burgers => Self {
                k: 80,
                p: 60,
                sample_budget: 20_000,
                n_train: 200,
                n_test: 50,
                ..base
            },
            BenchExample::Darcy | BenchExample::DarcyPi => Self {
                k: 100,
                p: 40,
                sample_budget: 20_000,
                n_train: 300,
                n_test: 60,
                ..base
            },
        }
    }

    pub fn preset(example: BenchExample, scale: Scale) -> Self {
        match scale {
            Scale::Paper => Self::paper(example),
            Scale::Desk => Self::desk(example),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::ConfigInvalid(msg));
        if self.k == 0 || self.p == 0 {
            return bad("k and p must be at least 1".into());
        }
        if self.sample_budget == 0 || self.n_train == 0 || self.n_test == 0 {
            return bad("budget and dataset sizes must be positive".into());
        }
        if !(self.r_b > 0.0 && self.r_t > 0.0) {
            return bad("weight ranges must be positive".into());
        }
        if !(self.boundary_weight > 0.0) || !(self.rel_tol > 0.0 && self.rel_tol < 1.0) || !(self.ridge >= 0.0) {
            return bad("boundary_weight must be positive, rel_tol in (0, 1) and ridge non-negative".into());
        }
        let fixed_m = match self.example {
            BenchExample::Dr => None,
            BenchExample::Burgers => Some(crate::datagen::burgers::OUTPUT_NODES),
            BenchExample::Darcy | BenchExample::DarcyPi => {
                Some(2 * crate::datagen::build::DARCY_BOUNDARY_POINTS)
            }
        };
        match fixed_m {
            Some(m) if m != self.m => bad(format!("{} needs m = {m}", self.example)),
            None if self.m < 16 => bad("m must be at least 16".into()),
            _ => Ok(()),
        }
    }

    pub fn data_seed(&self, layout: Layout) -> u64 {
        rng::derive_seed(self.seed, "data", layout as u64)
    }

    pub fn model_seed(&self) -> u64 {
        rng::derive_seed(self.seed, "model", 0)
    }

    pub fn sample_seed(&self) -> u64 {
        rng::derive_seed(self.seed, "rows", 0)
    }

    pub fn dataset_spec(&self, layout: Layout) -> DatasetSpec {
        let n = match layout {
            Layout::Train => self.n_train,
            Layout::Test => self.n_test,
        };
        let mut spec = DatasetSpec::new(self.example.dataset_example(), n, self.data_seed(layout), layout);
        spec.dr_grid = self.m;
        spec.darcy_grid_n = self.darcy_grid_n;
        spec.burgers_nx = self.burgers_nx;
        spec.burgers_steps = self.burgers_steps;
        spec
    }

    /// Flat `key = value` text accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut out = vec![
            ("example", self.example.to_string()),
            ("m", self.m.to_string()),
            ("k", self.k.to_string()),
            ("p", self.p.to_string()),
            ("r_b", format!("{:?}", self.r_b)),
            ("r_t", format!("{:?}", self.r_t)),
            ("sample_budget", self.sample_budget.to_string()),
            ("n_train", self.n_train.to_string()),
            ("n_test", self.n_test.to_string()),
            ("seed", self.seed.to_string()),
            ("hard_constraint", self.hard_constraint.to_string()),
            ("hypercube_bias", self.hypercube_bias.to_string()),
            ("boundary_weight", format!("{:?}", self.boundary_weight)),
            ("rel_tol", format!("{:?}", self.rel_tol)),
            ("ridge", format!("{:?}", self.ridge)),
            (
                "solver",
                match self.solver {
                    SolverKind::Svd => "svd",
                    SolverKind::NormalEquations => "normal",
                }
                .to_string(),
            ),
            ("darcy_grid_n", self.darcy_grid_n.to_string()),
            ("burgers_nx", self.burgers_nx.to_string()),
            ("burgers_steps", self.burgers_steps.to_string()),
        ];
        if let Some(p) = path(&self.data_dir) {
            out.push(("data_dir", p));
        }
        if let Some(p) = path(&self.out_dir) {
            out.push(("out_dir", p));
        }
        out
    }

    /// Parses `key = value` lines. `example` is required; other keys
    /// override the full-size preset of that example. Blank lines and `#`
    /// comments are ignored; unknown or repeated keys are rejected.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::ConfigInvalid(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if pairs.iter().any(|(seen, _)| *seen == k) {
                return Err(BenchError::ConfigInvalid(format!("key `{k}` given twice")));
            }
            pairs.push((k, v));
        }
        let example: BenchExample = pairs
            .iter()
            .find(|(k, _)| *k == "example")
            .ok_or_else(|| BenchError::ConfigInvalid("missing key `example`".into()))?
            .1
            .parse()?;
        let mut c = Self::paper(example);
        for (k, v) in pairs {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, BenchError> {
            v.parse()
                .map_err(|_| BenchError::ConfigInvalid(format!("bad value `{v}` for `{key}`")))
        }
        match key {
            "example" => self.example = value.parse()?,
            "m" => self.m = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "r_b" => self.r_b = num(key, value)?,
            "r_t" => self.r_t = num(key, value)?,
            "sample_budget" => self.sample_budget = num(key, value)?,
            "n_train" => self.n_train = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "hard_constraint" => self.hard_constraint = num(key, value)?,
            "hypercube_bias" => self.hypercube_bias = num(key, value)?,
            "boundary_weight" => self.boundary_weight = num(key, value)?,
            "rel_tol" => self.rel_tol = num(key, value)?,
            "ridge" => self.ridge = num(key, value)?,
            "solver" => {
                self.solver = match value {
                    "svd" => SolverKind::Svd,
                    "normal" => SolverKind::NormalEquations,
                    other => return Err(BenchError::ConfigInvalid(format!("unknown solver `{other}`"))),
                }
            }
            "darcy_grid_n" => self.darcy_grid_n = num(key, value)?,
            "burgers_nx" => self.burgers_nx = num(key, value)?,
            "burgers_steps" => self.burgers_steps = num(key, value)?,
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            other => return Err(BenchError::ConfigInvalid(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}
