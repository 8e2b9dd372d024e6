//! In-memory dataset: input realizations, collocation points and reference
//! values.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::DomainSpec;
use crate::model::ModelInput;

use super::DatagenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleId {
    /// `u_t − D u_xx − κ u² = f(x)` on `[0, 1]²` with zero initial and
    /// boundary values.
    DiffusionReaction,
    /// Periodic viscous Burgers on `[0, 1]` up to `t = 1`.
    Burgers,
    /// `−Δu = 1` with homogeneous Dirichlet data on random domains.
    Darcy,
}

impl ExampleId {
    pub fn name(self) -> &'static str {
        match self {
            ExampleId::DiffusionReaction => "dr",
            ExampleId::Burgers => "burgers",
            ExampleId::Darcy => "darcy",
        }
    }

    /// Raw trunk coordinates: `(x, t)` or `(x, y)`.
    pub fn coord_dim(self) -> usize {
        2
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = DatagenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dr" => Ok(ExampleId::DiffusionReaction),
            "burgers" => Ok(ExampleId::Burgers),
            "darcy" => Ok(ExampleId::Darcy),
            other => Err(DatagenError::UnknownExample(other.to_string())),
        }
    }
}

/// Role of a collocation point; stored as `mask.u8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum PointKind {
    /// Outside the realization's domain; carries `u = 0`.
    Outside = 0,
    Interior = 1,
    Boundary = 2,
    Initial = 3,
}

impl PointKind {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PointKind::Outside),
            1 => Some(PointKind::Interior),
            2 => Some(PointKind::Boundary),
            3 => Some(PointKind::Initial),
            _ => None,
        }
    }
}

/// `N` realizations sharing `m` sensors, each with `q` collocation points.
///
/// Arrays are flat and row-major: `inputs` is `N × m`, `colloc` is
/// `N × q × d`, `solution` and `kinds` are `N × q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub example: ExampleId,
    /// Sensor locations, `m × sensor_dim`.
    pub sensors: Vec<f64>,
    pub sensor_dim: usize,
    pub m: usize,
    pub inputs: Vec<f64>,
    pub q: usize,
    pub d: usize,
    pub colloc: Vec<f64>,
    pub solution: Option<Vec<f64>>,
    pub kinds: Vec<u8>,
    pub domains: Option<Vec<DomainSpec>>,
    /// Free-form generation parameters, persisted in the manifest.
    pub meta: BTreeMap<String, String>,
}

impl Dataset {
    /// Checks array lengths, finiteness and point codes.
    pub fn validate(&self) -> Result<(), DatagenError> {
        let n = self.len();
        let bad = |what: &str| Err(DatagenError::Inconsistent(what.to_string()));
        if self.m == 0 || self.q == 0 || self.d == 0 || self.sensor_dim == 0 {
            return bad("empty dimension");
        }
        if self.inputs.len() != n * self.m || self.sensors.len() != self.m * self.sensor_dim {
            return bad("input or sensor array length");
        }
        if self.colloc.len() != n * self.q * self.d || self.kinds.len() != n * self.q {
            return bad("collocation array length");
        }
        if let Some(u) = &self.solution {
            if u.len() != n * self.q {
                return bad("solution array length");
            }
            if !u.iter().all(|v| v.is_finite()) {
                return bad("non-finite solution value");
            }
        }
        if let Some(d) = &self.domains {
            if d.len() != n {
                return bad("domain count");
            }
        }
        if !self.inputs.iter().chain(&self.colloc).chain(&self.sensors).all(|v| v.is_finite()) {
            return bad("non-finite input or coordinate");
        }
        if self.kinds.iter().any(|&k| PointKind::from_code(k).is_none()) {
            return bad("unknown point kind");
        }
        Ok(())
    }

    /// Number of realizations `N`.
    pub fn len(&self) -> usize {
        if self.m == 0 {
            0
        } else {
            self.inputs.len() / self.m
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input(&self, n: usize) -> &[f64] {
        &self.inputs[n * self.m..(n + 1) * self.m]
    }

    pub fn domain(&self, n: usize) -> Option<&DomainSpec> {
        self.domains.as_ref().map(|d| &d[n])
    }

    pub fn model_input(&self, n: usize) -> ModelInput<'_> {
        ModelInput::new(self.input(n)).with_domain(self.domain(n))
    }

    /// Collocation points of realization `n`, `q × d`.
    pub fn points(&self, n: usize) -> &[f64] {
        let s = self.q * self.d;
        &self.colloc[n * s..(n + 1) * s]
    }

    pub fn point(&self, n: usize, j: usize) -> &[f64] {
        let o = (n * self.q + j) * self.d;
        &self.colloc[o..o + self.d]
    }

    pub fn kind(&self, n: usize, j: usize) -> PointKind {
        PointKind::from_code(self.kinds[n * self.q + j]).expect("validated point kind")
    }

    pub fn value(&self, n: usize, j: usize) -> Option<f64> {
        self.solution.as_ref().map(|u| u[n * self.q + j])
    }

    /// Reference values of realization `n`, if present.
    pub fn values(&self, n: usize) -> Option<&[f64]> {
        self.solution
            .as_ref()
            .map(|u| &u[n * self.q..(n + 1) * self.q])
    }

    /// Realizations `range` as a new dataset.
    pub fn subset(&self, range: std::ops::Range<usize>) -> Dataset {
        let (a, b) = (range.start, range.end);
        Dataset {
            example: self.example,
            sensors: self.sensors.clone(),
            sensor_dim: self.sensor_dim,
            m: self.m,
            inputs: self.inputs[a * self.m..b * self.m].to_vec(),
            q: self.q,
            d: self.d,
            colloc: self.colloc[a * self.q * self.d..b * self.q * self.d].to_vec(),
            solution: self
                .solution
                .as_ref()
                .map(|u| u[a * self.q..b * self.q].to_vec()),
            kinds: self.kinds[a * self.q..b * self.q].to_vec(),
            domains: self.domains.as_ref().map(|d| d[a..b].to_vec()),
            meta: self.meta.clone(),
        }
    }

    /// Componentwise `(min, max)` of the branch inputs over all
    /// realizations.
    pub fn input_range(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.m];
        let mut hi = vec![f64::NEG_INFINITY; self.m];
        for n in 0..self.len() {
            for (i, &v) in self.input(n).iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        (lo, hi)
    }
}
