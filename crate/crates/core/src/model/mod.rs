//! The operator model `G(f)(y) = Σᵢ Σⱼ αᵢⱼ hⱼ(f) tᵢ(y)`.
//!
//! `h = σ(W_b f + b_b)` are the `k` branch features of the sampled input
//! function, `t = σ(W_t y + b_t)` the `p` trunk features of the query
//! coordinate. Only `α` is trained. An optional [`ConstraintWrapper`] turns
//! the bilinear form `G̃` into `c·G̃ + g`, and an optional
//! [`PeriodicEmbedding`] expands periodic coordinates before the trunk layer.

mod constraint;
mod embedding;

pub use constraint::{ConstraintWrapper, DistanceField, FieldFn, LiftField, ScalarField};
pub use embedding::{periodic_embed, PeriodicEmbedding};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Activation, BiasStrategy, FeatureError, FeatureJets, Hypercube, RandomLayer};
use crate::geometry::{DomainSpec, GeometryError};
use crate::rng;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model has no trained coefficients")]
    Untrained,
    #[error("coefficients must be finite")]
    NonFiniteCoefficients,
    #[error("constraint needs the realization's domain")]
    MissingDomain,
    #[error("invalid periodic embedding: {0}")]
    InvalidEmbedding(String),
    #[error("derivative order {0} is not supported")]
    UnsupportedOrder(usize),
}

/// Coefficient matrix `α` of shape `p × k`, row-major by trunk index: entry
/// `(i, j)` sits at `i·k + j`. This is also the layout of the least-squares
/// unknown vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    p: usize,
    k: usize,
    data: Vec<f64>,
}

impl Coefficients {
    pub fn new(p: usize, k: usize, data: Vec<f64>) -> Result<Self, ModelError> {
        if data.len() != p * k {
            return Err(ModelError::DimensionMismatch {
                expected: p * k,
                got: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NonFiniteCoefficients);
        }
        Ok(Self { p, k, data })
    }

    pub fn zeros(p: usize, k: usize) -> Self {
        Self {
            p,
            k,
            data: vec![0.0; p * k],
        }
    }

    pub fn trunk_width(&self) -> usize {
        self.p
    }

    pub fn branch_width(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.data)
    }
}

/// Branch input of one realization: sensor values, plus the domain for
/// geometry-dependent constraints.
#[derive(Debug, Clone, Copy)]
pub struct ModelInput<'a> {
    pub values: &'a [f64],
    pub domain: Option<&'a DomainSpec>,
}

impl<'a> ModelInput<'a> {
    pub fn new(values: &'a [f64]) -> Self {
        Self {
            values,
            domain: None,
        }
    }

    pub fn with_domain(mut self, domain: Option<&'a DomainSpec>) -> Self {
        self.domain = domain;
        self
    }
}

/// Shape and sampling parameters of a randomly initialized model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// `m`
    pub sensors: usize,
    /// `k`
    pub branch_width: usize,
    /// `p`
    pub trunk_width: usize,
    /// Raw trunk coordinate dimension `d`.
    pub coord_dim: usize,
    /// Branch weights are drawn from `U(−r_b, r_b)`.
    pub branch_range: f64,
    /// Trunk weights are drawn from `U(−r_t, r_t)`.
    pub trunk_range: f64,
    /// Hypercube bias initialization for both layers; otherwise biases are
    /// drawn like the weights.
    pub hypercube_bias: bool,
    pub embedding: Option<PeriodicEmbedding>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RannDeepONet {
    branch: RandomLayer,
    trunk: RandomLayer,
    coord_dim: usize,
    embedding: Option<PeriodicEmbedding>,
    constraint: ConstraintWrapper,
    alpha: Option<Coefficients>,
}

impl RannDeepONet {
    pub fn new(
        branch: RandomLayer,
        trunk: RandomLayer,
        coord_dim: usize,
        embedding: Option<PeriodicEmbedding>,
        constraint: ConstraintWrapper,
    ) -> Result<Self, ModelError> {
        let trunk_in = match &embedding {
            Some(e) => {
                e.embed(&vec![0.0; coord_dim])?;
                e.output_dim(coord_dim)
            }
            None => coord_dim,
        };
        if trunk.in_dim() != trunk_in {
            return Err(ModelError::DimensionMismatch {
                expected: trunk_in,
                got: trunk.in_dim(),
            });
        }
        Ok(Self {
            branch,
            trunk,
            coord_dim,
            embedding,
            constraint,
            alpha: None,
        })
    }

    /// Samples both tanh layers. `sensor_box` bounds the branch inputs and
    /// `coord_box` the raw trunk coordinates; the trunk hypercube is the
    /// image of `coord_box` under the embedding (`[−1, 1]` per Fourier
    /// component).
    pub fn random(
        arch: &Architecture,
        sensor_box: &Hypercube,
        coord_box: &Hypercube,
        constraint: ConstraintWrapper,
    ) -> Result<Self, ModelError> {
        let check = |expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(ModelError::DimensionMismatch { expected, got })
            }
        };
        check(arch.sensors, sensor_box.dim())?;
        check(arch.coord_dim, coord_box.dim())?;
        let trunk_box = match &arch.embedding {
            None => coord_box.clone(),
            Some(e) => {
                let n_fourier = 2 * e.harmonics * e.periodic_dims.len();
                let mut lo = vec![-1.0; n_fourier];
                let mut hi = vec![1.0; n_fourier];
                for d in 0..arch.coord_dim {
                    if !e.periodic_dims.contains(&d) {
                        lo.push(coord_box.lower()[d]);
                        hi.push(coord_box.upper()[d]);
                    }
                }
                Hypercube::new(lo, hi)?
            }
        };
        let strategy = |cube: Hypercube| {
            if arch.hypercube_bias {
                BiasStrategy::Hypercube(cube)
            } else {
                BiasStrategy::Uniform
            }
        };
        let branch = RandomLayer::random(
            arch.branch_width,
            arch.sensors,
            arch.branch_range,
            &strategy(sensor_box.clone()),
            Activation::Tanh,
            rng::derive_seed(arch.seed, "branch", 0),
        )?;
        let trunk_in = trunk_box.dim();
        let trunk = RandomLayer::random(
            arch.trunk_width,
            trunk_in,
            arch.trunk_range,
            &strategy(trunk_box),
            Activation::Tanh,
            rng::derive_seed(arch.seed, "trunk", 0),
        )?;
        Self::new(branch, trunk, arch.coord_dim, arch.embedding.clone(), constraint)
    }

    /// `m`
    pub fn sensor_count(&self) -> usize {
        self.branch.in_dim()
    }

    /// `k`
    pub fn branch_width(&self) -> usize {
        self.branch.width()
    }

    /// `p`
    pub fn trunk_width(&self) -> usize {
        self.trunk.width()
    }

    /// `p·k`, the number of unknowns.
    pub fn coefficient_count(&self) -> usize {
        self.trunk_width() * self.branch_width()
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn branch(&self) -> &RandomLayer {
        &self.branch
    }

    pub fn trunk(&self) -> &RandomLayer {
        &self.trunk
    }

    pub fn embedding(&self) -> Option<&PeriodicEmbedding> {
        self.embedding.as_ref()
    }

    pub fn constraint(&self) -> &ConstraintWrapper {
        &self.constraint
    }

    pub fn set_constraint(&mut self, constraint: ConstraintWrapper) {
        self.constraint = constraint;
    }

    pub fn alpha(&self) -> Option<&Coefficients> {
        self.alpha.as_ref()
    }

    pub fn set_alpha(&mut self, alpha: Coefficients) -> Result<(), ModelError> {
        if alpha.trunk_width() != self.trunk_width() || alpha.branch_width() != self.branch_width() {
            return Err(ModelError::DimensionMismatch {
                expected: self.coefficient_count(),
                got: alpha.as_slice().len(),
            });
        }
        self.alpha = Some(alpha);
        Ok(())
    }

    /// Installs `α` from the least-squares unknown vector.
    pub fn set_alpha_flat(&mut self, data: Vec<f64>) -> Result<(), ModelError> {
        let alpha = Coefficients::new(self.trunk_width(), self.branch_width(), data)?;
        self.set_alpha(alpha)
    }

    pub fn clear_alpha(&mut self) {
        self.alpha = None;
    }

    /// Hidden branch features `h(f)`, before any coefficient is applied.
    pub fn branch_features(&self, sensors: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(self.branch.eval(sensors)?)
    }

    fn check_coord(&self, y: &[f64]) -> Result<(), ModelError> {
        if y.len() != self.coord_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.coord_dim,
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Trunk basis `t(y)` at a raw coordinate.
    pub fn trunk_features(&self, y: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_coord(y)?;
        match &self.embedding {
            None => Ok(self.trunk.eval(y)?),
            Some(e) => Ok(self.trunk.eval(&e.embed(y)?)?),
        }
    }

    /// Trunk basis with gradients and Hessians with respect to the raw
    /// coordinates, differentiating through the embedding.
    pub fn trunk_features_derivatives(&self, y: &[f64], order: usize) -> Result<FeatureJets, ModelError> {
        if !(1..=2).contains(&order) {
            return Err(ModelError::UnsupportedOrder(order));
        }
        self.check_coord(y)?;
        let Some(emb) = &self.embedding else {
            return Ok(self.trunk.eval_derivatives(y, order)?);
        };
        let coords = emb.embed_coords(y)?;
        let d = self.coord_dim;
        let mut jets = FeatureJets::zeros(self.trunk_width(), d, order);
        let mut dz = vec![0.0; d];
        let mut d2z = vec![0.0; d];
        for n in 0..self.trunk_width() {
            let w = self.trunk.weight_row(n);
            dz.fill(0.0);
            d2z.fill(0.0);
            let mut z = self.trunk.biases()[n];
            for (we, c) in w.iter().zip(&coords) {
                z += we * c.value;
                dz[c.source] += we * c.d1;
                d2z[c.source] += we * c.d2;
            }
            let (h, s1, s2) = self.trunk.activation().eval3(z);
            jets.values[n] = h;
            for a in 0..d {
                jets.grads[n * d + a] = s1 * dz[a];
            }
            if order == 2 {
                for a in 0..d {
                    for b in 0..d {
                        let mut v = s2 * dz[a] * dz[b];
                        if a == b {
                            v += s1 * d2z[a];
                        }
                        jets.hessians[(n * d + a) * d + b] = v;
                    }
                }
            }
        }
        Ok(jets)
    }

    /// `v = α h`, so that `G̃(f)(y) = t(y)·v`.
    pub fn branch_projection(&self, h: &[f64]) -> Result<Vec<f64>, ModelError> {
        let alpha = self.alpha.as_ref().ok_or(ModelError::Untrained)?;
        if h.len() != alpha.k {
            return Err(ModelError::DimensionMismatch {
                expected: alpha.k,
                got: h.len(),
            });
        }
        Ok(alpha
            .data
            .chunks_exact(alpha.k)
            .map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn evaluate_projected(&self, input: &ModelInput<'_>, v: &[f64], y: &[f64]) -> Result<f64, ModelError> {
        let t = self.trunk_features(y)?;
        let core: f64 = t.iter().zip(v).map(|(a, b)| a * b).sum();
        match &self.constraint {
            ConstraintWrapper::None => Ok(core),
            wrapper => {
                let c = wrapper.c_value(y, input.domain)?;
                Ok(c * core + wrapper.g_value(y))
            }
        }
    }

    /// `G(f)(y)`, including the constraint wrapper.
    pub fn evaluate(&self, input: ModelInput<'_>, y: &[f64]) -> Result<f64, ModelError> {
        let h = self.branch_features(input.values)?;
        let v = self.branch_projection(&h)?;
        self.evaluate_projected(&input, &v, y)
    }

    /// [`RannDeepONet::evaluate`] at each point of a flat row-major list of
    /// coordinates.
    pub fn evaluate_batch(&self, input: ModelInput<'_>, points: &[f64]) -> Result<Vec<f64>, ModelError> {
        if points.len() % self.coord_dim != 0 {
            return Err(ModelError::DimensionMismatch {
                expected: self.coord_dim,
                got: points.len() % self.coord_dim,
            });
        }
        let h = self.branch_features(input.values)?;
        let v = self.branch_projection(&h)?;
        points
            .chunks_exact(self.coord_dim)
            .map(|y| self.evaluate_projected(&input, &v, y))
            .collect()
    }
}
