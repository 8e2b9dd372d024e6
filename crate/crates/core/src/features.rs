//! Fixed random hidden layers.
//!
//! A [`RandomLayer`] is the map `x ↦ σ(Wx + b)` with `W` and `b` drawn once
//! and frozen. Weights are i.i.d. `U(−r, r)`. Biases follow the hypercube
//! strategy: an anchor point `B[n,·]` is drawn uniformly from the bounding box
//! of the inputs and `b[n] = −W[n,·]·B[n,·]`, so the partition hyperplane
//! `W[n,·]x + b[n] = 0` of every neuron passes through the box.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("weight range must be positive, got {0}")]
    NonPositiveRange(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("layer must have width >= 1 and input dimension >= 1")]
    EmptyLayer,
    #[error("non-finite layer parameter")]
    NonFinite,
    #[error("hypercube side {dim} is empty: [{lower}, {upper}]")]
    EmptyCube { dim: usize, lower: f64, upper: f64 },
    #[error("derivative order {0} is not supported")]
    UnsupportedOrder(usize),
    #[error("hyperplane {0} has a zero normal")]
    ZeroWeightRow(usize),
    #[error("tau must be positive, got {0}")]
    NonPositiveTau(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    /// σ, σ′, σ″ at `z`.
    #[inline]
    pub fn eval3(self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let h = z.tanh();
                let d1 = 1.0 - h * h;
                (h, d1, -2.0 * h * d1)
            }
            Activation::Identity => (z, 1.0, 0.0),
        }
    }

    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }
}

/// Axis-aligned box `[lower₁, upper₁] × ⋯ × [lower_d, upper_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypercube {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Hypercube {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, FeatureError> {
        if lower.len() != upper.len() {
            return Err(FeatureError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(FeatureError::EmptyCube {
                    dim,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, FeatureError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// Smallest box containing `points` (row-major, `dim` columns). Sides of
    /// zero width are widened by `pad` on both ends.
    pub fn bounding(points: &[f64], dim: usize, pad: f64) -> Result<Self, FeatureError> {
        if dim == 0 || points.is_empty() || points.len() % dim != 0 {
            return Err(FeatureError::DimensionMismatch {
                expected: dim,
                got: points.len(),
            });
        }
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for row in points.chunks_exact(dim) {
            for d in 0..dim {
                lower[d] = lower[d].min(row[d]);
                upper[d] = upper[d].max(row[d]);
            }
        }
        for d in 0..dim {
            if !(lower[d] < upper[d]) {
                lower[d] -= pad;
                upper[d] += pad;
            }
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// Row-major `width × in_dim` matrix with entries i.i.d. on `(−r, r)`.
pub fn init_uniform_weights(
    width: usize,
    in_dim: usize,
    r: f64,
    rng_seed: u64,
) -> Result<Vec<f64>, FeatureError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(FeatureError::NonPositiveRange(r));
    }
    let mut g = rng::rng_from_seed(rng_seed);
    Ok((0..width * in_dim)
        .map(|_| loop {
            let v = g.random_range(-r..r);
            if v != -r {
                break v;
            }
        })
        .collect())
}

/// Biases drawn by the hypercube strategy together with their anchor points.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasInit {
    pub biases: Vec<f64>,
    /// Row-major `width × in_dim`; row `n` lies on hyperplane `n`.
    pub anchors: Vec<f64>,
}

/// Draws anchors `B[n,d] ~ U(lower[d], upper[d])` and returns
/// `b[n] = −Σ_d W[n,d]·B[n,d]`.
pub fn init_bias_hypercube(
    weights: &[f64],
    width: usize,
    cube: &Hypercube,
    rng_seed: u64,
) -> Result<BiasInit, FeatureError> {
    let in_dim = cube.dim();
    if weights.len() != width * in_dim {
        return Err(FeatureError::DimensionMismatch {
            expected: width * in_dim,
            got: weights.len(),
        });
    }
    let mut g = rng::rng_from_seed(rng_seed);
    let mut anchors = Vec::with_capacity(width * in_dim);
    for _ in 0..width {
        for d in 0..in_dim {
            anchors.push(g.random_range(cube.lower[d]..cube.upper[d]));
        }
    }
    Ok(bias_from_anchors(weights, &anchors, in_dim))
}

/// `b[n] = −Σ_d W[n,d]·B[n,d]` for given anchors.
pub fn bias_from_anchors(weights: &[f64], anchors: &[f64], in_dim: usize) -> BiasInit {
    let biases = weights
        .chunks_exact(in_dim)
        .zip(anchors.chunks_exact(in_dim))
        .map(|(w, a)| -w.iter().zip(a).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    BiasInit {
        biases,
        anchors: anchors.to_vec(),
    }
}

/// How the hidden biases of a layer are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasStrategy {
    /// Anchors uniform in the given box.
    Hypercube(Hypercube),
    /// `b ~ U(−r, r)` with the weight range `r`.
    Uniform,
}

/// Frozen layer `x ↦ σ(Wx + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomLayer {
    in_dim: usize,
    width: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
    anchors: Option<Vec<f64>>,
    seed: Option<u64>,
}

impl RandomLayer {
    pub fn new(
        weights: Vec<f64>,
        biases: Vec<f64>,
        in_dim: usize,
        activation: Activation,
    ) -> Result<Self, FeatureError> {
        let width = biases.len();
        if width == 0 || in_dim == 0 {
            return Err(FeatureError::EmptyLayer);
        }
        if weights.len() != width * in_dim {
            return Err(FeatureError::DimensionMismatch {
                expected: width * in_dim,
                got: weights.len(),
            });
        }
        if !weights.iter().chain(&biases).all(|v| v.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        Ok(Self {
            in_dim,
            width,
            weights,
            biases,
            activation,
            anchors: None,
            seed: None,
        })
    }

    /// Samples a layer from `seed`: weights from the stream `"weights"` and
    /// biases (or anchors) from the stream `"biases"`.
    pub fn random(
        width: usize,
        in_dim: usize,
        r: f64,
        bias: &BiasStrategy,
        activation: Activation,
        seed: u64,
    ) -> Result<Self, FeatureError> {
        if width == 0 || in_dim == 0 {
            return Err(FeatureError::EmptyLayer);
        }
        let weights = init_uniform_weights(width, in_dim, r, rng::derive_seed(seed, "weights", 0))?;
        let bias_seed = rng::derive_seed(seed, "biases", 0);
        let (biases, anchors) = match bias {
            BiasStrategy::Hypercube(cube) => {
                if cube.dim() != in_dim {
                    return Err(FeatureError::DimensionMismatch {
                        expected: in_dim,
                        got: cube.dim(),
                    });
                }
                let init = init_bias_hypercube(&weights, width, cube, bias_seed)?;
                (init.biases, Some(init.anchors))
            }
            BiasStrategy::Uniform => (init_uniform_weights(width, 1, r, bias_seed)?, None),
        };
        let mut layer = Self::new(weights, biases, in_dim, activation)?;
        layer.anchors = anchors;
        layer.seed = Some(seed);
        Ok(layer)
    }

    pub(crate) fn with_metadata(mut self, anchors: Option<Vec<f64>>, seed: Option<u64>) -> Self {
        self.anchors = anchors;
        self.seed = seed;
        self
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_row(&self, n: usize) -> &[f64] {
        &self.weights[n * self.in_dim..(n + 1) * self.in_dim]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Anchor points of a hypercube-initialized layer.
    pub fn anchors(&self) -> Option<&[f64]> {
        self.anchors.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    fn check_input(&self, x: &[f64]) -> Result<(), FeatureError> {
        if x.len() != self.in_dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.in_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Pre-activation `Wx + b`.
    pub fn preactivation(&self, x: &[f64]) -> Result<Vec<f64>, FeatureError> {
        self.check_input(x)?;
        Ok(self
            .weights
            .chunks_exact(self.in_dim)
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b)
            .collect())
    }

    /// `σ(Wx + b)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let mut out = vec![0.0; self.width];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), FeatureError> {
        self.check_input(x)?;
        assert_eq!(out.len(), self.width);
        for ((o, w), b) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.in_dim))
            .zip(&self.biases)
        {
            let z = w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b;
            *o = self.activation.eval(z);
        }
        Ok(())
    }

    /// Values, input gradients and (for `order == 2`) Hessians of every neuron.
    ///
    /// For `h = σ(w·x + b)`: `∂h/∂x_d = σ′·w_d` and
    /// `∂²h/∂x_d∂x_e = σ″·w_d·w_e`; with tanh, `σ′ = 1 − h²` and
    /// `σ″ = −2h(1 − h²)`.
    pub fn eval_derivatives(&self, x: &[f64], order: usize) -> Result<FeatureJets, FeatureError> {
        if !(1..=2).contains(&order) {
            return Err(FeatureError::UnsupportedOrder(order));
        }
        self.check_input(x)?;
        let d = self.in_dim;
        let mut jets = FeatureJets::zeros(self.width, d, order);
        for n in 0..self.width {
            let w = self.weight_row(n);
            let z = w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + self.biases[n];
            let (h, d1, d2) = self.activation.eval3(z);
            jets.values[n] = h;
            for a in 0..d {
                jets.grads[n * d + a] = d1 * w[a];
            }
            if order == 2 {
                for a in 0..d {
                    for b in 0..d {
                        jets.hessians[(n * d + a) * d + b] = d2 * w[a] * w[b];
                    }
                }
            }
        }
        Ok(jets)
    }

    /// `(W[n,·], b[n])` for every neuron.
    pub fn hyperplanes(&self) -> Vec<(Vec<f64>, f64)> {
        (0..self.width)
            .map(|n| (self.weight_row(n).to_vec(), self.biases[n]))
            .collect()
    }
}

/// Per-neuron values, gradients and Hessians of a layer at one point.
///
/// `grads` is `width × dim` and `hessians` is `width × dim × dim` (empty for
/// first-order jets), both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureJets {
    pub width: usize,
    pub dim: usize,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
    pub hessians: Vec<f64>,
}

impl FeatureJets {
    pub fn zeros(width: usize, dim: usize, order: usize) -> Self {
        Self {
            width,
            dim,
            values: vec![0.0; width],
            grads: vec![0.0; width * dim],
            hessians: if order >= 2 {
                vec![0.0; width * dim * dim]
            } else {
                Vec::new()
            },
        }
    }

    pub fn grad(&self, n: usize) -> &[f64] {
        &self.grads[n * self.dim..(n + 1) * self.dim]
    }

    pub fn hessian(&self, n: usize) -> &[f64] {
        let s = self.dim * self.dim;
        &self.hessians[n * s..(n + 1) * s]
    }

    pub fn jet(&self, n: usize) -> crate::jet::ScalarJet {
        crate::jet::ScalarJet {
            value: self.values[n],
            grad: self.grad(n).to_vec(),
            hess: if self.hessians.is_empty() {
                Vec::new()
            } else {
                self.hessian(n).to_vec()
            },
        }
    }
}

/// Fraction of hyperplanes within distance `tau` of each query point:
/// `D(x) = (1/M) Σᵢ 1{|Wᵢ·x + bᵢ| / ‖Wᵢ‖₂ < τ}`.
pub fn hyperplane_density(
    planes: &[(Vec<f64>, f64)],
    points: &[Vec<f64>],
    tau: f64,
) -> Result<Vec<f64>, FeatureError> {
    if !(tau > 0.0) {
        return Err(FeatureError::NonPositiveTau(tau));
    }
    let mut norms = Vec::with_capacity(planes.len());
    for (i, (w, _)) in planes.iter().enumerate() {
        let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(FeatureError::ZeroWeightRow(i));
        }
        norms.push(n);
    }
    if planes.is_empty() {
        return Ok(vec![0.0; points.len()]);
    }
    points
        .iter()
        .map(|x| {
            let mut hits = 0usize;
            for ((w, b), n) in planes.iter().zip(&norms) {
                if w.len() != x.len() {
                    return Err(FeatureError::DimensionMismatch {
                        expected: w.len(),
                        got: x.len(),
                    });
                }
                let dist = (w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b).abs() / n;
                if dist < tau {
                    hits += 1;
                }
            }
            Ok(hits as f64 / planes.len() as f64)
        })
        .collect()
}
