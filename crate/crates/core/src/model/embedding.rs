//! Fourier expansion of periodic trunk coordinates.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Replaces each periodic coordinate `x` by
/// `cos(ωx), sin(ωx), …, cos(Hωx), sin(Hωx)`.
///
/// The embedded vector lists the expansions of the periodic coordinates in
/// the order given by `periodic_dims`, followed by the remaining coordinates
/// in their original order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicEmbedding {
    pub omega: f64,
    pub harmonics: usize,
    pub periodic_dims: Vec<usize>,
}

/// One embedded coordinate: depends on a single raw coordinate `source`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EmbeddedCoord {
    pub source: usize,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl PeriodicEmbedding {
    pub fn new(omega: f64, harmonics: usize, periodic_dims: Vec<usize>) -> Result<Self, ModelError> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(ModelError::InvalidEmbedding(format!("omega must be positive, got {omega}")));
        }
        if harmonics == 0 {
            return Err(ModelError::InvalidEmbedding("at least one harmonic is required".into()));
        }
        let mut sorted = periodic_dims.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != periodic_dims.len() {
            return Err(ModelError::InvalidEmbedding("repeated periodic dimension".into()));
        }
        Ok(Self {
            omega,
            harmonics,
            periodic_dims,
        })
    }

    /// Period `2π/ω` in x.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub fn output_dim(&self, raw_dim: usize) -> usize {
        raw_dim + self.periodic_dims.len() * (2 * self.harmonics - 1)
    }

    fn check(&self, raw_dim: usize) -> Result<(), ModelError> {
        match self.periodic_dims.iter().find(|&&d| d >= raw_dim) {
            Some(&d) => Err(ModelError::InvalidEmbedding(format!(
                "periodic dimension {d} out of range for {raw_dim} coordinates"
            ))),
            None => Ok(()),
        }
    }

    pub fn embed(&self, y: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(self.embed_coords(y)?.into_iter().map(|c| c.value).collect())
    }

    pub(crate) fn embed_coords(&self, y: &[f64]) -> Result<Vec<EmbeddedCoord>, ModelError> {
        self.check(y.len())?;
        let mut out = Vec::with_capacity(self.output_dim(y.len()));
        let period = self.period();
        for &d in &self.periodic_dims {
            // reduced first so that x and x + period embed bit-identically
            let x = y[d].rem_euclid(period);
            for h in 1..=self.harmonics {
                let f = h as f64 * self.omega;
                let (s, c) = (f * x).sin_cos();
                out.push(EmbeddedCoord {
                    source: d,
                    value: c,
                    d1: -f * s,
                    d2: -f * f * c,
                });
                out.push(EmbeddedCoord {
                    source: d,
                    value: s,
                    d1: f * c,
                    d2: -f * f * s,
                });
            }
        }
        for (d, &v) in y.iter().enumerate() {
            if !self.periodic_dims.contains(&d) {
                out.push(EmbeddedCoord {
                    source: d,
                    value: v,
                    d1: 1.0,
                    d2: 0.0,
                });
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`PeriodicEmbedding::embed`] with every coordinate
/// in `periodic_dims` expanded.
pub fn periodic_embed(
    y: &[f64],
    omega: f64,
    harmonics: usize,
    periodic_dims: &[usize],
) -> Result<Vec<f64>, ModelError> {
    PeriodicEmbedding::new(omega, harmonics, periodic_dims.to_vec())?.embed(y)
}
