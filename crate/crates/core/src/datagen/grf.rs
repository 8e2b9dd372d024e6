//! Gaussian random fields on `[0, 1]`.

use std::f64::consts::PI;

use faer::linalg::solvers::Llt;
use faer::{Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::DatagenError;
use crate::rng;

/// Largest jitter tried, relative to the mean diagonal entry.
const MAX_JITTER: f64 = 1e-4;

/// Zero-mean field with covariance `exp(−|x − x'|²/(2l²))` at fixed points,
/// sampled through a Cholesky factor of the (jittered) covariance matrix.
#[derive(Debug, Clone)]
pub struct RbfGrf {
    points: Vec<f64>,
    length_scale: f64,
    factor: Mat<f64>,
    jitter: f64,
}

/// `exp(−(a − b)²/(2l²))`
pub fn rbf_kernel(a: f64, b: f64, length_scale: f64) -> f64 {
    (-(a - b).powi(2) / (2.0 * length_scale * length_scale)).exp()
}

impl RbfGrf {
    /// Factors `C + εI` with `ε = 1e-10·trace(C)/m`, growing `ε` tenfold on
    /// failure.
    pub fn new(points: &[f64], length_scale: f64) -> Result<Self, DatagenError> {
        if !(length_scale > 0.0) {
            return Err(DatagenError::InvalidParameter(format!(
                "length scale {length_scale} must be positive"
            )));
        }
        if points.is_empty() {
            return Err(DatagenError::InvalidParameter("no sample points".into()));
        }
        let m = points.len();
        let cov = Mat::from_fn(m, m, |a, b| rbf_kernel(points[a], points[b], length_scale));
        let mean_diag = (0..m).map(|i| cov[(i, i)]).sum::<f64>() / m as f64;
        let mut rel = 1e-10;
        loop {
            let jitter = rel * mean_diag;
            let shifted = Mat::from_fn(m, m, |a, b| cov[(a, b)] + if a == b { jitter } else { 0.0 });
            if let Ok(llt) = Llt::new(shifted.as_ref(), Side::Lower) {
                return Ok(Self {
                    points: points.to_vec(),
                    length_scale,
                    factor: llt.L().to_owned(),
                    jitter,
                });
            }
            rel *= 10.0;
            if rel > MAX_JITTER {
                return Err(DatagenError::FactorizationFailure(jitter));
            }
            log::debug!("covariance factorization failed, raising jitter to {:e}", rel * mean_diag);
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Diagonal shift that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// One draw `L z` with `z ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.points.len();
        let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        (0..m)
            .map(|a| (0..=a).map(|b| self.factor[(a, b)] * z[b]).sum())
            .collect()
    }
}

/// One draw of the RBF field at `sensors` from the stream seeded by
/// `rng_seed`.
pub fn sample_grf_rbf(length_scale: f64, sensors: &[f64], rng_seed: u64) -> Result<Vec<f64>, DatagenError> {
    let grf = RbfGrf::new(sensors, length_scale)?;
    Ok(grf.sample(&mut rng::rng_from_seed(rng_seed)))
}

/// Variance `625·(4π²k² + 25)⁻⁴` of Fourier mode `k`: the eigenvalues of
/// `625(−Δ + 25I)⁻⁴` on the unit circle.
pub fn riesz_mode_variance(k: usize) -> f64 {
    let lam = 4.0 * PI * PI * (k * k) as f64 + 25.0;
    625.0 * lam.powi(-4)
}

/// A real trigonometric polynomial on `[0, 1)`:
/// `u(x) = a₀ + Σₖ √2 (aₖ cos 2πkx + bₖ sin 2πkx)`.
///
/// The functions `1, √2 cos 2πkx, √2 sin 2πkx` are orthonormal in
/// `L²(0, 1)`, so `aₖ, bₖ` are the field's coordinates in that basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    pub mean: f64,
    /// `aₖ` for `k = 1..=K`.
    pub cos: Vec<f64>,
    /// `bₖ` for `k = 1..=K`.
    pub sin: Vec<f64>,
}

impl PeriodicField {
    /// Draws coordinates `aₖ, bₖ ~ N(0, 625(4π²k² + 25)⁻⁴)` for modes up to
    /// `max_mode`.
    pub fn sample_riesz<R: Rng + ?Sized>(max_mode: usize, rng: &mut R) -> Self {
        let mut draw = |k: usize| riesz_mode_variance(k).sqrt() * rng.sample::<f64, _>(StandardNormal);
        let mean = draw(0);
        let mut cos = Vec::with_capacity(max_mode);
        let mut sin = Vec::with_capacity(max_mode);
        for k in 1..=max_mode {
            cos.push(draw(k));
            sin.push(draw(k));
        }
        Self { mean, cos, sin }
    }

    pub fn max_mode(&self) -> usize {
        self.cos.len()
    }

    /// Pointwise value; `x` is reduced to `[0, 1)` first, so `u(1) = u(0)`
    /// exactly.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        let mut u = self.mean;
        for k in 1..=self.max_mode() {
            let (s, c) = (2.0 * PI * k as f64 * x).sin_cos();
            u += std::f64::consts::SQRT_2 * (self.cos[k - 1] * c + self.sin[k - 1] * s);
        }
        u
    }

    /// Values at `x_i = i/n`, `i = 0..n`, by an inverse FFT. Needs
    /// `n > 2·max_mode`.
    pub fn on_grid(&self, n: usize) -> Vec<f64> {
        assert!(n > 2 * self.max_mode(), "grid of {n} points cannot carry the field");
        let mut c = vec![Complex::new(0.0, 0.0); n];
        c[0] = Complex::new(self.mean, 0.0);
        for k in 1..=self.max_mode() {
            let ck = Complex::new(self.cos[k - 1], -self.sin[k - 1]) / std::f64::consts::SQRT_2;
            c[k] = ck;
            c[n - k] = ck.conj();
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut c);
        c.into_iter().map(|z| z.re).collect()
    }
}

/// A periodic Riesz field on the grid `i/resolution`, carrying all modes
/// below the grid's Nyquist frequency.
pub fn sample_grf_periodic_riesz(resolution: usize, rng_seed: u64) -> Result<Vec<f64>, DatagenError> {
    if resolution < 8 {
        return Err(DatagenError::InvalidParameter(format!(
            "resolution {resolution} is below 8"
        )));
    }
    let field = PeriodicField::sample_riesz((resolution - 1) / 2, &mut rng::rng_from_seed(rng_seed));
    Ok(field.on_grid(resolution))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_length_scale_gives_nearly_constant_draws() {
        let pts: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        for seed in 0..5 {
            let v = sample_grf_rbf(1e6, &pts, seed).unwrap();
            let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(hi - lo <= 1e-3 * v[0].abs().max(1e-2), "{lo} {hi}");
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let pts: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        assert_eq!(sample_grf_rbf(0.2, &pts, 7).unwrap(), sample_grf_rbf(0.2, &pts, 7).unwrap());
        assert_ne!(sample_grf_rbf(0.2, &pts, 7).unwrap(), sample_grf_rbf(0.2, &pts, 8).unwrap());
        assert_eq!(sample_grf_periodic_riesz(64, 3).unwrap(), sample_grf_periodic_riesz(64, 3).unwrap());
    }

    #[test]
    fn hundred_sensor_factorization_succeeds() {
        let pts: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let g = RbfGrf::new(&pts, 0.2).unwrap();
        assert!(g.jitter() <= 1e-6);
        assert!(RbfGrf::new(&pts, 0.0).is_err());
    }

    #[test]
    fn empirical_covariance_matches_kernel() {
        let pts: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let g = RbfGrf::new(&pts, 0.2).unwrap();
        let mut r = rng::rng_from_seed(11);
        let n = 5000;
        let mut acc = vec![0.0; 400];
        for _ in 0..n {
            let v = g.sample(&mut r);
            for a in 0..20 {
                for b in 0..20 {
                    acc[a * 20 + b] += v[a] * v[b];
                }
            }
        }
        for a in 0..20 {
            for b in 0..20 {
                let emp = acc[a * 20 + b] / n as f64;
                assert!((emp - rbf_kernel(pts[a], pts[b], 0.2)).abs() <= 0.1);
            }
        }
    }

    #[test]
    fn mode_zero_variance() {
        assert!((riesz_mode_variance(0) - 1.6e-3).abs() < 1e-18);
    }

    #[test]
    fn grid_values_match_direct_sum_and_wrap() {
        let f = PeriodicField::sample_riesz(10, &mut rng::rng_from_seed(2));
        let g = f.on_grid(32);
        for (i, v) in g.iter().enumerate() {
            assert!((v - f.eval(i as f64 / 32.0)).abs() < 1e-15);
        }
        assert_eq!(f.eval(1.0), f.eval(0.0));
        assert!(sample_grf_periodic_riesz(4, 0).is_err());
    }

    #[test]
    fn mode_one_variance_monte_carlo() {
        let n = 64;
        let draws = 5000;
        let mut r = rng::rng_from_seed(19);
        let (mut sa, mut sb) = (0.0, 0.0);
        for _ in 0..draws {
            let u = PeriodicField::sample_riesz(31, &mut r).on_grid(n);
            // project onto √2 cos 2πx and √2 sin 2πx with the trapezoid rule
            let (mut a, mut b) = (0.0, 0.0);
            for (i, v) in u.iter().enumerate() {
                let x = i as f64 / n as f64;
                a += v * (2.0 * PI * x).cos();
                b += v * (2.0 * PI * x).sin();
            }
            a *= std::f64::consts::SQRT_2 / n as f64;
            b *= std::f64::consts::SQRT_2 / n as f64;
            sa += a * a;
            sb += b * b;
        }
        let want = 625.0 * (4.0 * PI * PI + 25.0f64).powi(-4);
        for s in [sa, sb] {
            let v = s / draws as f64;
            assert!((v / want - 1.0).abs() <= 0.1, "{v} vs {want}");
        }
    }
}
