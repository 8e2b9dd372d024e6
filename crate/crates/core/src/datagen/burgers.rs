//! Reference solver for the periodic viscous Burgers equation
//! `u_t + u u_x − ν u_xx = 0` on `[0, 1) × [0, 1]`.
//!
//! Fourier pseudo-spectral in space with the 2/3 dealiasing rule on the
//! nonlinear term; the diffusion term is integrated exactly through an
//! integrating factor and the rest by classical RK4 (Lawson's scheme).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{DatagenError, GridSolution};

type C64 = Complex<f64>;

/// Output nodes per axis: `x_i = i/100`, `t_n = n/100`.
pub const OUTPUT_NODES: usize = 101;

/// Largest accepted Courant number `max|u|·dt/dx`.
pub const MAX_COURANT: f64 = 0.5;

struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `2πk` in FFT order.
    wave: Vec<f64>,
    /// 2/3-rule mask.
    keep: Vec<bool>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let signed = |i: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        let cutoff = n as f64 / 3.0;
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            wave: (0..n).map(|i| 2.0 * PI * signed(i)).collect(),
            keep: (0..n).map(|i| signed(i).abs() < cutoff).collect(),
        }
    }

    /// Normalized forward transform of real values.
    fn to_modes(&self, u: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    fn to_values(&self, modes: &[C64]) -> Vec<f64> {
        let mut buf = modes.to_vec();
        self.inverse.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Dealiased `−(u²/2)_x` in Fourier space.
    fn nonlinear(&self, modes: &[C64]) -> Vec<C64> {
        let u = self.to_values(modes);
        let sq: Vec<f64> = u.iter().map(|v| 0.5 * v * v).collect();
        let mut out = self.to_modes(&sq);
        for ((z, &k), &keep) in out.iter_mut().zip(&self.wave).zip(&self.keep) {
            *z = if keep { C64::new(0.0, -k) * *z } else { C64::new(0.0, 0.0) };
        }
        out
    }

    /// Trigonometric interpolant at `x`, reduced to `[0, 1)`.
    fn eval(&self, modes: &[C64], x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        let mut s = modes[0].re;
        for i in 1..self.n.div_ceil(2) {
            let (sn, cs) = (self.wave[i] * x).sin_cos();
            // conjugate pair i and n−i
            s += 2.0 * (modes[i].re * cs - modes[i].im * sn);
        }
        s
    }
}

/// Evolves `u0` (values at `x_i = i/nx`) to `t = 1` and samples the
/// solution on the 101 × 101 output grid, `t` varying fastest.
///
/// `nt` time steps are used, rounded up to a multiple of 100. If the
/// initial Courant number exceeds [`MAX_COURANT`] the step count is doubled
/// (with a warning) until it does not.
pub fn solve_burgers(u0: &[f64], nu: f64, nt: usize) -> Result<GridSolution, DatagenError> {
    let nx = u0.len();
    if nx < 16 || nx % 2 != 0 {
        return Err(DatagenError::InvalidParameter(format!(
            "spatial resolution {nx} must be even and at least 16"
        )));
    }
    if !(nu > 0.0) {
        return Err(DatagenError::InvalidParameter(format!("viscosity {nu} must be positive")));
    }
    let per_output = OUTPUT_NODES - 1;
    let mut steps = nt.max(1).div_ceil(per_output) * per_output;
    let umax = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let courant = |steps: usize| umax * nx as f64 / steps as f64;
    while courant(steps) > MAX_COURANT {
        log::warn!(
            "Courant number {:.3} above {MAX_COURANT}; doubling the step count to {}",
            courant(steps),
            2 * steps
        );
        steps *= 2;
    }
    let dt = 1.0 / steps as f64;
    let sp = Spectral::new(nx);
    let mut modes = sp.to_modes(u0);
    modes[nx / 2] = C64::new(0.0, 0.0);
    let decay = |h: f64| -> Vec<f64> { sp.wave.iter().map(|k| (-nu * k * k * h).exp()).collect() };
    let (e_full, e_half) = (decay(dt), decay(0.5 * dt));

    let xs: Vec<f64> = (0..OUTPUT_NODES).map(|i| i as f64 / per_output as f64).collect();
    let ts = xs.clone();
    let mut values = vec![0.0; OUTPUT_NODES * OUTPUT_NODES];
    let mut record = |modes: &[C64], it: usize| -> Result<(), DatagenError> {
        for (ix, &x) in xs.iter().enumerate() {
            let v = sp.eval(modes, x);
            if !v.is_finite() {
                return Err(DatagenError::CflViolation(f64::INFINITY));
            }
            values[ix * OUTPUT_NODES + it] = v;
        }
        Ok(())
    };
    record(&modes, 0)?;
    let scale = |a: &[f64], z: &[C64]| -> Vec<C64> { a.iter().zip(z).map(|(e, v)| v * *e).collect() };
    let axpy = |x: &[C64], s: f64, y: &[C64]| -> Vec<C64> { x.iter().zip(y).map(|(a, b)| a + b * s).collect() };
    let stride = steps / per_output;
    for step in 1..=steps {
        let k1 = sp.nonlinear(&modes);
        let eu = scale(&e_half, &modes);
        let k2 = sp.nonlinear(&axpy(&eu, 0.5 * dt, &scale(&e_half, &k1)));
        let k3 = sp.nonlinear(&axpy(&eu, 0.5 * dt, &k2));
        let k4 = sp.nonlinear(&axpy(&scale(&e_full, &modes), dt, &scale(&e_half, &k3)));
        for i in 0..nx {
            modes[i] = e_full[i] * modes[i]
                + (e_full[i] * k1[i] + 2.0 * e_half[i] * (k2[i] + k3[i]) + k4[i]) * (dt / 6.0);
        }
        if step % stride == 0 {
            record(&modes, step / stride)?;
        }
    }
    Ok(GridSolution {
        axes: vec![xs, ts],
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_l2_error;

    fn sine(n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect()
    }

    #[test]
    fn constant_state_is_preserved() {
        let sol = solve_burgers(&vec![0.7; 64], 0.01, 100).unwrap();
        assert!(sol.values.iter().all(|v| (v - 0.7).abs() < 1e-14));
    }

    #[test]
    fn strong_viscosity_dissipates() {
        let sol = solve_burgers(&sine(64), 1.0, 200).unwrap();
        let last = (0..OUTPUT_NODES).map(|ix| sol.values[ix * OUTPUT_NODES + 100].abs()).fold(0.0, f64::max);
        assert!(last < 1.0 && last < 1e-10);
    }

    #[test]
    fn linear_limit_matches_heat_kernel() {
        // tiny amplitude: u ≈ ε e^{−4π²νt} sin 2πx
        let eps = 1e-6;
        let u0: Vec<f64> = sine(64).iter().map(|v| eps * v).collect();
        let sol = solve_burgers(&u0, 0.1, 400).unwrap();
        for (ix, &x) in sol.axes[0].iter().enumerate() {
            let want = eps * (-4.0 * PI * PI * 0.1f64).exp() * (2.0 * PI * x).sin();
            assert!((sol.values[ix * OUTPUT_NODES + 100] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn output_is_periodic_in_x() {
        let sol = solve_burgers(&sine(64), 0.05, 200).unwrap();
        for it in 0..OUTPUT_NODES {
            assert_eq!(sol.values[it], sol.values[100 * OUTPUT_NODES + it]);
        }
    }

    #[test]
    fn self_convergence_under_refinement() {
        let coarse = solve_burgers(&sine(256), 0.01, 2000).unwrap();
        let fine = solve_burgers(&sine(512), 0.01, 4000).unwrap();
        let err = relative_l2_error(&coarse.values, &fine.values).unwrap();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn large_steps_are_refined() {
        let u0: Vec<f64> = sine(128).iter().map(|v| 10.0 * v).collect();
        // Courant number 10·128/100 > 0.5 forces refinement; must stay finite
        let sol = solve_burgers(&u0, 0.5, 100).unwrap();
        assert!(sol.values.iter().all(|v| v.is_finite()));
    }
}
