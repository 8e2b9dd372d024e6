//! Reference solver for `u_t − D u_xx − κu² = f` on `[0, 1]²` with zero
//! initial and boundary values.
//!
//! Second-order central differences in `x` and Crank–Nicolson in `t`; each
//! step solves the implicit nonlinear system by Newton's method with a
//! tridiagonal Jacobian.

use super::{DatagenError, GridSolution};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITERS: usize = 25;

/// Solves `a_i x_{i−1} + b_i x_i + c_i x_{i+1} = d_i` in place (`d` becomes
/// `x`). `a[0]` and `c[n−1]` are ignored.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64], scratch: &mut [f64]) {
    let n = d.len();
    scratch[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let denom = b[i] - a[i] * scratch[i - 1];
        scratch[i] = if i + 1 < n { c[i] / denom } else { 0.0 };
        d[i] = (d[i] - a[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= scratch[i] * d[i + 1];
    }
}

/// `D u_xx + κu² + f` at interior nodes, with zero boundary values.
fn rhs(u: &[f64], f: &[f64], diffusion: f64, reaction: f64, inv_h2: f64, out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let left = if i > 0 { u[i - 1] } else { 0.0 };
        let right = if i + 1 < n { u[i + 1] } else { 0.0 };
        out[i] = diffusion * (left - 2.0 * u[i] + right) * inv_h2 + reaction * u[i] * u[i] + f[i];
    }
}

/// Solves with a space-time source `f(x, t)`. The grid is
/// `x_i = i/(nx − 1)`, `t_n = n/(nt − 1)`; values are stored with `t`
/// varying fastest.
pub fn solve_diffusion_reaction_with_source(
    source: impl Fn(f64, f64) -> f64,
    diffusion: f64,
    reaction: f64,
    nx: usize,
    nt: usize,
) -> Result<GridSolution, DatagenError> {
    if nx < 16 || nt < 16 {
        return Err(DatagenError::InvalidParameter(format!(
            "grid {nx} x {nt} is below 16 x 16"
        )));
    }
    if !(diffusion > 0.0) {
        return Err(DatagenError::InvalidParameter(format!(
            "diffusion {diffusion} must be positive"
        )));
    }
    let xs: Vec<f64> = (0..nx).map(|i| i as f64 / (nx - 1) as f64).collect();
    let ts: Vec<f64> = (0..nt).map(|n| n as f64 / (nt - 1) as f64).collect();
    let h = 1.0 / (nx - 1) as f64;
    let dt = 1.0 / (nt - 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    let ni = nx - 2;

    let mut values = vec![0.0; nx * nt];
    let mut u = vec![0.0; ni];
    let mut f_old: Vec<f64> = xs[1..nx - 1].iter().map(|&x| source(x, ts[0])).collect();
    let mut f_new = vec![0.0; ni];
    let mut explicit = vec![0.0; ni];
    let mut resid = vec![0.0; ni];
    let (mut a, mut b, mut c) = (vec![0.0; ni], vec![0.0; ni], vec![0.0; ni]);
    let mut scratch = vec![0.0; ni];

    for step in 1..nt {
        for (fi, &x) in f_new.iter_mut().zip(&xs[1..nx - 1]) {
            *fi = source(x, ts[step]);
        }
        rhs(&u, &f_old, diffusion, reaction, inv_h2, &mut explicit);
        let old = u.clone();
        let mut converged = false;
        let mut update = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITERS {
            // F(v) = v − uⁿ − dt/2 (R(v) + R(uⁿ))
            rhs(&u, &f_new, diffusion, reaction, inv_h2, &mut resid);
            for i in 0..ni {
                resid[i] = -(u[i] - old[i] - 0.5 * dt * (resid[i] + explicit[i]));
                a[i] = -0.5 * dt * diffusion * inv_h2;
                c[i] = a[i];
                b[i] = 1.0 + dt * diffusion * inv_h2 - dt * reaction * u[i];
            }
            thomas(&a, &b, &c, &mut resid, &mut scratch);
            update = resid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (ui, di) in u.iter_mut().zip(&resid) {
                *ui += di;
            }
            let scale = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if !update.is_finite() {
                break;
            }
            if update <= NEWTON_TOL * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(DatagenError::NewtonDivergence { step, update });
        }
        for i in 0..ni {
            values[(i + 1) * nt + step] = u[i];
        }
        std::mem::swap(&mut f_old, &mut f_new);
    }
    Ok(GridSolution {
        axes: vec![xs, ts],
        values,
    })
}

/// Solves with a time-independent source given at the `nx` grid nodes
/// `x_i = i/(nx − 1)`.
pub fn solve_diffusion_reaction(
    f_values: &[f64],
    diffusion: f64,
    reaction: f64,
    nx: usize,
    nt: usize,
) -> Result<GridSolution, DatagenError> {
    if f_values.len() != nx {
        return Err(DatagenError::InvalidParameter(format!(
            "{} source values for {nx} grid nodes",
            f_values.len()
        )));
    }
    let step = 1.0 / (nx - 1) as f64;
    solve_diffusion_reaction_with_source(
        |x, _| f_values[(x / step).round() as usize],
        diffusion,
        reaction,
        nx,
        nt,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_l2_error;
    use std::f64::consts::PI;

    #[test]
    fn thomas_matches_dense_solve() {
        let a = [0.0, 1.0, -2.0, 0.5];
        let b = [4.0, 5.0, 6.0, 3.0];
        let c = [1.0, 2.0, 1.0, 0.0];
        let x = [1.0, -1.0, 2.0, 0.5];
        let mut d: Vec<f64> = (0..4)
            .map(|i| {
                b[i] * x[i] + if i > 0 { a[i] * x[i - 1] } else { 0.0 } + if i < 3 { c[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let mut s = vec![0.0; 4];
        thomas(&a, &b, &c, &mut d, &mut s);
        for (u, v) in d.iter().zip(x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let sol = solve_diffusion_reaction(&vec![0.0; 32], 0.01, 0.01, 32, 20).unwrap();
        assert!(sol.values.iter().all(|&v| v == 0.0));
    }

    fn manufactured_error(n: usize) -> f64 {
        let (d, k) = (0.01, 0.01);
        let source = |x: f64, t: f64| {
            let s = (PI * x).sin();
            s + d * PI * PI * t * s - k * t * t * s * s
        };
        let sol = solve_diffusion_reaction_with_source(source, d, k, n, n).unwrap();
        let exact: Vec<f64> = sol.axes[0]
            .iter()
            .flat_map(|&x| sol.axes[1].iter().map(move |&t| t * (PI * x).sin()))
            .collect();
        relative_l2_error(&sol.values, &exact).unwrap()
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let fine = manufactured_error(200);
        assert!(fine <= 1e-4, "{fine}");
        let (e1, e2) = (manufactured_error(51), manufactured_error(101));
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn linear_case_matches_sine_series() {
        let d = 0.01;
        let n = 200;
        // f = sin πx + 0.2 sin 2πx; each mode relaxes independently
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let f: Vec<f64> = xs.iter().map(|&x| (PI * x).sin() + 0.2 * (2.0 * PI * x).sin()).collect();
        let sol = solve_diffusion_reaction(&f, d, 0.0, n, n).unwrap();
        let exact: Vec<f64> = xs
            .iter()
            .flat_map(|&x| {
                sol.axes[1].iter().map(move |&t| {
                    [(1.0, 1.0), (2.0, 0.2)]
                        .iter()
                        .map(|&(k, fk)| {
                            let rate = d * k * k * PI * PI;
                            fk / rate * (1.0 - (-rate * t).exp()) * (k * PI * x).sin()
                        })
                        .sum::<f64>()
                })
            })
            .collect();
        let err = relative_l2_error(&sol.values, &exact).unwrap();
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn rejects_small_grids() {
        assert!(solve_diffusion_reaction(&[0.0; 8], 0.01, 0.01, 8, 8).is_err());
        assert!(solve_diffusion_reaction(&[0.0; 20], 0.01, 0.01, 32, 32).is_err());
    }
}
