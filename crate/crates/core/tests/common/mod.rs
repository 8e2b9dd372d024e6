//! Property checks shared by the integration tests and the acceptance
//! harness. Each returns the measured worst case; callers compare it to
//! their tolerance.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use rann_deeponet::datagen::grf::{rbf_kernel, riesz_mode_variance};
use rann_deeponet::datagen::{
    solve_burgers, solve_darcy, solve_diffusion_reaction_with_source, Dataset, ExampleId, PeriodicField, PointKind,
    RbfGrf,
};
use rann_deeponet::features::Hypercube;
use rann_deeponet::geometry::{DomainSpec, Shape};
use rann_deeponet::jet::ScalarJet;
use rann_deeponet::linalg::{relative_l2_error, solve_least_squares, LsqSystem};
use rann_deeponet::model::{
    Architecture, ConstraintWrapper, DistanceField, LiftField, ModelInput, PeriodicEmbedding, RannDeepONet,
    ScalarField,
};
use rann_deeponet::rng::{rng_from_seed, StreamRng};
use rann_deeponet::train::{train, PdeOperator, SourceTerm, TrainConfig, TrainMode};

pub fn normal(g: &mut StreamRng) -> f64 {
    g.sample(StandardNormal)
}

fn random_orthogonal(n: usize, g: &mut StreamRng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| normal(g)).qr().q()
}

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// A random `rows × cols` matrix of the given rank with singular values in
/// `[1e-3, 10]`, built from random orthogonal factors.
pub fn random_ranked_matrix(rows: usize, cols: usize, rank: usize, g: &mut StreamRng) -> DMatrix<f64> {
    ranked_with_pinv(rows, cols, rank, g).0
}

/// Like [`random_ranked_matrix`], also returning the pseudo-inverse
/// `V Σ⁺ Uᵀ` assembled from the same factors.
pub fn ranked_with_pinv(rows: usize, cols: usize, rank: usize, g: &mut StreamRng) -> (DMatrix<f64>, DMatrix<f64>) {
    let u = random_orthogonal(rows, g);
    let v = random_orthogonal(cols, g);
    let mut s = DMatrix::zeros(rows, cols);
    let mut s_plus = DMatrix::zeros(cols, rows);
    for i in 0..rank {
        let sigma = 10f64.powf(g.random_range(-3.0..1.0));
        s[(i, i)] = sigma;
        s_plus[(i, i)] = 1.0 / sigma;
    }
    (&u * s * v.transpose(), v * s_plus * u.transpose())
}

/// Pseudo-inverse solution from the eigendecomposition of AᵀA, dropping
/// eigenvalues below `rel_tol² · λmax`.
pub fn normal_equations_oracle(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let atb = a.transpose() * b;
    let eig = SymmetricEigen::new(a.transpose() * a);
    let lmax = eig.eigenvalues.max();
    let mut x = DVector::zeros(a.ncols());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > rel_tol * rel_tol * lmax {
            let v = eig.eigenvectors.column(i);
            x += v * (v.dot(&atb) / l);
        }
    }
    x
}

/// Worst relative difference between the truncated-SVD solver and two
/// oracles over `cases` random systems of at most 50 × 50, a third of them
/// rank deficient: the pseudo-inverse known from the construction, and the
/// normal-equations eigendecomposition oracle. Singular values lie in
/// `[1e-3, 10]`, so the retained spectrum is well separated from the dropped
/// one for both. (nalgebra's SVD solve was tried first and is off by up to
/// 4e-6 on some full-rank 41 × 13 systems.)
pub fn lsq_oracle_worst(cases: usize, seed: u64) -> f64 {
    let mut g = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let rows = g.random_range(1..=50);
        let cols = g.random_range(1..=50);
        let full = rows.min(cols);
        let rank = if case % 3 == 0 { g.random_range(1..=full) } else { full };
        let (a, pinv) = ranked_with_pinv(rows, cols, rank, &mut g);
        let b = DVector::from_fn(rows, |_, _| normal(&mut g));
        let system = LsqSystem::new(to_faer(&a), b.iter().copied().collect()).unwrap();
        let got = DVector::from_vec(solve_least_squares(&system, 1e-10).unwrap().coefficients);
        for x in [&pinv * &b, normal_equations_oracle(&a, &b, 1e-6)] {
            worst = worst.max((&got - &x).norm() / x.norm());
        }
    }
    worst
}

/// Data set with random inputs and random collocation points in `[0, 1]^d`
/// (kept off the edges so that hard constraints do not vanish).
pub fn random_dataset(n: usize, m: usize, q: usize, d: usize, seed: u64) -> Dataset {
    let mut g = rng_from_seed(seed);
    Dataset {
        example: ExampleId::DiffusionReaction,
        sensors: (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
        sensor_dim: 1,
        m,
        inputs: (0..n * m).map(|_| g.random_range(-1.0..1.0)).collect(),
        q,
        d,
        colloc: (0..n * q * d).map(|_| g.random_range(0.01..0.99)).collect(),
        solution: None,
        kinds: vec![PointKind::Interior as u8; n * q],
        domains: None,
        meta: BTreeMap::new(),
    }
}

pub fn random_model(
    sensors: usize,
    k: usize,
    p: usize,
    coord_dim: usize,
    trunk_range: f64,
    embedding: Option<PeriodicEmbedding>,
    constraint: ConstraintWrapper,
    seed: u64,
) -> RannDeepONet {
    let arch = Architecture {
        sensors,
        branch_width: k,
        trunk_width: p,
        coord_dim,
        branch_range: 1.0,
        trunk_range,
        hypercube_bias: true,
        embedding,
        seed,
    };
    RannDeepONet::random(
        &arch,
        &Hypercube::uniform(sensors, -1.0, 1.0).unwrap(),
        &Hypercube::uniform(coord_dim, 0.0, 1.0).unwrap(),
        constraint,
    )
    .unwrap()
}

/// Fits data produced by a random model with known coefficients and returns
/// the worst relative coefficient error over plain, hard-constrained and
/// periodic variants.
pub fn self_consistency_worst(seed: u64) -> f64 {
    let variants: [(Option<PeriodicEmbedding>, ConstraintWrapper); 3] = [
        (None, ConstraintWrapper::None),
        (None, ConstraintWrapper::unit_interval_time()),
        (
            Some(PeriodicEmbedding::new(2.0 * PI, 1, vec![0]).unwrap()),
            ConstraintWrapper::None,
        ),
    ];
    let mut worst = 0.0f64;
    for (v, (emb, wrapper)) in variants.into_iter().enumerate() {
        let s = seed + 100 * v as u64;
        let mut model = random_model(5, 8, 6, 2, 2.0, emb, wrapper, s);
        let mut g = rng_from_seed(s + 1);
        let truth: Vec<f64> = (0..48).map(|_| g.random_range(-1.0..1.0)).collect();
        model.set_alpha_flat(truth.clone()).unwrap();
        let mut data = random_dataset(30, 5, 25, 2, s + 2);
        let u: Vec<f64> = (0..data.len())
            .flat_map(|n| model.evaluate_batch(data.model_input(n), data.points(n)).unwrap())
            .collect();
        data.solution = Some(u);
        model.clear_alpha();
        let cfg = TrainConfig {
            sample_budget: 750,
            rel_tol: 1e-14,
            rng_seed: s + 3,
            ..TrainConfig::default()
        };
        train(&mut model, &data, &cfg).unwrap();
        let fit = model.alpha().unwrap().as_slice();
        worst = worst.max(relative_l2_error(fit, &truth).unwrap());
    }
    worst
}

/// Largest `|G(f)(y)|` over `samples` boundary points of a randomly
/// initialized model with random coefficients: three quarters on Darcy
/// domains of every shape, the rest on the edges `x = 0`, `x = 1`, `t = 0`
/// under `c = t·x(1 − x)`.
pub fn boundary_exactness_worst(samples: usize, seed: u64) -> f64 {
    let mut g = rng_from_seed(seed);
    let mut worst = 0.0f64;
    let with_alpha = |mut model: RannDeepONet, g: &mut StreamRng| {
        let n = model.coefficient_count();
        model.set_alpha_flat((0..n).map(|_| g.random_range(-1.0..1.0)).collect()).unwrap();
        model
    };

    let domain_model = with_alpha(random_model(6, 12, 10, 2, 2.0, None, ConstraintWrapper::domain(), seed), &mut g);
    let per_domain = 250;
    let domains = (3 * samples / 4).div_ceil(per_domain);
    for i in 0..domains {
        let shape = Shape::ALL[i % 3];
        let domain = DomainSpec::sample(shape, &mut g);
        let input: Vec<f64> = (0..6).map(|_| g.random_range(-1.0..1.0)).collect();
        let pts: Vec<f64> = domain.boundary_points(per_domain).unwrap().concat();
        let vals = domain_model
            .evaluate_batch(ModelInput::new(&input).with_domain(Some(&domain)), &pts)
            .unwrap();
        worst = vals.iter().fold(worst, |w, v| w.max(v.abs()));
    }

    let dr_model = with_alpha(
        random_model(6, 12, 10, 2, 8.0, None, ConstraintWrapper::unit_interval_time(), seed + 1),
        &mut g,
    );
    for i in 0..samples.saturating_sub(domains * per_domain) {
        let s: f64 = g.random();
        let y = match i % 3 {
            0 => [0.0, s],
            1 => [1.0, s],
            _ => [s, 0.0],
        };
        let input: Vec<f64> = (0..6).map(|_| g.random_range(-1.0..1.0)).collect();
        let v = dr_model.evaluate(ModelInput::new(&input), &y).unwrap();
        worst = worst.max(v.abs());
    }
    worst
}

/// Worst relative error of analytic trunk gradients and Hessians against
/// central differences, over `cases` random models and points; every other
/// case uses a periodic embedding of `x`.
pub fn trunk_derivative_worst(cases: usize, seed: u64) -> (f64, f64) {
    let mut g = rng_from_seed(seed);
    let h = 1e-5;
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for case in 0..cases {
        let emb = (case % 2 == 1).then(|| PeriodicEmbedding::new(2.0 * PI, 1 + case % 3, vec![0]).unwrap());
        let r_t = g.random_range(0.5..4.0);
        let model = random_model(2, 2, 8, 2, r_t, emb, ConstraintWrapper::None, seed + case as u64);
        let y = [g.random_range(0.0..1.0), g.random_range(0.0..1.0)];
        let jets = model.trunk_features_derivatives(&y, 2).unwrap();
        let p = model.trunk_width();
        let shifted = |a: usize, step: f64| {
            let mut z = y;
            z[a] += step;
            z
        };
        let (mut eg, mut ng, mut eh, mut nh) = (0.0, 0.0, 0.0, 0.0);
        for a in 0..2 {
            let plus = model.trunk_features(&shifted(a, h)).unwrap();
            let minus = model.trunk_features(&shifted(a, -h)).unwrap();
            let gp = model.trunk_features_derivatives(&shifted(a, h), 1).unwrap();
            let gm = model.trunk_features_derivatives(&shifted(a, -h), 1).unwrap();
            for n in 0..p {
                let fd = (plus[n] - minus[n]) / (2.0 * h);
                eg += (jets.grad(n)[a] - fd).powi(2);
                ng += jets.grad(n)[a].powi(2);
                for b in 0..2 {
                    let fd = (gp.grad(n)[b] - gm.grad(n)[b]) / (2.0 * h);
                    let exact = jets.hessian(n)[a * 2 + b];
                    eh += (exact - fd).powi(2);
                    nh += exact.powi(2);
                }
            }
        }
        worst_g = worst_g.max((eg / ng).sqrt());
        worst_h = worst_h.max((eh / nh).sqrt());
    }
    (worst_g, worst_h)
}

/// `−u'' = f` on `[0, 1]` with `u(0) = u(1) = 0`, for
/// `u = a₁ sin πx + a₂ sin 2πx`, trained from the residual alone with
/// `c = x(1 − x)`. Returns the relative ℓ² error on fresh coefficients.
pub fn poisson_1d_error(k: usize, p: usize, seed: u64) -> f64 {
    let sensors = [0.25, 0.5, 0.75];
    let exact = |a: [f64; 2], x: f64| a[0] * (PI * x).sin() + a[1] * (2.0 * PI * x).sin();
    let forcing = |a: [f64; 2], x: f64| a[0] * PI * PI * (PI * x).sin() + a[1] * 4.0 * PI * PI * (2.0 * PI * x).sin();
    // f(1/4) ± f(3/4) isolate the two modes
    let recover = |f: &[f64]| {
        let s = (PI / 4.0).sin();
        [(f[0] + f[2]) / (2.0 * PI * PI * s), (f[0] - f[2]) / (8.0 * PI * PI)]
    };

    let mut g = rng_from_seed(seed);
    let mut draw = |n: usize| -> Vec<[f64; 2]> {
        (0..n).map(|_| [g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)]).collect()
    };
    let (train_a, test_a) = (draw(60), draw(50));
    let inputs = |a: &[[f64; 2]]| -> Vec<f64> {
        a.iter().flat_map(|&c| sensors.iter().map(move |&x| forcing(c, x))).collect()
    };

    let q = 50;
    let data = Dataset {
        example: ExampleId::DiffusionReaction,
        sensors: sensors.to_vec(),
        sensor_dim: 1,
        m: 3,
        inputs: inputs(&train_a),
        q,
        d: 1,
        colloc: (0..train_a.len() * q).map(|_| g.random_range(0.0..1.0)).collect(),
        solution: None,
        kinds: vec![PointKind::Interior as u8; train_a.len() * q],
        domains: None,
        meta: BTreeMap::new(),
    };
    data.validate().unwrap();

    let wrapper = ConstraintWrapper::Dirichlet {
        distance: DistanceField::Custom(ScalarField::new("x(1-x)", |y, order| {
            ScalarJet {
                value: y[0] * (1.0 - y[0]),
                grad: vec![1.0 - 2.0 * y[0]],
                hess: vec![-2.0],
            }
            .truncated(order)
        })),
        lift: LiftField::Zero,
    };
    let arch = Architecture {
        sensors: 3,
        branch_width: k,
        trunk_width: p,
        coord_dim: 1,
        branch_range: 0.02,
        trunk_range: 4.0,
        hypercube_bias: true,
        embedding: None,
        seed,
    };
    let sensor_box = Hypercube::bounding(&data.inputs, 3, 1e-3).unwrap();
    let mut model =
        RannDeepONet::random(&arch, &sensor_box, &Hypercube::uniform(1, 0.0, 1.0).unwrap(), wrapper).unwrap();
    let source = SourceTerm::Field(Arc::new(move |f: &[f64], y: &[f64]| forcing(recover(f), y[0])));
    let cfg = TrainConfig {
        sample_budget: data.len() * q,
        rel_tol: 1e-12,
        rng_seed: seed + 1,
        mode: TrainMode::PhysicsInformed(PdeOperator::Diffusion {
            permeability: 1.0,
            source,
        }),
        ..TrainConfig::default()
    };
    train(&mut model, &data, &cfg).unwrap();

    let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let (mut got, mut want) = (Vec::new(), Vec::new());
    let test_inputs = inputs(&test_a);
    for (n, &a) in test_a.iter().enumerate() {
        let f = &test_inputs[3 * n..3 * n + 3];
        got.extend(model.evaluate_batch(ModelInput::new(f), &xs).unwrap());
        want.extend(xs.iter().map(|&x| exact(a, x)));
    }
    relative_l2_error(&got, &want).unwrap()
}

/// Relative ℓ² error of the Darcy solver on a disk of radius 0.63 against
/// `u = (R² − r²)/4`, over the grid nodes inside.
pub fn darcy_disk_error() -> f64 {
    let r = 0.63;
    let disk = DomainSpec::ellipse([1.0, 1.0], r, r, 0.0).unwrap();
    let sol = solve_darcy(&disk, 201).unwrap();
    let (mut got, mut want) = (Vec::new(), Vec::new());
    for (ix, &x) in sol.axes[0].iter().enumerate() {
        for (iy, &y) in sol.axes[1].iter().enumerate() {
            let v = sol.at(ix, iy);
            if v.is_finite() {
                got.push(v);
                want.push((r * r - (x - 1.0).powi(2) - (y - 1.0).powi(2)) / 4.0);
            }
        }
    }
    relative_l2_error(&got, &want).unwrap()
}

/// Errors of the diffusion-reaction solver against `u = t sin πx` on
/// `n × n` grids for each `n`.
pub fn dr_manufactured_errors(sizes: &[usize]) -> Vec<f64> {
    let (d, k) = (0.01, 0.01);
    let source = move |x: f64, t: f64| {
        let s = (PI * x).sin();
        s + d * PI * PI * t * s - k * t * t * s * s
    };
    sizes
        .iter()
        .map(|&n| {
            let sol = solve_diffusion_reaction_with_source(source, d, k, n, n).unwrap();
            let exact: Vec<f64> = sol.axes[0]
                .iter()
                .flat_map(|&x| sol.axes[1].iter().map(move |&t| t * (PI * x).sin()))
                .collect();
            relative_l2_error(&sol.values, &exact).unwrap()
        })
        .collect()
}

/// Relative difference between Burgers solutions at `nx = 256` and
/// `nx = 512` (time steps doubled too) from `sin 2πx` plus a Riesz field.
pub fn burgers_self_convergence(seed: u64) -> f64 {
    let field = PeriodicField::sample_riesz(20, &mut rng_from_seed(seed));
    let u0 = |n: usize| -> Vec<f64> {
        field
            .on_grid(n)
            .iter()
            .enumerate()
            .map(|(i, v)| v + (2.0 * PI * i as f64 / n as f64).sin())
            .collect()
    };
    let coarse = solve_burgers(&u0(256), 0.01, 2000).unwrap();
    let fine = solve_burgers(&u0(512), 0.01, 4000).unwrap();
    relative_l2_error(&coarse.values, &fine.values).unwrap()
}

/// Largest entrywise gap between the empirical covariance of `draws` RBF
/// samples on 20 points of `[0, 1]` and the kernel.
pub fn rbf_covariance_gap(draws: usize, seed: u64) -> f64 {
    let pts: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
    let grf = RbfGrf::new(&pts, 0.2).unwrap();
    let mut g = rng_from_seed(seed);
    let mut acc = vec![0.0; 400];
    for _ in 0..draws {
        let v = grf.sample(&mut g);
        for a in 0..20 {
            for b in 0..20 {
                acc[a * 20 + b] += v[a] * v[b];
            }
        }
    }
    let mut gap = 0.0f64;
    for a in 0..20 {
        for b in 0..20 {
            let emp = acc[a * 20 + b] / draws as f64;
            gap = gap.max((emp - rbf_kernel(pts[a], pts[b], 0.2)).abs());
        }
    }
    gap
}

/// Relative gap between the empirical variance of the first cosine
/// coordinate of Riesz samples (recovered from grid values by the
/// trapezoid rule) and `625(4π² + 25)⁻⁴`.
pub fn riesz_mode_one_gap(draws: usize, seed: u64) -> f64 {
    let n = 64;
    let mut g = rng_from_seed(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        let u = PeriodicField::sample_riesz(31, &mut g).on_grid(n);
        let a: f64 = u
            .iter()
            .enumerate()
            .map(|(i, v)| v * 2f64.sqrt() * (2.0 * PI * i as f64 / n as f64).cos())
            .sum::<f64>()
            / n as f64;
        acc += a * a;
    }
    let want = riesz_mode_variance(1);
    (acc / draws as f64 - want).abs() / want
}
