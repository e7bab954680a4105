use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use resloss::fitcore::{lm_fit, numerical_jacobian, DiffScheme, FitProblem, FitResult};
use resloss::physmodels::{tls_power_loss, TlsLossParams};

fn exp_data(n: usize, seed: u64, noise: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..n).map(|i| 4.0 * i as f64 / (n - 1) as f64).collect();
    let ys = xs
        .iter()
        .map(|x| {
            // noise is a fraction of the amplitude p0 = 2
            2.0 * (-0.5 * x).exp() + 2.0 * noise * normal.sample(&mut rng)
        })
        .collect();
    (xs, ys)
}

fn fit_exp(xs: &[f64], ys: &[f64], scale: f64) -> FitResult {
    // parameters are (s·p0, s·p1) when scale = s
    let problem = FitProblem::new(
        move |p: &[f64]| {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| p[0] / scale * (p[1] / scale * x).exp() - y)
                .collect()
        },
        vec![1.0 * scale, -0.1 * scale],
    )
    .with_bounds(vec![0.0, -10.0 * scale], vec![10.0 * scale, 10.0 * scale]);
    lm_fit(&problem).unwrap()
}

#[test]
fn exponential_recovery_is_calibrated() {
    let mut covered = 0;
    for seed in 0..100 {
        let (xs, ys) = exp_data(200, seed, 0.01);
        let fit = fit_exp(&xs, &ys, 1.0);
        assert!(fit.converged);
        let ok0 = (fit.params[0] - 2.0).abs() <= 3.0 * fit.stderr[0];
        let ok1 = (fit.params[1] + 0.5).abs() <= 3.0 * fit.stderr[1];
        if ok0 && ok1 {
            covered += 1;
        }
    }
    assert!(covered >= 99, "covered {covered}/100");
}

#[test]
fn minimiser_is_reparameterisation_invariant() {
    let (xs, ys) = exp_data(200, 42, 0.01);
    let a = fit_exp(&xs, &ys, 1.0);
    let b = fit_exp(&xs, &ys, 10.0);
    for k in 0..2 {
        let pa = a.params[k];
        let pb = b.params[k] / 10.0;
        assert!((pa - pb).abs() / pa.abs() < 1e-8, "{pa} vs {pb}");
    }
}

#[test]
fn stderr_shrinks_as_inverse_sqrt_n() {
    let mut ratios = Vec::new();
    for seed in 0..16 {
        let (xs, ys) = exp_data(200, 1000 + seed, 0.01);
        let (xs2, ys2) = exp_data(400, 2000 + seed, 0.01);
        let a = fit_exp(&xs, &ys, 1.0);
        let b = fit_exp(&xs2, &ys2, 1.0);
        ratios.push(a.stderr[0] / b.stderr[0]);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean / 2f64.sqrt() - 1.0).abs() < 0.10, "mean ratio {mean}");
}

#[test]
fn cost_never_increases_and_result_is_deterministic() {
    let (xs, ys) = exp_data(100, 3, 0.05);
    let a = fit_exp(&xs, &ys, 1.0);
    assert!(a.cost_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(a.cost_history.len() > 1);
    let b = fit_exp(&xs, &ys, 1.0);
    assert_eq!(a, b);
}

#[test]
fn covariance_is_symmetric_psd() {
    let (xs, ys) = exp_data(50, 9, 0.02);
    let fit = fit_exp(&xs, &ys, 1.0);
    let c = fit.covariance.as_ref().unwrap();
    assert!((c[0][1] - c[1][0]).abs() <= 1e-12 * (c[0][0] * c[1][1]).sqrt());
    assert!(c[0][0] > 0.0 && c[1][1] > 0.0);
    assert!(c[0][0] * c[1][1] - c[0][1] * c[1][0] >= 0.0);
    for k in 0..2 {
        assert_eq!(fit.stderr[k], c[k][k].sqrt());
    }
}

#[test]
fn tls_loss_jacobian_matches_richardson() {
    let base = TlsLossParams {
        inv_q_tls: 2e-5,
        n_c: 10.0,
        phi: 0.44,
        inv_q_r: 2e-6,
        f_r: 4.8e9,
        temperature: 0.01,
    };
    let grid: Vec<f64> = (0..25).map(|i| 10f64.powf(-2.0 + 0.25 * i as f64)).collect();
    let model = |p: &[f64]| -> Vec<f64> {
        let params = TlsLossParams { inv_q_tls: p[0], n_c: p[1], phi: p[2], ..base };
        grid.iter().map(|&n| tls_power_loss(&params, n).unwrap()).collect()
    };
    let p = [base.inv_q_tls, base.n_c, base.phi];
    let floor = [1e-9, 1e-3, 1e-3];
    let fwd = numerical_jacobian(&model, &p, 1.5e-8, &floor, DiffScheme::Forward).unwrap();
    // Richardson extrapolation of two central differences, h and h/2
    let c1 = numerical_jacobian(&model, &p, 1e-3, &floor, DiffScheme::Central).unwrap();
    let c2 = numerical_jacobian(&model, &p, 5e-4, &floor, DiffScheme::Central).unwrap();
    for i in 0..grid.len() {
        for j in 0..3 {
            let rich = (4.0 * c2[(i, j)] - c1[(i, j)]) / 3.0;
            let scale = rich.abs().max(1e-3 * c2.column(j).amax());
            assert!((fwd[(i, j)] - rich).abs() / scale < 1e-4, "({i},{j})");
        }
    }
}
