use cvxfit::numerics::Dataset;
use cvxfit::tuner::{r_squared, tune, tuning_fit_config, Task, TuneConfig};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_1d(seed: u64, n: usize) -> Array2<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, 1), |_| r.random_range(-1.0..1.0))
}

#[test]
fn refinement_never_worsens_incumbent() {
    for seed in 0..5 {
        let mut r = ChaCha8Rng::seed_from_u64(100 + seed);
        let x = uniform_1d(seed, 30);
        let y = x.column(0).mapv(|v| v * v + 0.2 * r.random_range(-1.0..1.0));
        let data = Dataset::new(x, y).unwrap();
        let mut tc = TuneConfig::new(Task::Convex);
        tc.seed = seed;
        let out = tune(&data, &tc, &tuning_fit_config()).unwrap();
        let h = &out.report.history;
        assert!(h.windows(2).all(|w| w[1].mean <= w[0].mean), "seed {seed}: {h:?}");
        assert_eq!(out.report.best().mean, h.last().unwrap().mean);
    }
}

#[test]
fn leave_one_out_on_six_points() {
    let x = uniform_1d(9, 6);
    let y = x.column(0).mapv(|v| v.abs());
    let data = Dataset::new(x, y).unwrap();
    let mut tc = TuneConfig::new(Task::Convex);
    tc.folds = 6;
    let out = tune(&data, &tc, &tuning_fit_config()).unwrap();
    assert!(out.report.best().mean.is_finite());
    assert!(out.report.folds.iter().all(|f| f.metric.is_finite()));
}

#[test]
fn tuned_convex_fit_recovers_parabola() {
    let x = uniform_1d(42, 50);
    let y = x.column(0).mapv(|v| v * v);
    let data = Dataset::new(x.clone(), y.clone()).unwrap();
    let out = tune(&data, &TuneConfig::new(Task::Convex), &tuning_fit_config()).unwrap();
    let model = out.model.into_convex().unwrap();
    let train = r_squared(&model.predict(x.view()).unwrap(), &y);
    let grid = Array2::from_shape_fn((201, 1), |(i, _)| -1.0 + i as f64 / 100.0);
    let truth: Array1<f64> = grid.column(0).mapv(|v| v * v);
    let test = r_squared(&model.predict(grid.view()).unwrap(), &truth);
    assert!(train >= 0.99 && test >= 0.97, "lambda {} train {train} test {test}", out.lambda);
}

#[test]
fn tuned_bregman_separates_blobs() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in [(-2.0, 0u32), (2.0, 1)] {
        for _ in 0..10 {
            rows.push(c + 0.3 * r.random_range(-1.0..1.0));
            rows.push(0.3 * r.random_range(-1.0..1.0));
            labels.push(centre);
        }
    }
    let data = Dataset::with_labels(Array2::from_shape_vec((20, 2), rows).unwrap(), &labels).unwrap();
    let mut tc = TuneConfig::new(Task::Bregman);
    tc.refine_rounds = 0;
    let out = tune(&data, &tc, &tuning_fit_config()).unwrap();
    assert_eq!(out.report.best().mean, 1.0);
}

#[test]
fn chosen_lambda_is_reproducible() {
    let x = uniform_1d(3, 25);
    let y = x.column(0).mapv(|v| (2.0 * v).exp());
    let data = Dataset::new(x, y).unwrap();
    let tc = TuneConfig::new(Task::Dc);
    let a = tune(&data, &tc, &tuning_fit_config()).unwrap();
    let b = tune(&data, &tc, &tuning_fit_config()).unwrap();
    assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
    let metrics = |t: &cvxfit::tuner::Tuned| t.report.folds.iter().map(|f| f.metric.to_bits()).collect::<Vec<_>>();
    assert_eq!(metrics(&a), metrics(&b));
}
