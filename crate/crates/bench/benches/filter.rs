use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use glmb_core::assignment::{gibbs_sample, murty_topk};
use glmb_core::metrics::ospa;
use glmb_core::selftest::random_table;
use glmb_core::simulator::{generate_scan, generate_truth};
use glmb_core::{joint_predict_update, GlmbDensity, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assignment(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let table = random_table(&mut rng, 12, 20);
    let init = table.initial_vector();
    c.bench_function("gibbs 1000 sweeps, 12 rows x 20 meas", |b| {
        b.iter(|| gibbs_sample(&table, &init, 1000, &mut rng))
    });
    let small = random_table(&mut rng, 6, 8);
    c.bench_function("murty top-10, 6 rows x 8 meas", |b| b.iter(|| murty_topk(black_box(&small), 10)));
}

fn metrics(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut points = |n: usize| -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| [rng.gen_range(-1000.0..1000.0), rng.gen_range(-1000.0..1000.0)])
            .collect()
    };
    let (x, y) = (points(9), points(12));
    let cfg = ScenarioConfig::default();
    c.bench_function("ospa 9 vs 12", |b| b.iter(|| ospa(black_box(&x), black_box(&y), &cfg.ospa)));
}

/// One scan of the full scenario, starting from the posterior after `scans`
/// scans.
fn filter_step(c: &mut Criterion) {
    let cfg = ScenarioConfig::default();
    let models = cfg.models();
    let truth = generate_truth(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut scan = |k| {
        let states: Vec<_> = truth.alive(k).iter().map(|(_, x)| *x).collect();
        generate_scan(&states, &models.sensor, &mut rng)
    };
    let scans = 30;
    let mut density = GlmbDensity::empty(0);
    for k in 1..=scans {
        density = joint_predict_update(&density, &scan(k), &models, &cfg.filter, k as u64)
            .expect("filter step")
            .density;
    }
    let z = scan(scans + 1);
    let mut group = c.benchmark_group("filter");
    group.sample_size(10);
    group.bench_function("joint predict-update, scan 31", |b| {
        b.iter_batched(
            || density.clone(),
            |d| joint_predict_update(&d, &z, &models, &cfg.filter, 31).expect("filter step"),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, assignment, metrics, filter_step);
criterion_main!(benches);
