use ccplan_core::archmodel::ArchitectureSpec;
use ccplan_core::complexity::{profile_images, DatasetProfile};
use ccplan_core::degradation::{select_omega, DegradationModel, Metric};
use ccplan_core::imaging::RasterImage;
use ccplan_core::planner::{build_plans, Constraint, Mode};
use ccplan_core::Execution;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn textured_images(n: usize, side: usize) -> Vec<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..n)
        .map(|_| {
            let px = (0..side * side)
                .map(|i| {
                    let (x, y) = (i % side, i / side);
                    ((x * 3 + y * 5) as u8).wrapping_add(rng.gen_range(0..32))
                })
                .collect();
            RasterImage::new(side, side, 1, px).unwrap()
        })
        .collect()
}

fn bench_profile(c: &mut Criterion) {
    let images = textured_images(16, 128);
    let mut group = c.benchmark_group("profile_dataset");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| profile_images("bench", black_box(&images), None, 5, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_omega(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rows: Vec<(f64, f64, f64)> = (0..64)
        .map(|_| {
            let (j, b) = (rng.gen_range(0.01..0.3), rng.gen_range(0.01..0.3));
            (j, b, 0.35 * (0.7 * j + 0.3 * b) + rng.gen_range(-0.002..0.002))
        })
        .collect();
    let mut group = c.benchmark_group("select_omega");
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| select_omega(black_box(&rows), 0.001, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_plans(c: &mut Criterion) {
    let spec = ArchitectureSpec::unet();
    let profile = DatasetProfile::tabulated("lymph_node", &[0.1518, 0.0857, 0.0655, 0.0496, 0.0375], None).unwrap();
    let model = DegradationModel::from_constants("unet", Metric::F1, 0.437, 0.0103);
    let constraints: Vec<Constraint> = (0..256)
        .map(|i| {
            let mode = if i % 2 == 0 { Mode::Uniform } else { Mode::LayerWise };
            if i % 4 < 2 {
                Constraint::disk(400_000 + 50_000 * i as u64, mode)
            } else {
                Constraint::accuracy_floor(0.80 + 0.0007 * i as f64, mode)
            }
        })
        .collect();
    let mut group = c.benchmark_group("build_plans");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| build_plans(&spec, &profile, &model, black_box(&constraints), exec))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_profile, bench_omega, bench_plans);
criterion_main!(benches);
