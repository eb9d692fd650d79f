use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synss::resolution::{name_generators, GeneratorSpec};
use synss::specseq::{parse_seeds, SpectralSequence};
use synss::synthetic::synthesize;
use synss::{F2Matrix, MilnorElement, Resolution};

const SEEDS: &str = include_str!("../../../fixtures/seeds.txt");

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> F2Matrix {
    let mut m = F2Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.gen());
        }
    }
    m
}

fn linalg(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_matrix(&mut rng, 512, 512);
    c.bench_function("rank 512x512", |b| b.iter(|| black_box(&m).rank()));
    c.bench_function("kernel 512x512", |b| b.iter(|| black_box(&m).kernel_basis()));
}

fn steenrod(c: &mut Criterion) {
    // A(2) has 64 basis elements, one bit each.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs: Vec<(MilnorElement, MilnorElement)> =
        (0..256).map(|_| (MilnorElement(rng.gen()), MilnorElement(rng.gen()))).collect();
    c.bench_function("milnor products x256", |b| {
        b.iter(|| pairs.iter().fold(MilnorElement(0), |acc, &(x, y)| acc + x * y))
    });
}

fn resolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("resolution");
    g.sample_size(10);
    g.bench_function("compute 10x60", |b| b.iter(|| Resolution::compute(10, 60).unwrap()));
    g.bench_function("compute 30x120", |b| b.iter(|| Resolution::compute(30, 120).unwrap()));
    let res = Resolution::compute(30, 120).unwrap();
    let text = res.to_checkpoint_string().unwrap();
    g.bench_function("checkpoint load 30x120", |b| b.iter(|| Resolution::from_checkpoint_str(&text).unwrap()));
    g.finish();
}

fn pages_and_chart(c: &mut Criterion) {
    let res = Resolution::compute(30, 120).unwrap();
    let naming = name_generators(&res, &GeneratorSpec::defaults()).unwrap();
    let seeds = parse_seeds(SEEDS, "seeds.txt").unwrap();
    let mut g = c.benchmark_group("pages");
    g.sample_size(10);
    g.bench_function("d2-d4 and chart 30x120", |b| {
        b.iter(|| {
            let ss = SpectralSequence::run(&res, &naming, &seeds).unwrap();
            synthesize(&ss).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, linalg, steenrod, resolution, pages_and_chart);
criterion_main!(benches);
