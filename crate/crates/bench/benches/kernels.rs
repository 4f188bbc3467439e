use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordrep_core::metrics::{cka, levenshtein, linear_cka, silhouette_mean, CkaKernel, NeighborRule};
use wordrep_core::subspace::{lda_fit, pca_fit};
use wordrep_core::synthetic::{gaussian_groups, gaussian_matrix};

fn bench_cka(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut g = c.benchmark_group("cka");
    for &(n, d) in &[(117, 768), (1000, 768)] {
        let x = gaussian_matrix(&mut rng, n, d);
        let y = gaussian_matrix(&mut rng, n, d);
        g.bench_with_input(BenchmarkId::new("linear", format!("{n}x{d}")), &(), |b, _| {
            b.iter(|| linear_cka(black_box(&x), black_box(&y)).unwrap())
        });
    }
    let x = gaussian_matrix(&mut rng, 117, 768);
    let y = gaussian_matrix(&mut rng, 117, 768);
    g.bench_function("rbf/117x768", |b| {
        b.iter(|| cka(black_box(&x), black_box(&y), CkaKernel::Rbf { sigma_scale: 1.0 }).unwrap())
    });
    g.finish();
}

fn bench_silhouette(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (x, labels) = gaussian_groups(&mut rng, 14, 6, 768, 3.0);
    c.bench_function("silhouette/84x768", |b| {
        b.iter(|| silhouette_mean(black_box(&x), &labels, NeighborRule::Nearest).unwrap())
    });
}

fn bench_levenshtein(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<(Vec<u8>, Vec<u8>)> = (0..1000)
        .map(|_| {
            let mut seq = || (0..rng.random_range(3..12)).map(|_| rng.random_range(0..39u8)).collect::<Vec<u8>>();
            (seq(), seq())
        })
        .collect();
    c.bench_function("levenshtein/1000 pairs", |b| {
        b.iter(|| pairs.iter().map(|(a, b)| levenshtein(a, b)).sum::<usize>())
    });
}

fn bench_projections(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, labels) = gaussian_groups(&mut rng, 9, 13, 768, 5.0);
    c.bench_function("lda_fit/117x768", |b| b.iter(|| lda_fit(black_box(&x), &labels, 8).unwrap()));
    c.bench_function("pca_fit/117x768", |b| b.iter(|| pca_fit(black_box(&x), 8).unwrap()));
}

criterion_group!(benches, bench_cka, bench_silhouette, bench_levenshtein, bench_projections);
criterion_main!(benches);
