//! K-means against an exhaustive search over all two-way partitions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seasynth::waterops::{kmeans, KMeansConfig};

fn sse(points: &[[f64; 2]], mask: u32) -> (f64, [[f64; 2]; 2]) {
    let mut sums = [[0.0; 2]; 2];
    let mut counts = [0.0; 2];
    for (i, p) in points.iter().enumerate() {
        let g = ((mask >> i) & 1) as usize;
        sums[g][0] += p[0];
        sums[g][1] += p[1];
        counts[g] += 1.0;
    }
    let c = [0, 1].map(|g| [sums[g][0] / counts[g], sums[g][1] / counts[g]]);
    let cost = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let q = c[((mask >> i) & 1) as usize];
            (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
        })
        .sum();
    (cost, c)
}

/// Optimal 2-partition by brute force; the first point is pinned to group 0.
fn exhaustive_two_means(points: &[[f64; 2]]) -> (f64, [[f64; 2]; 2]) {
    let n = points.len() as u32;
    (1..(1u32 << (n - 1)))
        .map(|m| sse(points, m << 1))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

fn two_blobs(seed: u64, n: usize) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let centre = if i % 2 == 0 { [-12.0, 5.0] } else { [9.0, -7.0] };
            [
                centre[0] + rng.random_range(-3.0..3.0),
                centre[1] + rng.random_range(-3.0..3.0),
            ]
        })
        .collect()
}

#[test]
fn two_blob_centroids_match_exhaustive_optimum() {
    for seed in 0..10 {
        let pts = two_blobs(seed, 12 + (seed as usize % 9));
        let (best, oracle) = exhaustive_two_means(&pts);
        let r = kmeans(&pts, &KMeansConfig::new(2, seed));
        assert!((r.inertia() - best).abs() <= 1e-6 * best.max(1.0));
        let mut got = r.centroids.clone();
        let mut want = oracle.to_vec();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        want.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (g, w) in got.iter().zip(&want) {
            assert!((g[0] - w[0]).abs() <= 1e-6 && (g[1] - w[1]).abs() <= 1e-6, "{g:?} vs {w:?}");
        }
    }
}

#[test]
fn objective_never_increases() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..150)
            .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
            .collect();
        let r = kmeans(&pts, &KMeansConfig::new(10, seed));
        for w in r.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0));
        }
    }
}
