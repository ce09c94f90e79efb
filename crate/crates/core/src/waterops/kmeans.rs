//! Lloyd's k-means on 2-D points with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves further than this.
    pub tolerance: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centroids: Vec<[f64; 2]>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    /// True when `k` had to be lowered to the number of points.
    pub k_reduced: bool,
}

impl KMeansResult {
    pub fn inertia(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&0.0)
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: [f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn seed_plus_plus(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Every remaining point coincides with a centroid.
            (0..points.len()).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (w, &p) in d2.iter_mut().zip(points) {
            *w = w.min(dist2(p, points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

/// Clusters `points`. `k` is lowered to `points.len()` when there are fewer
/// points than clusters. Panics on an empty input.
///
/// The objective is recorded after every assignment step and asserted to be
/// non-increasing.
pub fn kmeans(points: &[[f64; 2]], cfg: &KMeansConfig) -> KMeansResult {
    assert!(!points.is_empty(), "k-means needs at least one point");
    assert!(cfg.k >= 1, "k must be at least 1");
    let k = cfg.k.min(points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);
    let mut assignments = vec![0; points.len()];
    let mut history = Vec::<f64>::new();
    let mut iterations = 0;

    loop {
        let mut objective = 0.0;
        for (a, &p) in assignments.iter_mut().zip(points) {
            let (j, d) = nearest(p, &centroids);
            *a = j;
            objective += d;
        }
        if let Some(&prev) = history.last() {
            assert!(
                objective <= prev + 1e-12 * prev.max(1.0),
                "k-means objective increased from {prev} to {objective}"
            );
        }
        history.push(objective);
        if iterations == cfg.max_iter {
            break;
        }
        iterations += 1;

        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (&a, &p) in assignments.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            // Empty clusters keep their previous centroid.
            if counts[j] > 0 {
                let n = counts[j] as f64;
                let c = [sums[j][0] / n, sums[j][1] / n];
                shift = shift.max(dist2(c, centroids[j]).sqrt());
                centroids[j] = c;
            }
        }
        if shift < cfg.tolerance {
            // Final assignment against the settled centroids.
            let mut objective = 0.0;
            for (a, &p) in assignments.iter_mut().zip(points) {
                let (j, d) = nearest(p, &centroids);
                *a = j;
                objective += d;
            }
            let prev = *history.last().unwrap();
            assert!(objective <= prev + 1e-12 * prev.max(1.0));
            history.push(objective);
            break;
        }
    }

    KMeansResult {
        centroids,
        assignments,
        objective_history: history,
        iterations,
        k_reduced: k < cfg.k,
    }
}
