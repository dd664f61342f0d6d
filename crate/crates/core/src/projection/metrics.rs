use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::gradients::Point;

/// Diagonal of the axis-aligned bounding box; 0 for empty input.
pub fn bbox_diagonal(points: &[Point]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
}

/// Root of the mean squared Euclidean error between paired points.
pub fn rmse(a: &[Point], b: &[Point]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
        .sum();
    (s / a.len() as f64).sqrt()
}

/// Mean silhouette coefficient with Euclidean distance. Points in singleton
/// clusters score 0. Returns 0 when there are fewer than two clusters.
pub fn silhouette(points: &[Point], labels: &[usize]) -> f64 {
    assert_eq!(points.len(), labels.len());
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return 0.0;
    }
    let n = points.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
                sums[labels[j]] += d;
            }
        }
        let own = labels[i];
        if sizes[own] < 2 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}

/// Lloyd's k-means with k-means++ seeding. Returns a label per row.
pub fn kmeans<V: AsRef<[f32]>>(x: &[V], k: usize, iterations: usize, seed: u64) -> Vec<usize> {
    let n = x.len();
    if n == 0 || k == 0 {
        return vec![0; n];
    }
    let k = k.min(n);
    let d = x[0].as_ref().len();
    let dist = |a: &[f32], c: &[f64]| -> f64 {
        a.iter().zip(c).map(|(&u, &v)| (f64::from(u) - v).powi(2)).sum()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(x[rng.random_range(0..n)].as_ref().iter().map(|&v| f64::from(v)).collect());
    let mut nearest: Vec<f64> = x.iter().map(|r| dist(r.as_ref(), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if t < w {
                    idx = i;
                    break;
                }
                t -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c: Vec<f64> = x[pick].as_ref().iter().map(|&v| f64::from(v)).collect();
        for (i, r) in x.iter().enumerate() {
            nearest[i] = nearest[i].min(dist(r.as_ref(), &c));
        }
        centers.push(c);
    }

    let mut labels = vec![0usize; n];
    for _ in 0..iterations.max(1) {
        let mut changed = false;
        for (i, r) in x.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| dist(r.as_ref(), &centers[a]).total_cmp(&dist(r.as_ref(), &centers[b])))
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in x.iter().zip(&labels) {
            counts[l] += 1;
            for (s, &v) in sums[l].iter_mut().zip(r.as_ref()) {
                *s += f64::from(v);
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silhouette_of_separated_pairs() {
        let pts = [[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        // a = 1, b ≈ 10.025 for each point
        let b = (10.0f64 + 101f64.sqrt()) / 2.0;
        let expect = (b - 1.0) / b;
        assert!((silhouette(&pts, &[0, 0, 1, 1]) - expect).abs() < 1e-12);
        assert_eq!(silhouette(&pts, &[0, 0, 0, 0]), 0.0);
    }

    #[test]
    fn diagonal_and_rmse() {
        assert_eq!(bbox_diagonal(&[[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]]), 5.0);
        assert_eq!(rmse(&[[0.0, 0.0], [1.0, 1.0]], &[[3.0, 4.0], [1.0, 1.0]]), (12.5f64).sqrt());
    }

    #[test]
    fn kmeans_recovers_obvious_clusters() {
        let x: Vec<Vec<f32>> = (0..30)
            .map(|i| vec![if i < 15 { 0.0 } else { 50.0 } + (i % 5) as f32 * 0.1, 1.0])
            .collect();
        let l = kmeans(&x, 2, 20, 1);
        assert!(l[..15].iter().all(|&v| v == l[0]));
        assert!(l[15..].iter().all(|&v| v == l[15]));
        assert_ne!(l[0], l[15]);
    }
}
