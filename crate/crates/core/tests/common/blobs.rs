//! Blob-set evaluation helpers, independent of the crate's own metrics.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wildvis_core::projection::ProjectorModel;
use wildvis_core::synth::sample_blob_point;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Mean silhouette, straight from the definition.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..points.len() {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for j in 0..points.len() {
            if j != i {
                sum[labels[j]] += dist(points[i], points[j]);
                cnt[labels[j]] += 1;
            }
        }
        if cnt[labels[i]] == 0 {
            continue;
        }
        let a = sum[labels[i]] / cnt[labels[i]] as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i] && cnt[c] > 0)
            .map(|c| sum[c] / cnt[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / points.len() as f64
}

pub fn diagonal(points: &[[f64; 2]]) -> f64 {
    let xs = points.iter().map(|p| p[0]);
    let ys = points.iter().map(|p| p[1]);
    let w = xs.clone().fold(f64::NEG_INFINITY, f64::max) - xs.fold(f64::INFINITY, f64::min);
    let h = ys.clone().fold(f64::NEG_INFINITY, f64::max) - ys.fold(f64::INFINITY, f64::min);
    (w * w + h * h).sqrt()
}

pub fn centroids(points: &[[f64; 2]], labels: &[usize]) -> Vec<[f64; 2]> {
    let k = labels.iter().max().unwrap() + 1;
    let mut c = vec![[0.0; 2]; k];
    let mut n = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        c[l][0] += p[0];
        c[l][1] += p[1];
        n[l] += 1.0;
    }
    for (ci, ni) in c.iter_mut().zip(n) {
        ci[0] /= ni;
        ci[1] /= ni;
    }
    c
}

/// Fraction of `trials` fresh blob draws projected nearest their own blob's
/// layout centroid.
pub fn heldout_accuracy(
    model: &ProjectorModel,
    centers: &[Vec<f64>],
    centroids: &[[f64; 2]],
    trials: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut correct = 0;
    for t in 0..trials {
        let c = t % centers.len();
        let v = sample_blob_point(&centers[c], &mut rng);
        let (x, y) = model.project(&v).unwrap();
        let best = (0..centroids.len())
            .min_by(|&a, &b| dist([x, y], centroids[a]).total_cmp(&dist([x, y], centroids[b])))
            .unwrap();
        correct += usize::from(best == c);
    }
    correct as f64 / trials as f64
}
