use std::collections::BTreeMap;

use rayon::prelude::*;

use super::ProjectionError;

pub const MAX_EXACT_KNN_POINTS: usize = 20_000;

const SIGMA_TOLERANCE: f64 = 1e-6;
const SIGMA_MAX_STEPS: usize = 200;

/// Fuzzy k-NN graph: per-point neighbor lists plus symmetrized edges.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    pub n: usize,
    /// (neighbor, distance) sorted by distance, then index.
    pub neighbors: Vec<Vec<(u32, f64)>>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Undirected edges (i < j) with symmetrized weight, sorted by (i, j).
    pub edges: Vec<(u32, u32, f64)>,
    /// Points whose neighbors were all exact duplicates (ρ = 0, σ = 1 used).
    pub degenerate_points: usize,
}

impl KnnGraph {
    /// A graph from explicit undirected edges, bypassing neighbor search.
    pub fn from_edges(n: usize, edges: Vec<(u32, u32, f64)>) -> Self {
        Self {
            n,
            neighbors: vec![Vec::new(); n],
            rho: vec![0.0; n],
            sigma: vec![1.0; n],
            edges,
            degenerate_points: 0,
        }
    }

    /// Both directions of every undirected edge as (head, tail, weight).
    pub fn directed_edges(&self) -> Vec<(u32, u32, f64)> {
        let mut out = Vec::with_capacity(self.edges.len() * 2);
        for &(i, j, w) in &self.edges {
            out.push((i, j, w));
            out.push((j, i, w));
        }
        out.sort_unstable_by_key(|e| (e.0, e.1));
        out
    }
}

pub(crate) fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum()
}

/// Σ_j exp(-(d_j - ρ)/σ)
pub(crate) fn membership_sum(dists: &[f64], rho: f64, sigma: f64) -> f64 {
    dists.iter().map(|d| (-((d - rho).max(0.0)) / sigma).exp()).sum()
}

/// Bisection for σ with Σ_j exp(-(d_j - ρ)/σ) = target. The sum is
/// increasing in σ, from (#ties at ρ) toward k.
pub(crate) fn calibrate_sigma(dists: &[f64], rho: f64, target: f64) -> f64 {
    let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
    for _ in 0..SIGMA_MAX_STEPS {
        let s = membership_sum(dists, rho, mid);
        if (s - target).abs() < SIGMA_TOLERANCE {
            break;
        }
        if s > target {
            hi = mid;
            mid = (lo + hi) / 2.0;
        } else {
            lo = mid;
            mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
        }
    }
    mid
}

fn nearest<V: AsRef<[f32]> + Sync>(x: &[V], i: usize, k: usize) -> Vec<(u32, f64)> {
    let xi = x[i].as_ref();
    let mut all: Vec<(u32, f64)> = x
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, xj)| (j as u32, sq_dist(xi, xj.as_ref()).sqrt()))
        .collect();
    let by_dist = |a: &(u32, f64), b: &(u32, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if all.len() > k {
        all.select_nth_unstable_by(k - 1, by_dist);
        all.truncate(k);
    }
    all.sort_unstable_by(by_dist);
    all
}

/// Exact k-NN with per-point bandwidth calibration and fuzzy-union
/// symmetrization `w = a + b - a·b`.
pub fn knn_graph<V: AsRef<[f32]> + Sync>(x: &[V], k: usize) -> Result<KnnGraph, ProjectionError> {
    let n = x.len();
    if k < 2 {
        return Err(ProjectionError::InvalidInput("k must be at least 2".into()));
    }
    if n <= k {
        return Err(ProjectionError::InvalidInput(format!(
            "need more than k={k} points, got {n}"
        )));
    }
    if n > MAX_EXACT_KNN_POINTS {
        return Err(ProjectionError::TooLarge {
            n,
            max: MAX_EXACT_KNN_POINTS,
        });
    }
    let dim = x[0].as_ref().len();
    if let Some(bad) = x.iter().position(|v| v.as_ref().len() != dim) {
        return Err(ProjectionError::DimensionMismatch {
            expected: dim,
            got: x[bad].as_ref().len(),
        });
    }
    if x.iter().any(|v| v.as_ref().iter().any(|c| !c.is_finite())) {
        return Err(ProjectionError::InvalidInput("non-finite input".into()));
    }

    let neighbors: Vec<Vec<(u32, f64)>> = (0..n).into_par_iter().map(|i| nearest(x, i, k)).collect();
    let target = (k as f64).log2();
    let mut rho = vec![0.0; n];
    let mut sigma = vec![1.0; n];
    let mut degenerate_points = 0;
    let mut directed: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    for (i, nb) in neighbors.iter().enumerate() {
        let dists: Vec<f64> = nb.iter().map(|p| p.1).collect();
        if dists.iter().all(|&d| d == 0.0) {
            degenerate_points += 1;
        } else {
            rho[i] = dists[0];
            sigma[i] = calibrate_sigma(&dists, rho[i], target);
        }
        for &(j, d) in nb {
            let w = (-((d - rho[i]).max(0.0)) / sigma[i]).exp();
            let i = i as u32;
            if i < j {
                directed.entry((i, j)).or_default().0 = w;
            } else {
                directed.entry((j, i)).or_default().1 = w;
            }
        }
    }
    let edges = directed
        .into_iter()
        .map(|((i, j), (a, b))| (i, j, a + b - a * b))
        .collect();
    Ok(KnnGraph {
        n,
        neighbors,
        rho,
        sigma,
        edges,
        degenerate_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_hits_log2_k() {
        let d = [1.0, 2.0, 3.0, 4.0];
        let s = calibrate_sigma(&d, 1.0, 2.0);
        assert!((membership_sum(&d, 1.0, s) - 2.0).abs() <= 1e-3);
    }

    #[test]
    fn equilateral_triangle_is_complete_and_symmetric() {
        // pairwise squared distances are exactly 2
        let x = vec![vec![1.0f32, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let g = knn_graph(&x, 2).unwrap();
        assert_eq!(g.edges.len(), 3);
        let w0 = g.edges[0].2;
        for e in &g.edges {
            assert!((e.2 - w0).abs() < 1e-6, "{:?}", g.edges);
        }
    }

    #[test]
    fn duplicates_fall_back() {
        let x = vec![vec![1.0f32, 1.0]; 5];
        let g = knn_graph(&x, 3).unwrap();
        assert_eq!(g.degenerate_points, 5);
        assert!(g.edges.iter().all(|e| (e.2 - 1.0).abs() < 1e-12));
        assert!(g.sigma.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn rejects_bad_sizes() {
        let x = vec![vec![0.0f32]; 3];
        assert!(knn_graph(&x, 3).is_err());
        assert!(knn_graph(&x, 1).is_err());
        let big = vec![vec![0.0f32]; MAX_EXACT_KNN_POINTS + 1];
        assert!(matches!(knn_graph(&big, 5), Err(ProjectionError::TooLarge { .. })));
    }
}
