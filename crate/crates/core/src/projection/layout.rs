use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gradients::{attraction_grad, attraction_loss, repulsion_loss, sq_dist, Point};
use super::{pca_2d, KnnGraph, ProjectionError};

/// Squared distances below this are raised to it in repulsion steps.
const MIN_REPULSION_SQ_DIST: f64 = 1e-3;
const GRAD_CLIP: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub k_neighbors: usize,
    pub epochs: usize,
    /// Initial step size, decayed linearly to 0 over the epochs.
    pub learning_rate: f64,
    pub negatives_per_edge: usize,
    pub repulsion_weight: f64,
    pub rng_seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            k_neighbors: 15,
            epochs: 200,
            learning_rate: 1.0,
            negatives_per_edge: 5,
            repulsion_weight: 1.0,
            rng_seed: 42,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), ProjectionError> {
        if self.k_neighbors < 2 {
            return Err(ProjectionError::InvalidInput("k_neighbors must be ≥ 2".into()));
        }
        if self.epochs < 1 {
            return Err(ProjectionError::InvalidInput("epochs must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.repulsion_weight >= 0.0) {
            return Err(ProjectionError::InvalidInput("bad learning rate or repulsion weight".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLayout {
    pub point_ids: Vec<String>,
    pub coords: Vec<Point>,
    /// Objective after each epoch.
    pub loss_trace: Vec<f64>,
}

impl ReferenceLayout {
    pub fn with_ids(mut self, ids: Vec<String>) -> Self {
        assert_eq!(ids.len(), self.coords.len());
        self.point_ids = ids;
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

#[inline]
fn repulsion_step(yi: Point, yn: Point, gamma: f64) -> Point {
    let d2 = sq_dist(yi, yn).max(MIN_REPULSION_SQ_DIST);
    let c = -2.0 * gamma / (d2 * (1.0 + d2));
    [c * (yi[0] - yn[0]), c * (yi[1] - yn[1])]
}

fn objective(y: &[Point], edges: &[(u32, u32, f64)], negatives: &[(u32, u32)], gamma: f64) -> f64 {
    let attract: f64 = edges
        .iter()
        .map(|&(i, j, w)| attraction_loss(y[i as usize], y[j as usize], w))
        .sum();
    let repel: f64 = negatives
        .iter()
        .map(|&(i, n)| {
            let (a, b) = (y[i as usize], y[n as usize]);
            if sq_dist(a, b) < MIN_REPULSION_SQ_DIST {
                // same floor as the update step
                let d2 = MIN_REPULSION_SQ_DIST;
                gamma * (d2.ln_1p() - d2.ln())
            } else {
                repulsion_loss(a, b, gamma)
            }
        })
        .sum();
    attract + repel
}

/// Stochastic attraction/repulsion optimization from a PCA start.
///
/// Every epoch visits each directed edge once in shuffled order: the head
/// moves along the weighted attraction gradient, then away from
/// `negatives_per_edge` uniformly drawn points. The loss trace evaluates
/// the objective on the full edge set plus one fixed negative sample drawn
/// up front, so successive entries are comparable.
pub fn optimize_layout<V: AsRef<[f32]>>(
    x: &[V],
    graph: &KnnGraph,
    params: &LayoutParams,
) -> Result<ReferenceLayout, ProjectionError> {
    params.validate()?;
    if x.len() != graph.n {
        return Err(ProjectionError::InvalidInput(format!(
            "{} points but graph has {}",
            x.len(),
            graph.n
        )));
    }
    let n = graph.n;
    let mut y = pca_2d(x);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut edges = graph.directed_edges();
    let gamma = params.repulsion_weight;

    let draw_negative = |rng: &mut ChaCha8Rng, i: u32| -> Option<u32> {
        if n < 2 {
            return None;
        }
        let c = rng.random_range(0..n as u32 - 1);
        Some(if c >= i { c + 1 } else { c })
    };
    let mut eval_negatives = Vec::with_capacity(edges.len() * params.negatives_per_edge);
    for &(i, _, _) in &edges {
        for _ in 0..params.negatives_per_edge {
            if let Some(m) = draw_negative(&mut rng, i) {
                eval_negatives.push((i, m));
            }
        }
    }

    let mut loss_trace = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        let lr = params.learning_rate * (1.0 - epoch as f64 / params.epochs as f64);
        edges.shuffle(&mut rng);
        for &(i, j, w) in &edges {
            let (i, j) = (i as usize, j as usize);
            let g = attraction_grad(y[i], y[j], w);
            y[i][0] -= lr * clip(g[0]);
            y[i][1] -= lr * clip(g[1]);
            for _ in 0..params.negatives_per_edge {
                let Some(m) = draw_negative(&mut rng, i as u32) else { break };
                let g = repulsion_step(y[i], y[m as usize], gamma);
                y[i][0] -= lr * clip(g[0]);
                y[i][1] -= lr * clip(g[1]);
            }
        }
        if let Some(point) = y.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(ProjectionError::NonFinite { epoch, point });
        }
        loss_trace.push(objective(&y, &edges, &eval_negatives, gamma));
    }

    Ok(ReferenceLayout {
        point_ids: (0..n).map(|i| i.to_string()).collect(),
        coords: y,
        loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_attraction_pulls_together() {
        let x = vec![vec![0.0f32, 0.0], vec![3.0, 0.0]];
        let graph = KnnGraph::from_edges(2, vec![(0, 1, 1.0)]);
        let params = LayoutParams {
            negatives_per_edge: 0,
            epochs: 50,
            ..Default::default()
        };
        let init = pca_2d(&x);
        let out = optimize_layout(&x, &graph, &params).unwrap();
        assert!(sq_dist(out.coords[0], out.coords[1]) < sq_dist(init[0], init[1]));
        assert!(out.loss_trace.last().unwrap() < &out.loss_trace[0]);
    }

    #[test]
    fn seed_determinism() {
        let x: Vec<Vec<f32>> = (0..40).map(|i| vec![(i % 7) as f32, (i / 7) as f32, (i % 3) as f32]).collect();
        let g = super::super::knn_graph(&x, 5).unwrap();
        let p = LayoutParams {
            epochs: 30,
            ..Default::default()
        };
        let a = optimize_layout(&x, &g, &p).unwrap();
        let b = optimize_layout(&x, &g, &p).unwrap();
        assert_eq!(a, b);
        let c = optimize_layout(&x, &g, &LayoutParams { rng_seed: 7, ..p }).unwrap();
        assert_ne!(a.coords, c.coords);
    }

    #[test]
    fn invalid_params() {
        assert!(LayoutParams { k_neighbors: 1, ..Default::default() }.validate().is_err());
        assert!(LayoutParams { epochs: 0, ..Default::default() }.validate().is_err());
    }
}
