//! Central finite-difference checks of the analytic gradients.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wildvis_core::projection::gradients::{attraction_grad, attraction_loss, repulsion_grad, repulsion_loss, Point};
use wildvis_core::projection::Mlp;

pub const EPS: f64 = 1e-5;
/// Keeps the ratio meaningful when both derivatives are ~0.
const REL_FLOOR: f64 = 1e-6;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + EPS) - f(x - EPS)) / (2.0 * EPS)
}

fn point(rng: &mut ChaCha8Rng) -> Point {
    [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]
}

fn pair_check(
    loss: fn(Point, Point, f64) -> f64,
    grad: fn(Point, Point, f64) -> Point,
    configs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < configs {
        let (a, b, w) = (point(&mut rng), point(&mut rng), rng.random_range(0.05..2.0));
        // keep away from the d = 0 singularity of the repulsion term
        let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        if d2 < 0.05 {
            continue;
        }
        let g = grad(a, b, w);
        for axis in 0..2 {
            let num_a = central(
                |t| {
                    let mut p = a;
                    p[axis] = t;
                    loss(p, b, w)
                },
                a[axis],
            );
            let num_b = central(
                |t| {
                    let mut p = b;
                    p[axis] = t;
                    loss(a, p, w)
                },
                b[axis],
            );
            worst = worst.max(rel_err(g[axis], num_a)).max(rel_err(-g[axis], num_b));
        }
        done += 1;
    }
    worst
}

/// Max relative error of the attraction gradient over `configs` random pairs.
pub fn attraction(configs: usize, seed: u64) -> f64 {
    pair_check(attraction_loss, attraction_grad, configs, seed)
}

pub fn repulsion(configs: usize, seed: u64) -> f64 {
    pair_check(repulsion_loss, repulsion_grad, configs, seed)
}

/// Max relative error of the projector's MSE gradient over every parameter
/// of `configs` random small networks and batches. Configurations with a
/// hidden pre-activation within 1e-3 of the ReLU kink are redrawn.
pub fn projector_mse(configs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < configs {
        let (input, hidden, batch) = (rng.random_range(2..6), rng.random_range(2..6), rng.random_range(1..6));
        let mlp = Mlp::new_random(input, hidden, rng.random());
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..input).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<[f64; 2]> = (0..batch).map(|_| point(&mut rng)).collect();
        let near_kink = xs.iter().any(|x| {
            (0..hidden).any(|h| {
                let row = &mlp.params[h * input..(h + 1) * input];
                let b = mlp.params[hidden * input + h];
                let pre: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
                pre.abs() < 1e-3
            })
        });
        if near_kink {
            continue;
        }
        let g = mlp.gradient(&xs, &ys);
        for k in 0..mlp.params.len() {
            let num = central(
                |t| {
                    let mut m = mlp.clone();
                    m.params[k] = t;
                    m.loss(&xs, &ys)
                },
                mlp.params[k],
            );
            worst = worst.max(rel_err(g[k], num));
        }
        done += 1;
    }
    worst
}
