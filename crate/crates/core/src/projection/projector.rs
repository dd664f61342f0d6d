use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use super::{row_f64, ProjectionError, ReferenceLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorParams {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam step size, cosine-decayed to 1% of this value.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ProjectorParams {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 400,
            batch_size: 64,
            learning_rate: 1e-2,
            seed: 7,
        }
    }
}

/// Two-layer perceptron `W2 · relu(W1 · z + b1) + b2` in f64, used for
/// training. Parameters live in one flat vector laid out as
/// `[W1 (hidden × input, row-major), b1, W2 (2 × hidden, row-major), b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn param_count(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + 2 * hidden + 2
    }

    pub fn new_random(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; Self::param_count(input, hidden)];
        let w1 = Normal::new(0.0, (2.0 / input as f64).sqrt()).unwrap();
        for p in &mut params[..hidden * input] {
            *p = w1.sample(&mut rng);
        }
        let w2 = Normal::new(0.0, (1.0 / hidden as f64).sqrt()).unwrap();
        let off = hidden * input + hidden;
        for p in &mut params[off..off + 2 * hidden] {
            *p = w2.sample(&mut rng);
        }
        Self { input, hidden, params }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.input;
        let w2 = b1 + self.hidden;
        let b2 = w2 + 2 * self.hidden;
        (b1, w2, b2)
    }

    /// Returns the output; fills `pre` with hidden pre-activations.
    fn forward_into(&self, z: &[f64], pre: &mut [f64]) -> [f64; 2] {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        for h in 0..self.hidden {
            let row = &p[h * self.input..(h + 1) * self.input];
            pre[h] = row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + p[b1 + h];
        }
        let mut out = [p[b2], p[b2 + 1]];
        for h in 0..self.hidden {
            let a = pre[h].max(0.0);
            out[0] += p[w2 + h] * a;
            out[1] += p[w2 + self.hidden + h] * a;
        }
        out
    }

    pub fn forward(&self, z: &[f64]) -> [f64; 2] {
        let mut pre = vec![0.0; self.hidden];
        self.forward_into(z, &mut pre)
    }

    /// Mean over points of the squared Euclidean error.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[[f64; 2]]) -> f64 {
        let mut pre = vec![0.0; self.hidden];
        let total: f64 = inputs
            .iter()
            .zip(targets)
            .map(|(z, t)| {
                let o = self.forward_into(z, &mut pre);
                (o[0] - t[0]).powi(2) + (o[1] - t[1]).powi(2)
            })
            .sum();
        total / inputs.len() as f64
    }

    /// Gradient of [`Mlp::loss`] with respect to the flat parameters.
    pub fn gradient(&self, inputs: &[Vec<f64>], targets: &[[f64; 2]]) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_gradient(inputs.iter().map(Vec::as_slice), targets.iter(), inputs.len(), &mut grad);
        grad
    }

    fn accumulate_gradient<'a>(
        &self,
        inputs: impl Iterator<Item = &'a [f64]>,
        targets: impl Iterator<Item = &'a [f64; 2]>,
        count: usize,
        grad: &mut [f64],
    ) {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let scale = 2.0 / count as f64;
        let mut pre = vec![0.0; self.hidden];
        for (z, t) in inputs.zip(targets) {
            let o = self.forward_into(z, &mut pre);
            let e = [scale * (o[0] - t[0]), scale * (o[1] - t[1])];
            grad[b2] += e[0];
            grad[b2 + 1] += e[1];
            for h in 0..self.hidden {
                if pre[h] <= 0.0 {
                    continue;
                }
                grad[w2 + h] += e[0] * pre[h];
                grad[w2 + self.hidden + h] += e[1] * pre[h];
                let back = e[0] * p[w2 + h] + e[1] * p[w2 + self.hidden + h];
                grad[b1 + h] += back;
                let row = &mut grad[h * self.input..(h + 1) * self.input];
                row.iter_mut().zip(z).for_each(|(g, zi)| *g += back * zi);
            }
        }
    }
}

/// Per-language parametric projector with f32 parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorModel {
    pub language: String,
    pub input_dim: usize,
    pub hidden: usize,
    pub input_mean: Vec<f32>,
    pub input_scale: Vec<f32>,
    pub w1: Vec<f32>,
    pub b1: Vec<f32>,
    pub w2: Vec<f32>,
    pub b2: Vec<f32>,
    pub train_rmse: f32,
}

impl ProjectorModel {
    pub fn project(&self, v: &[f32]) -> Result<(f64, f64), ProjectionError> {
        if v.len() != self.input_dim {
            return Err(ProjectionError::DimensionMismatch {
                expected: self.input_dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ProjectionError::InvalidInput("non-finite embedding".into()));
        }
        let d = self.input_dim;
        let z: Vec<f64> = v
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_scale))
            .map(|(x, (m, s))| (f64::from(*x) - f64::from(*m)) / f64::from(*s))
            .collect();
        let mut out = [f64::from(self.b2[0]), f64::from(self.b2[1])];
        for h in 0..self.hidden {
            let row = &self.w1[h * d..(h + 1) * d];
            let a = row.iter().zip(&z).map(|(w, zi)| f64::from(*w) * zi).sum::<f64>()
                + f64::from(self.b1[h]);
            if a > 0.0 {
                out[0] += f64::from(self.w2[h]) * a;
                out[1] += f64::from(self.w2[self.hidden + h]) * a;
            }
        }
        Ok((out[0], out[1]))
    }

    /// Like [`ProjectorModel::project`], but refuses conversations in a
    /// language other than the one this model was trained for.
    pub fn project_for(&self, language: &str, v: &[f32]) -> Result<(f64, f64), ProjectionError> {
        if !self.language.eq_ignore_ascii_case(language) {
            return Err(ProjectionError::LanguageMismatch {
                model: self.language.clone(),
                requested: language.to_string(),
            });
        }
        self.project(v)
    }

    pub fn rmse_against<V: AsRef<[f32]>>(&self, x: &[V], targets: &[[f64; 2]]) -> Result<f64, ProjectionError> {
        let mut total = 0.0;
        for (v, t) in x.iter().zip(targets) {
            let (px, py) = self.project(v.as_ref())?;
            total += (px - t[0]).powi(2) + (py - t[1]).powi(2);
        }
        Ok((total / x.len().max(1) as f64).sqrt())
    }
}

/// Fits a projector to reproduce `layout` from `x` by mini-batch Adam on the
/// mean squared error.
///
/// Inputs are standardized per dimension and targets by one shared scale;
/// both transforms are folded into the stored parameters.
pub fn fit_projector<V: AsRef<[f32]>>(
    x: &[V],
    layout: &ReferenceLayout,
    language: &str,
    params: &ProjectorParams,
) -> Result<ProjectorModel, ProjectionError> {
    let n = x.len();
    if n == 0 || n != layout.coords.len() {
        return Err(ProjectionError::InvalidInput(format!(
            "{n} inputs for {} layout points",
            layout.coords.len()
        )));
    }
    if params.hidden == 0 || params.batch_size == 0 || params.epochs == 0 {
        return Err(ProjectionError::InvalidInput("hidden, batch_size and epochs must be ≥ 1".into()));
    }
    let d = x[0].as_ref().len();
    if let Some(bad) = x.iter().find(|v| v.as_ref().len() != d) {
        return Err(ProjectionError::DimensionMismatch {
            expected: d,
            got: bad.as_ref().len(),
        });
    }

    let rows: Vec<Vec<f64>> = x.iter().map(row_f64).collect();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n as f64;
            if var > 1e-24 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    // round the standardization to f32 first so training sees exactly what
    // the stored model will compute
    let mean32: Vec<f32> = mean.iter().map(|&m| m as f32).collect();
    let scale32: Vec<f32> = scale.iter().map(|&s| s as f32).collect();
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(mean32.iter().zip(&scale32))
                .map(|(v, (m, s))| (v - f64::from(*m)) / f64::from(*s))
                .collect()
        })
        .collect();

    let y_mean = [
        layout.coords.iter().map(|c| c[0]).sum::<f64>() / n as f64,
        layout.coords.iter().map(|c| c[1]).sum::<f64>() / n as f64,
    ];
    let y_var = layout
        .coords
        .iter()
        .map(|c| (c[0] - y_mean[0]).powi(2) + (c[1] - y_mean[1]).powi(2))
        .sum::<f64>()
        / (2 * n) as f64;
    let y_scale = if y_var > 1e-24 { y_var.sqrt() } else { 1.0 };
    let targets: Vec<[f64; 2]> = layout
        .coords
        .iter()
        .map(|c| [(c[0] - y_mean[0]) / y_scale, (c[1] - y_mean[1]) / y_scale])
        .collect();

    let mut mlp = Mlp::new_random(d, params.hidden, params.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(1));
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut m = vec![0.0; mlp.params.len()];
    let mut v = vec![0.0; mlp.params.len()];
    let mut grad = vec![0.0; mlp.params.len()];
    let mut order: Vec<usize> = (0..n).collect();
    let steps_per_epoch = n.div_ceil(params.batch_size);
    let total_steps = (params.epochs * steps_per_epoch) as f64;
    let mut step = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            mlp.accumulate_gradient(
                batch.iter().map(|&i| z[i].as_slice()),
                batch.iter().map(|&i| &targets[i]),
                batch.len(),
                &mut grad,
            );
            step += 1;
            let progress = step as f64 / total_steps;
            let lr = params.learning_rate * (0.01 + 0.99 * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()));
            let bc1 = 1.0 - beta1.powi(step as i32);
            let bc2 = 1.0 - beta2.powi(step as i32);
            for k in 0..mlp.params.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
                mlp.params[k] -= lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + eps);
            }
        }
        if mlp.params.iter().any(|p| !p.is_finite()) {
            return Err(ProjectionError::NonFinite { epoch: step, point: 0 });
        }
    }

    let h = params.hidden;
    let (b1_off, w2_off, b2_off) = mlp.offsets();
    let p = &mlp.params;
    let mut model = ProjectorModel {
        language: language.to_string(),
        input_dim: d,
        hidden: h,
        input_mean: mean32,
        input_scale: scale32,
        w1: p[..b1_off].iter().map(|&w| w as f32).collect(),
        b1: p[b1_off..w2_off].iter().map(|&w| w as f32).collect(),
        w2: p[w2_off..b2_off].iter().map(|&w| (w * y_scale) as f32).collect(),
        b2: vec![
            (p[b2_off] * y_scale + y_mean[0]) as f32,
            (p[b2_off + 1] * y_scale + y_mean[1]) as f32,
        ],
        train_rmse: 0.0,
    };
    if [&model.w1, &model.b1, &model.w2, &model.b2].iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(ProjectionError::NonFinite { epoch: params.epochs, point: 0 });
    }
    model.train_rmse = model.rmse_against(x, &layout.coords)? as f32;
    Ok(model)
}

/// Language → projector lookup, case-insensitive on the language name.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    models: HashMap<String, Arc<ProjectorModel>>,
}

impl ModelRegistry {
    pub fn insert(&mut self, model: ProjectorModel) {
        self.models.insert(model.language.to_lowercase(), Arc::new(model));
    }

    pub fn get(&self, language: &str) -> Option<&Arc<ProjectorModel>> {
        self.models.get(&language.to_lowercase())
    }

    pub fn languages(&self) -> Vec<String> {
        let mut v: Vec<String> = self.models.values().map(|m| m.language.clone()).collect();
        v.sort();
        v
    }

    /// Loads every `*.wvpm` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, ProjectionError> {
        let mut reg = Self::default();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "wvpm"))
            .collect();
        paths.sort();
        for p in paths {
            reg.insert(super::decode_model(&std::fs::read(&p)?)?);
        }
        Ok(reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_problem(n: usize, d: usize) -> (Vec<Vec<f32>>, ReferenceLayout) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f32>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect();
        let a: Vec<[f64; 2]> = (0..d).map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let coords = x
            .iter()
            .map(|r| {
                let mut out = [1.5, -2.0];
                for (xi, ai) in r.iter().zip(&a) {
                    out[0] += f64::from(*xi) * ai[0];
                    out[1] += f64::from(*xi) * ai[1];
                }
                out
            })
            .collect();
        let layout = ReferenceLayout {
            point_ids: (0..n).map(|i| i.to_string()).collect(),
            coords,
            loss_trace: vec![],
        };
        (x, layout)
    }

    fn diagonal(c: &[[f64; 2]]) -> f64 {
        super::super::metrics::bbox_diagonal(c)
    }

    #[test]
    fn fits_an_affine_target() {
        let (x, layout) = affine_problem(400, 8);
        let params = ProjectorParams {
            epochs: 1_000,
            learning_rate: 3e-2,
            ..Default::default()
        };
        let model = fit_projector(&x, &layout, "English", &params).unwrap();
        let diag = diagonal(&layout.coords);
        assert!(
            f64::from(model.train_rmse) <= 1e-3 * diag,
            "rmse {} diag {diag}",
            model.train_rmse
        );
    }

    #[test]
    fn train_rmse_is_reproducible_from_the_model() {
        let (x, layout) = affine_problem(100, 4);
        let params = ProjectorParams { epochs: 20, ..Default::default() };
        let model = fit_projector(&x, &layout, "English", &params).unwrap();
        assert_eq!(model.rmse_against(&x, &layout.coords).unwrap() as f32, model.train_rmse);
        let again = fit_projector(&x, &layout, "English", &params).unwrap();
        assert_eq!(model, again);
    }

    #[test]
    fn dimension_and_language_checks() {
        let (x, layout) = affine_problem(50, 4);
        let params = ProjectorParams { epochs: 2, ..Default::default() };
        let model = fit_projector(&x, &layout, "English", &params).unwrap();
        assert!(matches!(
            model.project(&[0.0; 3]),
            Err(ProjectionError::DimensionMismatch { expected: 4, got: 3 })
        ));
        assert!(model.project_for("english", &x[0]).is_ok());
        assert!(matches!(
            model.project_for("Spanish", &x[0]),
            Err(ProjectionError::LanguageMismatch { .. })
        ));
    }

    #[test]
    fn registry_is_case_insensitive() {
        let (x, layout) = affine_problem(30, 4);
        let params = ProjectorParams { epochs: 1, ..Default::default() };
        let mut reg = ModelRegistry::default();
        reg.insert(fit_projector(&x, &layout, "English", &params).unwrap());
        assert!(reg.get("english").is_some());
        assert!(reg.get("Spanish").is_none());
        assert_eq!(reg.languages(), ["English"]);
    }
}
