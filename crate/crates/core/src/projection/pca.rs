use super::row_f64;

const POWER_ITERATIONS: usize = 300;

/// Projection onto the first two principal components, each axis scaled to
/// unit standard deviation. Axes with zero variance stay at zero.
pub fn pca_2d<V: AsRef<[f32]>>(x: &[V]) -> Vec<[f64; 2]> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let d = x[0].as_ref().len();
    let rows: Vec<Vec<f64>> = x.iter().map(row_f64).collect();
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(2);
    for c in 0..2 {
        // deterministic, non-symmetric start
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + c * 13) % 11) as f64 / 10.0).collect();
        for _ in 0..POWER_ITERATIONS {
            let mut w = cov_times(&centered, &v);
            for prev in &components {
                let dot: f64 = w.iter().zip(prev).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-300 {
                v = vec![0.0; d];
                break;
            }
            v = w.into_iter().map(|a| a / norm).collect();
        }
        // sign convention: largest-magnitude entry positive
        if let Some(idx) = (0..d).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())) {
            if v[idx] < 0.0 {
                v.iter_mut().for_each(|a| *a = -*a);
            }
        }
        components.push(v);
    }

    let mut out: Vec<[f64; 2]> = centered
        .iter()
        .map(|r| {
            let p = |c: &Vec<f64>| r.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [p(&components[0]), p(&components[1])]
        })
        .collect();
    for axis in 0..2 {
        let var = out.iter().map(|p| p[axis] * p[axis]).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std > 1e-12 {
            out.iter_mut().for_each(|p| p[axis] /= std);
        }
    }
    out
}

fn cov_times(centered: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; v.len()];
    for r in centered {
        let s: f64 = r.iter().zip(v).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(r).for_each(|(acc, a)| *acc += s * a);
    }
    w
}
