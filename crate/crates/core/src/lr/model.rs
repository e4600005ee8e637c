use serde::{Deserialize, Serialize};

use super::features::{FeatureSpace, FeatureVec};

pub const MAX_ITERATIONS: usize = 1000;
pub const GRAD_TOLERANCE: f64 = 1e-6;

/// Training data restricted to the selected features, remapped to `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub x: Vec<Vec<u32>>,
    pub y: Vec<bool>,
    pub dim: usize,
}

impl Problem {
    /// `selected` must be sorted.
    pub fn new(rows: &[&FeatureVec], y: Vec<bool>, selected: &[u32]) -> Self {
        let x = rows
            .iter()
            .map(|r| {
                r.iter()
                    .filter_map(|f| selected.binary_search(f).ok().map(|i| i as u32))
                    .collect()
            })
            .collect();
        Problem {
            x,
            y,
            dim: selected.len(),
        }
    }

    fn margin(&self, i: usize, w: &[f64], b: f64) -> f64 {
        b + self.x[i].iter().map(|&j| w[j as usize]).sum::<f64>()
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log-loss plus `|w|^2 / (2 c n)`. The bias is not penalized.
pub fn objective(p: &Problem, w: &[f64], b: f64, l2_c: f64) -> f64 {
    let n = p.y.len() as f64;
    let loss: f64 = (0..p.y.len())
        .map(|i| {
            let z = p.margin(i, w, b);
            if p.y[i] {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    let norm: f64 = w.iter().map(|v| v * v).sum();
    loss / n + norm / (2.0 * l2_c * n)
}

/// Gradient of [`objective`] with respect to `w`, then the bias.
pub fn gradient(p: &Problem, w: &[f64], b: f64, l2_c: f64) -> (Vec<f64>, f64) {
    let n = p.y.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|v| v / (l2_c * n)).collect();
    let mut gb = 0.0;
    for i in 0..p.y.len() {
        let r = (sigmoid(p.margin(i, w, b)) - if p.y[i] { 1.0 } else { 0.0 }) / n;
        gb += r;
        for &j in &p.x[i] {
            gw[j as usize] += r;
        }
    }
    (gw, gb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted step, starting from the initial point.
    pub objective: Vec<f64>,
}

/// Full-batch gradient descent from zero with Armijo backtracking.
pub fn minimize(p: &Problem, l2_c: f64) -> Fit {
    let mut w = vec![0.0; p.dim];
    let mut b = 0.0;
    let mut f = objective(p, &w, b, l2_c);
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        let (gw, gb) = gradient(p, &w, b, l2_c);
        let g2: f64 = gw.iter().map(|v| v * v).sum::<f64>() + gb * gb;
        if g2.sqrt() < GRAD_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;
        step *= 2.0;
        let (nw, nb, nf) = loop {
            let nw: Vec<f64> = w.iter().zip(&gw).map(|(v, g)| v - step * g).collect();
            let nb = b - step * gb;
            let nf = objective(p, &nw, nb, l2_c);
            if nf <= f - 0.5 * step * g2 || step < 1e-20 {
                break (nw, nb, nf);
            }
            step *= 0.5;
        };
        if nf > f {
            break;
        }
        w = nw;
        b = nb;
        f = nf;
        trace.push(f);
    }
    Fit {
        weights: w,
        bias: b,
        iterations,
        converged,
        objective: trace,
    }
}

/// A binary classifier for one label. A label whose training data has a
/// single class gets a constant model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub label: String,
    pub seed: Option<u64>,
    pub k: usize,
    pub l2_c: f64,
    pub features: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<bool>,
}

impl LrModel {
    pub fn constant(label: &str, seed: Option<u64>, value: bool) -> Self {
        LrModel {
            label: label.to_string(),
            seed,
            k: 0,
            l2_c: 0.0,
            features: Vec::new(),
            weights: Vec::new(),
            bias: 0.0,
            iterations: 0,
            converged: true,
            constant: Some(value),
        }
    }

    pub fn compile(&self, space: &FeatureSpace) -> CompiledModel {
        let mut weights: Vec<(u32, f64)> = self
            .features
            .iter()
            .zip(&self.weights)
            .filter_map(|(n, &w)| space.id(n).map(|id| (id, w)))
            .collect();
        weights.sort_by_key(|&(id, _)| id);
        CompiledModel {
            weights,
            bias: self.bias,
            constant: self.constant,
        }
    }
}

/// A model resolved against a feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledModel {
    weights: Vec<(u32, f64)>,
    bias: f64,
    constant: Option<bool>,
}

impl CompiledModel {
    pub fn margin(&self, x: &FeatureVec) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .filter(|(id, _)| x.binary_search(id).is_ok())
                .map(|(_, w)| w)
                .sum::<f64>()
    }

    /// Positive when the predicted probability exceeds 0.5.
    pub fn predict(&self, x: &FeatureVec) -> bool {
        match self.constant {
            Some(v) => v,
            None => self.margin(x) > 0.0,
        }
    }
}
