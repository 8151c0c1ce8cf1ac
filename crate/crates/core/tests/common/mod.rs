//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use heartrisk::preprocess::FeatureMatrix;
use heartrisk::rng::SplitMix64;

/// Gaussian NB posterior `P(y = 1 | x)` computed by normalising the direct
/// product of densities, without logs.
pub fn nb_posterior_by_density_product(rows: &[Vec<f64>], labels: &[u8], x: &[f64]) -> f64 {
    let d = x.len();
    let n = rows.len() as f64;
    let mut overall_max_var = 0.0f64;
    for j in 0..d {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        overall_max_var = overall_max_var.max(var);
    }
    let floor = if overall_max_var > 0.0 { 1e-9 * overall_max_var } else { 1e-9 };
    let mut joint = [0.0; 2];
    for (class, slot) in joint.iter_mut().enumerate() {
        let members: Vec<&Vec<f64>> = rows.iter().zip(labels).filter(|(_, &y)| y as usize == class).map(|(r, _)| r).collect();
        let nc = members.len() as f64;
        let mut product = nc / n;
        for j in 0..d {
            let mean = members.iter().map(|r| r[j]).sum::<f64>() / nc;
            let var = (members.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nc).max(floor);
            product *= (-(x[j] - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        }
        *slot = product;
    }
    joint[1] / (joint[0] + joint[1])
}

/// Best root split by enumerating every feature and every threshold between
/// consecutive distinct values, summing each side from scratch. Returns the
/// feature and the rows sent left, or `None` when no split has positive gain.
pub fn exhaustive_root_split(
    m: &FeatureMatrix,
    g: &[f64],
    h: &[f64],
    lambda: f64,
    gamma: f64,
    min_child_weight: f64,
) -> Option<(usize, Vec<usize>, f64)> {
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let g_all: f64 = g.iter().sum();
    let h_all: f64 = h.iter().sum();
    let mut best: Option<(usize, Vec<usize>, f64)> = None;
    for f in 0..m.cols {
        let mut values: Vec<f64> = (0..m.rows).map(|i| m.get(i, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let left: Vec<usize> = (0..m.rows).filter(|&i| m.get(i, f) < threshold).collect();
            let right: Vec<usize> = (0..m.rows).filter(|&i| m.get(i, f) >= threshold).collect();
            let gl: f64 = left.iter().map(|&i| g[i]).sum();
            let hl: f64 = left.iter().map(|&i| h[i]).sum();
            let gr: f64 = right.iter().map(|&i| g[i]).sum();
            let hr: f64 = right.iter().map(|&i| h[i]).sum();
            if hl < min_child_weight || hr < min_child_weight {
                continue;
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(g_all, h_all)) - gamma;
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain - b.2 > 1e-10 * b.2.max(1.0)) {
                best = Some((f, left, gain));
            }
        }
    }
    best
}

pub fn logistic_grad_hess(margins: &[f64], labels: &[u8]) -> (Vec<f64>, Vec<f64>) {
    margins
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            let p = 1.0 / (1.0 + (-z).exp());
            (p - f64::from(y), p * (1.0 - p))
        })
        .unzip()
}

/// Random matrix with values on a coarse grid so duplicates occur.
pub fn random_matrix(rng: &mut SplitMix64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let rows = (0..n).map(|_| (0..d).map(|_| rng.below(7) as f64 * 0.5 - 1.0).collect()).collect();
    let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.bernoulli(0.5))).collect();
    labels[0] = 0;
    labels[n - 1] = 1;
    (rows, labels)
}

pub fn random_continuous(rng: &mut SplitMix64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.bernoulli(0.5))).collect();
    labels[0] = 0;
    labels[n - 1] = 1;
    let rows = labels
        .iter()
        .map(|&y| (0..d).map(|_| rng.normal(f64::from(y), 1.5)).collect())
        .collect();
    (rows, labels)
}
