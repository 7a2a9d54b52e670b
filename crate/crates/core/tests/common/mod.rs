//! Independent reference implementations shared by the integration tests.
//! Written from the model definitions without calling into the library.

#![allow(dead_code)]

use std::collections::VecDeque;

/// Dirichlet log density over the components with positive concentration.
pub fn dirichlet_logpdf(x: &[f64], conc: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut sum_a = 0.0;
    for (&xi, &a) in x.iter().zip(conc) {
        if a > 0.0 {
            total += (a - 1.0) * xi.ln() - libm::lgamma(a);
            sum_a += a;
        }
    }
    total + libm::lgamma(sum_a)
}

pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

/// `ln N(x | Σ z_k μ_k, σ² I)` with `means` row-major `K x B`.
pub fn word_loglik(x: &[f64], z: &[f64], means: &[f64], sigma2: f64) -> f64 {
    let b = x.len();
    (0..b)
        .map(|band| {
            let m: f64 = z.iter().enumerate().map(|(k, zk)| zk * means[k * b + band]).sum();
            normal_logpdf(x[band], m, sigma2)
        })
        .sum()
}

/// Plain double loop, summed with `f64` in order.
pub fn entropy(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * v.ln();
        }
    }
    h
}

pub fn ncm_loglik(pixels: &[f64], means: &[f64], p: &[f64], k: usize, variances: &[f64]) -> f64 {
    let b = means.len() / k;
    let n = pixels.len() / b;
    let mut total = 0.0;
    for i in 0..n {
        let pk = &p[i * k..(i + 1) * k];
        let var: f64 = (0..k).map(|j| pk[j] * pk[j] * variances[j]).sum();
        for band in 0..b {
            let m: f64 = (0..k).map(|j| pk[j] * means[j * b + band]).sum();
            total += normal_logpdf(pixels[i * b + band], m, var);
        }
    }
    total
}

/// Number of 4-connected pieces per label.
pub fn pieces_per_label(rows: usize, cols: usize, labels: &[usize]) -> Vec<usize> {
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut pieces = vec![0; n_labels];
    let mut seen = vec![false; rows * cols];
    for start in 0..rows * cols {
        if seen[start] {
            continue;
        }
        pieces[labels[start]] += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / cols, i % cols);
            let mut nbrs = Vec::with_capacity(4);
            if r > 0 {
                nbrs.push(i - cols);
            }
            if r + 1 < rows {
                nbrs.push(i + cols);
            }
            if c > 0 {
                nbrs.push(i - 1);
            }
            if c + 1 < cols {
                nbrs.push(i + 1);
            }
            for j in nbrs {
                if !seen[j] && labels[j] == labels[i] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    pieces
}

/// Relabel by order of first appearance, so two labelings describing the
/// same partition compare equal.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Total variation distance between two histograms of equal mass.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Bin masses of the density `exp(log_f)` over `[lo, hi]`, with `bins`
/// equal bins, each integrated by a midpoint rule on `sub` points.
pub fn grid_masses(log_f: impl Fn(f64) -> f64, lo: f64, hi: f64, bins: usize, sub: usize) -> Vec<f64> {
    let w = (hi - lo) / (bins * sub) as f64;
    let logs: Vec<f64> = (0..bins * sub).map(|i| log_f(lo + (i as f64 + 0.5) * w)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = dens.iter().sum();
    dens.chunks(sub).map(|c| c.iter().sum::<f64>() / total).collect()
}

pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let w = (hi - lo) / bins as f64;
    for &x in samples {
        let i = (((x - lo) / w).floor().max(0.0) as usize).min(bins - 1);
        h[i] += 1.0;
    }
    h.iter_mut().for_each(|v| *v /= samples.len() as f64);
    h
}
