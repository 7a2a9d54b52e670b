//! Evaluation metrics for proportion maps and endmember estimates.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::inference::ModelState;
use crate::superpixel::Segmentation;

/// Per-pixel endmember proportions, row-major `N x K` in image raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionMaps {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub p: Vec<f64>,
}

impl ProportionMaps {
    pub fn new(rows: usize, cols: usize, k: usize, p: Vec<f64>) -> Result<Self> {
        if k == 0 || p.len() != rows * cols * k {
            return Err(Error::Consistency(format!(
                "{} proportions for a {rows}x{cols} image with K = {k}",
                p.len()
            )));
        }
        Ok(Self { rows, cols, k, p })
    }

    pub fn from_state(seg: &Segmentation, state: &ModelState) -> Self {
        let k = state.model.k();
        let mut p = vec![0.0; seg.n_pixels() * k];
        for (d, members) in seg.members().iter().enumerate() {
            for (n, &i) in members.iter().enumerate() {
                p[i * k..(i + 1) * k].copy_from_slice(state.z(d, n));
            }
        }
        Self {
            rows: seg.rows(),
            cols: seg.cols(),
            k,
            p,
        }
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.p[i * self.k..(i + 1) * self.k]
    }

    /// Check nonnegativity and sum-to-one within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for i in 0..self.n_pixels() {
            let px = self.pixel(i);
            if px.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::Model(format!(
                    "pixel {i} has a negative or non-finite proportion"
                )));
            }
            let s: f64 = px.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::Model(format!("pixel {i} proportions sum to {s}")));
            }
        }
        Ok(())
    }

    /// Reorder endmember columns: output column `j` is input column `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut p = Vec::with_capacity(self.p.len());
        for i in 0..self.n_pixels() {
            let px = self.pixel(i);
            p.extend(perm.iter().map(|&j| px[j]));
        }
        Self { p, ..*self }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Entropy of a set of proportion maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy {
    /// `-Σ_n Σ_k p_nk ln p_nk`, with `0 ln 0 = 0`.
    pub total: f64,
    pub per_pixel: f64,
}

pub fn proportion_entropy(maps: &ProportionMaps) -> Result<Entropy> {
    let mut acc = CompensatedSum::default();
    for (i, &v) in maps.p.iter().enumerate() {
        if v < 0.0 || v.is_nan() {
            return Err(Error::Model(format!(
                "negative proportion {v} at pixel {} endmember {}",
                i / maps.k,
                i % maps.k
            )));
        }
        if v > 0.0 {
            acc.add(-v * v.ln());
        }
    }
    let total = acc.value();
    Ok(Entropy {
        total,
        per_pixel: total / maps.n_pixels() as f64,
    })
}

/// NCM log-likelihood `Σ_n ln N(x_n | Σ_k p_nk e_k, Σ_k p_nk² σ_k² I)`.
///
/// `pixels` is row-major `N x B`, `means` row-major `K x B`, and `variances`
/// holds the isotropic variance of each endmember.
pub fn ncm_log_likelihood(pixels: &[f64], means: &[f64], maps: &ProportionMaps, variances: &[f64]) -> Result<f64> {
    let k = maps.k;
    if variances.len() != k || !means.len().is_multiple_of(k) {
        return Err(Error::Consistency(format!(
            "{} variances and {} mean values for K = {k}",
            variances.len(),
            means.len()
        )));
    }
    let b = means.len() / k;
    if b == 0 || pixels.len() != maps.n_pixels() * b {
        return Err(Error::Consistency(format!(
            "{} pixel values for {} pixels of {b} bands",
            pixels.len(),
            maps.n_pixels()
        )));
    }
    let mut acc = CompensatedSum::default();
    for (i, x) in pixels.chunks_exact(b).enumerate() {
        let p = maps.pixel(i);
        let var: f64 = p.iter().zip(variances).map(|(pk, v)| pk * pk * v).sum();
        if !(var > 0.0) {
            return Err(Error::Model(format!(
                "pixel {i}: mixed covariance is not positive definite"
            )));
        }
        let mut sq = 0.0;
        for band in 0..b {
            let mean: f64 = (0..k).map(|j| p[j] * means[j * b + band]).sum();
            sq += (x[band] - mean).powi(2);
        }
        acc.add(-0.5 * b as f64 * (2.0 * PI * var).ln() - sq / (2.0 * var));
    }
    Ok(acc.value())
}

/// Angle between two spectra in radians, in `[0, π]`.
pub fn spectral_angle(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Model(format!("spectra of {} and {} bands", a.len(), b.len())));
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Model("spectral angle of a zero vector".into()));
    }
    // 2·atan2(|â − b̂|, |â + b̂|) stays accurate near 0 and π, unlike acos.
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

/// Mean absolute proportion error.
pub fn proportion_mae(estimate: &ProportionMaps, truth: &ProportionMaps) -> Result<f64> {
    if estimate.p.len() != truth.p.len() || estimate.k != truth.k {
        return Err(Error::Consistency("proportion maps differ in shape".into()));
    }
    Ok(estimate.p.iter().zip(&truth.p).map(|(a, b)| (a - b).abs()).sum::<f64>() / estimate.p.len() as f64)
}

/// Permutation `perm` of estimated endmembers minimizing the summed spectral
/// angle to the truth: estimated endmember `perm[j]` matches true endmember `j`.
/// Exhaustive, so intended for small `K`.
pub fn best_permutation(estimated: &[f64], truth: &[f64], k: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let b = truth.len() / k;
    let mut angles = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            angles[i * k + j] = spectral_angle(&estimated[i * b..(i + 1) * b], &truth[j * b..(j + 1) * b])?;
        }
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let cost: f64 = (0..k).map(|j| angles[p[j] * k + j]).sum();
        if cost < best.0 {
            best = (cost, p.to_vec());
        }
    });
    let per = (0..k).map(|j| angles[best.1[j] * k + j]).collect();
    Ok((best.1, per))
}

fn permute(v: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, f);
        v.swap(start, i);
    }
}
