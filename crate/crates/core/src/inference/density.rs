use std::f64::consts::PI;

use libm::lgamma;
use rayon::prelude::*;

use super::{Corpus, DocState, EndmemberModel, Hyperparams, Support};
use crate::error::{Error, Result};

/// Log density of `x` under a Dirichlet restricted to `support`.
///
/// Only the concentrations at supported indices are read. Mass outside the
/// support, or a non-positive supported concentration, gives `-inf`. A
/// one-element support is a point mass and contributes `0`.
pub fn dirichlet_log_density(x: &[f64], concentration: &[f64], support: &Support) -> f64 {
    if x.iter().enumerate().any(|(k, &v)| v != 0.0 && !support.contains(k)) {
        return f64::NEG_INFINITY;
    }
    let idx = support.indices();
    if idx.len() == 1 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut log_norm = 0.0;
    for &k in idx {
        let a = concentration[k];
        if !(a > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += a;
        log_norm -= lgamma(a);
        if a != 1.0 {
            log_norm += (a - 1.0) * x[k].ln();
        }
    }
    log_norm + lgamma(total)
}

pub fn exponential_log_density(s: f64, lambda: f64) -> f64 {
    if s < 0.0 {
        f64::NEG_INFINITY
    } else {
        lambda.ln() - lambda * s
    }
}

/// `Σ_n log Dir(z_n | π s)` over one document's memberships.
pub fn membership_log_likelihood(pi: &[f64], s: f64, z: &[f64], support: &Support) -> f64 {
    let k = pi.len();
    let idx = support.indices();
    if pi.iter().enumerate().any(|(i, &v)| v != 0.0 && !support.contains(i)) {
        return f64::NEG_INFINITY;
    }
    if idx.len() == 1 {
        return if z
            .chunks_exact(k)
            .all(|zn| zn.iter().enumerate().all(|(i, &v)| v == 0.0 || i == idx[0]))
        {
            0.0
        } else {
            f64::NEG_INFINITY
        };
    }
    let conc: Vec<f64> = pi.iter().map(|p| p * s).collect();
    if idx.iter().any(|&i| !(conc[i] > 0.0)) {
        return f64::NEG_INFINITY;
    }
    let norm = lgamma(idx.iter().map(|&i| conc[i]).sum()) - idx.iter().map(|&i| lgamma(conc[i])).sum::<f64>();
    let mut out = 0.0;
    for zn in z.chunks_exact(k) {
        if zn.iter().enumerate().any(|(i, &v)| v != 0.0 && !support.contains(i)) {
            return f64::NEG_INFINITY;
        }
        out += norm;
        for &i in idx {
            if conc[i] != 1.0 {
                out += (conc[i] - 1.0) * zn[i].ln();
            }
        }
    }
    out
}

#[inline]
pub(crate) fn word_ll(x: &[f64], z: &[f64], model: &EndmemberModel) -> f64 {
    let b = model.bands();
    let mut sq = 0.0;
    for (band, &xb) in x.iter().enumerate().take(b) {
        let mut mean = 0.0;
        for (k, &w) in z.iter().enumerate() {
            if w != 0.0 {
                mean += w * model.means[k * b + band];
            }
        }
        let r = xb - mean;
        sq += r * r;
    }
    -0.5 * b as f64 * (2.0 * PI * model.sigma2()).ln() - sq / (2.0 * model.sigma2())
}

/// Log density of pixel `x` with membership `z`.
///
/// Blending Gaussian natural parameters with weights `z` gives precision
/// `Σ_k z_k σ⁻² = σ⁻²` and mean `Σ_k z_k μ_k`, so the normalized result is
/// `log N(x | Σ_k z_k μ_k, σ² I)`.
pub fn word_log_density(x: &[f64], z: &[f64], model: &EndmemberModel) -> Result<f64> {
    if !(model.sigma2() > 0.0) {
        return Err(Error::Model(format!("variance must be > 0, got {}", model.sigma2())));
    }
    if x.len() != model.bands() || z.len() != model.k() {
        return Err(Error::Model(format!(
            "pixel of {} bands / membership of {} entries against a {}x{} model",
            x.len(),
            z.len(),
            model.k(),
            model.bands()
        )));
    }
    Ok(word_ll(x, z, model))
}

/// Joint log density of one document:
/// `log Dir(π | α) + log Exp(s | λ) + Σ_n [log Dir(z_n | π s) + log p(x_n | z_n)]`.
pub fn joint_log_density<'x>(
    pi: &[f64],
    s: f64,
    z_doc: &[f64],
    x_doc: impl IntoIterator<Item = &'x [f64]>,
    hyper: &Hyperparams,
    model: &EndmemberModel,
    support: &Support,
) -> Result<f64> {
    let k = model.k();
    if pi.len() != k || support.k() != k || !z_doc.len().is_multiple_of(k) {
        return Err(Error::Model(format!(
            "proportions of length {} / memberships of length {} for K = {k}",
            pi.len(),
            z_doc.len()
        )));
    }
    let alpha = vec![hyper.alpha; k];
    let mut out = dirichlet_log_density(pi, &alpha, support)
        + exponential_log_density(s, hyper.lambda)
        + membership_log_likelihood(pi, s, z_doc, support);
    let mut n = 0;
    for x in x_doc {
        let zn = z_doc
            .get(n * k..(n + 1) * k)
            .ok_or_else(|| Error::Model("more pixels than memberships".into()))?;
        out += word_log_density(x, zn, model)?;
        n += 1;
    }
    if n * k != z_doc.len() {
        return Err(Error::Model(format!("{n} pixels but {} memberships", z_doc.len() / k)));
    }
    Ok(out)
}

/// `Σ_d Σ_n log p(x_n | z_n)` over the whole corpus. Per-document partial
/// sums are added in document order, so the result does not depend on the
/// number of worker threads.
pub fn data_log_likelihood(corpus: &Corpus<'_>, docs: &[DocState], model: &EndmemberModel) -> f64 {
    let partial: Vec<f64> = docs
        .par_iter()
        .enumerate()
        .map(|(d, doc)| {
            corpus
                .doc_pixels(d)
                .enumerate()
                .map(|(n, x)| word_ll(x, doc.membership(n), model))
                .sum()
        })
        .collect();
    partial.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_1d(means: &[f64], sigma2: f64) -> EndmemberModel {
        EndmemberModel::new(means.len(), 1, means.to_vec(), sigma2).unwrap()
    }

    #[test]
    fn one_hot_is_single_gaussian() {
        let m = model_1d(&[0.0, 2.0], 0.5);
        let lp = word_log_density(&[1.3], &[0.0, 1.0], &m).unwrap();
        let direct = -0.5 * (2.0 * PI * 0.5).ln() - (1.3f64 - 2.0).powi(2) / (2.0 * 0.5);
        assert!((lp - direct).abs() < 1e-14);
    }

    #[test]
    fn blended_hand_case() {
        let m = model_1d(&[0.0, 2.0], 1.0);
        let lp = word_log_density(&[1.0], &[0.5, 0.5], &m).unwrap();
        assert!((lp - (-0.5 * (2.0 * PI).ln())).abs() < 1e-12);
        assert!((lp + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_variance_is_model_error() {
        let mut m = model_1d(&[0.0], 1.0);
        m.sigma2 = 0.0;
        assert!(matches!(word_log_density(&[0.0], &[1.0], &m), Err(Error::Model(_))));
    }

    #[test]
    fn dirichlet_uniform_on_two_simplex() {
        // Dir(1, 1) has density 1 on the segment.
        let sup = Support::full(2);
        assert!(dirichlet_log_density(&[0.3, 0.7], &[1.0, 1.0], &sup).abs() < 1e-15);
        // Dir(1,1,1) has density Γ(3) = 2.
        let sup = Support::full(3);
        assert!((dirichlet_log_density(&[0.2, 0.3, 0.5], &[1.0; 3], &sup) - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn mass_outside_support_is_impossible() {
        let sup = Support::from_mask(&[true, false, true]).unwrap();
        assert_eq!(
            dirichlet_log_density(&[0.5, 0.1, 0.4], &[1.0; 3], &sup),
            f64::NEG_INFINITY
        );
        let restricted = dirichlet_log_density(&[0.5, 0.0, 0.5], &[2.0, 0.0, 2.0], &sup);
        let dense = dirichlet_log_density(&[0.5, 0.5], &[2.0, 2.0], &Support::full(2));
        assert_eq!(restricted, dense);
    }

    #[test]
    fn single_topic_joint_reduces_to_likelihood() {
        let m = model_1d(&[1.0], 0.25);
        let hyper = Hyperparams {
            k: 1,
            ..Default::default()
        };
        let xs = [[0.8], [1.1], [1.4]];
        let z = vec![1.0; 3];
        let j = joint_log_density(
            &[1.0],
            0.7,
            &z,
            xs.iter().map(|x| &x[..]),
            &hyper,
            &m,
            &Support::full(1),
        )
        .unwrap();
        let expect = exponential_log_density(0.7, hyper.lambda)
            + xs.iter().map(|x| word_log_density(x, &[1.0], &m).unwrap()).sum::<f64>();
        assert!((j - expect).abs() < 1e-12);
    }

    #[test]
    fn pixel_count_mismatch_is_model_error() {
        let m = model_1d(&[0.0, 1.0], 1.0);
        let hyper = Hyperparams {
            k: 2,
            ..Default::default()
        };
        let xs = [[0.1]];
        let r = joint_log_density(
            &[0.5, 0.5],
            1.0,
            &[0.5, 0.5, 0.5, 0.5],
            xs.iter().map(|x| &x[..]),
            &hyper,
            &m,
            &Support::full(2),
        );
        assert!(matches!(r, Err(Error::Model(_))));
    }
}
