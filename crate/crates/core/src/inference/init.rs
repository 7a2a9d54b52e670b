//! Starting point for the sampler: memberships from a sum-to-one
//! least-squares fit against the initial endmembers.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{Corpus, DocState, EndmemberModel, ModelState, Support, SIGMA2_FLOOR};

/// Smallest starting membership on an allowed endmember. Keeps every start
/// strictly inside its simplex, where all Dirichlet densities are finite.
pub const MEMBERSHIP_FLOOR: f64 = 1e-6;

/// Solver for `min ‖x − Σ_{k∈S} a_k μ_k‖` subject to `Σ a_k = 1`.
struct AffineFit {
    support: Vec<usize>,
    /// Inverse of the bordered Gram matrix `[EᵀE 1; 1ᵀ 0]`.
    kkt_inv: DMatrix<f64>,
}

impl AffineFit {
    fn new(model: &EndmemberModel, support: &Support) -> Self {
        let m = support.indices.len();
        let mut g = DMatrix::zeros(m + 1, m + 1);
        for (i, &a) in support.indices.iter().enumerate() {
            for (j, &b) in support.indices.iter().enumerate() {
                g[(i, j)] = dot(model.mean(a), model.mean(b));
            }
            g[(i, m)] = 1.0;
            g[(m, i)] = 1.0;
        }
        let kkt_inv = g
            .clone()
            .try_inverse()
            .or_else(|| g.pseudo_inverse(1e-12).ok())
            .expect("pseudo-inverse of a finite matrix");
        Self {
            support: support.indices.clone(),
            kkt_inv,
        }
    }

    /// Fitted weights, clipped to [`MEMBERSHIP_FLOOR`] and renormalized,
    /// scattered into a `k`-vector that is zero off the support.
    fn memberships(&self, x: &[f64], model: &EndmemberModel) -> Vec<f64> {
        let m = self.support.len();
        let mut rhs = DVector::zeros(m + 1);
        for (i, &k) in self.support.iter().enumerate() {
            rhs[i] = dot(model.mean(k), x);
        }
        rhs[m] = 1.0;
        let sol = &self.kkt_inv * rhs;
        let mut z = vec![0.0; model.k()];
        let mut total = 0.0;
        for (i, &k) in self.support.iter().enumerate() {
            let v = if sol[i].is_finite() {
                sol[i].max(MEMBERSHIP_FLOOR)
            } else {
                1.0
            };
            z[k] = v;
            total += v;
        }
        z.iter_mut().for_each(|v| *v /= total);
        z
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Starting memberships of every pixel of `docs`, row-major per document.
fn fit_documents(corpus: &Corpus<'_>, supports: &[Support], model: &EndmemberModel) -> Vec<Vec<f64>> {
    (0..corpus.docs.len())
        .into_par_iter()
        .map(|d| {
            let fit = AffineFit::new(model, &supports[d]);
            corpus.doc_pixels(d).flat_map(|x| fit.memberships(x, model)).collect()
        })
        .collect()
}

/// Mean squared residual per band of the clipped sum-to-one fit of every
/// pixel against all endmembers, floored at [`SIGMA2_FLOOR`].
pub fn residual_variance(pixels: &[f64], bands: usize, model: &EndmemberModel) -> f64 {
    let fit = AffineFit::new(model, &Support::full(model.k()));
    let n = pixels.len() / bands;
    let ss: f64 = pixels
        .par_chunks_exact(bands)
        .map(|x| {
            let mixed = model.mixed_mean(&fit.memberships(x, model));
            x.iter().zip(&mixed).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    (ss / (n * bands) as f64).max(SIGMA2_FLOOR)
}

/// Memberships from the support-restricted least-squares fit, document
/// proportions at the mean membership, and mixing levels at `s0`.
pub fn fitted_state(corpus: &Corpus<'_>, supports: &[Support], s0: f64, model: EndmemberModel) -> ModelState {
    let k = model.k();
    let docs = fit_documents(corpus, supports, &model)
        .into_iter()
        .map(|z| {
            let n = (z.len() / k).max(1) as f64;
            let mut pi = vec![0.0; k];
            for zn in z.chunks_exact(k) {
                for (p, v) in pi.iter_mut().zip(zn) {
                    *p += v / n;
                }
            }
            DocState { pi, s: s0, z }
        })
        .collect();
    ModelState { docs, model }
}
