//! Partial-membership LDA under the Normal Compositional Model.
//!
//! Documents are superpixels, words are pixel spectra, topics are Gaussian
//! endmembers with a shared isotropic covariance `σ² I`. Each document `d`
//! carries a topic proportion vector `π^d` and a mixing level `s^d`; every
//! pixel carries a membership vector `z_n ~ Dir(π^d s^d)` and is drawn from
//! the Gaussian obtained by blending the endmembers' natural parameters with
//! weights `z_n`.
//!
//! A binary label matrix restricts which endmembers each document may use.
//! Restricted components are structurally zero: every Dirichlet density and
//! proposal in this module lives on the sub-simplex spanned by the allowed
//! endmembers.

mod density;
mod init;
mod proposal;
mod sampler;
mod steps;
mod vca;

pub use density::{
    data_log_likelihood, dirichlet_log_density, exponential_log_density, joint_log_density, membership_log_likelihood,
    word_log_density,
};
pub use init::{fitted_state, residual_variance, MEMBERSHIP_FLOOR};
pub use proposal::{propose_membership, propose_pi, propose_s, sample_dirichlet};
pub use sampler::{run_sampler, state_log_density, BlockRates, Chain, SamplerOutput};
pub use steps::{
    accept, mh_step_mu, mh_step_pi, mh_step_s, mh_step_sigma2, mh_step_z, mu_log_accept_ratio, pi_log_accept_ratio,
    s_log_accept_ratio, sigma2_log_accept_ratio, variance_proposal_bound, z_log_accept_ratio, MeanProposal, Step,
};
pub use vca::vca_init;

use crate::error::{Error, Result};

/// Lower bound applied to every sampled variance.
pub const SIGMA2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Number of endmembers (topics).
    pub k: usize,
    /// Symmetric Dirichlet concentration for document proportions.
    pub alpha: f64,
    /// Rate of the exponential prior on mixing levels.
    pub lambda: f64,
    /// Outer sampler iterations.
    pub iterations: usize,
    pub burn_in_fraction: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            k: 6,
            alpha: 0.3,
            lambda: 1.0,
            iterations: 200,
            burn_in_fraction: 0.5,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Model(m));
        if self.k == 0 {
            return bad("endmember count must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if self.iterations == 0 {
            return bad("iteration count must be at least 1".into());
        }
        if !(self.burn_in_fraction > 0.0 && self.burn_in_fraction < 1.0) {
            return bad(format!(
                "burn-in fraction must lie in (0, 1), got {}",
                self.burn_in_fraction
            ));
        }
        Ok(())
    }

    /// Iterations `1..=burn_in()` are discarded for the point estimate.
    pub fn burn_in(&self) -> usize {
        (self.iterations as f64 * self.burn_in_fraction).floor() as usize
    }
}

/// The endmembers allowed in one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    k: usize,
    indices: Vec<usize>,
}

impl Support {
    pub fn full(k: usize) -> Self {
        Self {
            k,
            indices: (0..k).collect(),
        }
    }

    pub fn from_mask(mask: &[bool]) -> Result<Self> {
        let indices: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        if indices.is_empty() {
            return Err(Error::LabelSchema("document admits no endmember".into()));
        }
        Ok(Self { k: mask.len(), indices })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    /// Uniform point of the support sub-simplex.
    pub fn barycenter(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.k];
        let w = 1.0 / self.indices.len() as f64;
        for &i in &self.indices {
            v[i] = w;
        }
        v
    }
}

/// Gaussian endmembers `N(μ_k, σ² I)` sharing one isotropic variance.
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberModel {
    k: usize,
    bands: usize,
    /// Row-major `K x B`.
    means: Vec<f64>,
    sigma2: f64,
}

impl EndmemberModel {
    pub fn new(k: usize, bands: usize, means: Vec<f64>, sigma2: f64) -> Result<Self> {
        if k == 0 || bands == 0 || means.len() != k * bands {
            return Err(Error::Model(format!(
                "{} mean values for {k} endmembers of {bands} bands",
                means.len()
            )));
        }
        if means.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("endmember means must be finite".into()));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Model(format!("variance must be > 0, got {sigma2}")));
        }
        Ok(Self {
            k,
            bands,
            means,
            sigma2,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.bands..(k + 1) * self.bands]
    }

    pub(crate) fn set_mean(&mut self, k: usize, value: &[f64]) {
        self.means[k * self.bands..(k + 1) * self.bands].copy_from_slice(value);
    }

    pub(crate) fn set_sigma2(&mut self, sigma2: f64) {
        self.sigma2 = sigma2;
    }

    pub fn with_mean(&self, k: usize, value: &[f64]) -> Self {
        let mut m = self.clone();
        m.set_mean(k, value);
        m
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Self {
        let mut m = self.clone();
        m.sigma2 = sigma2;
        m
    }

    /// Natural parameters `(Σ⁻¹, Σ⁻¹ μ_k)`; with `Σ = σ² I` the precision is
    /// the scalar `1 / σ²`.
    pub fn natural_params(&self, k: usize) -> (f64, Vec<f64>) {
        let prec = 1.0 / self.sigma2;
        (prec, self.mean(k).iter().map(|m| m * prec).collect())
    }

    /// Blended mean `Σ_k z_k μ_k`.
    pub fn mixed_mean(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.bands];
        for (k, &w) in z.iter().enumerate() {
            if w != 0.0 {
                for (o, m) in out.iter_mut().zip(self.mean(k)) {
                    *o += w * m;
                }
            }
        }
        out
    }
}

/// Latent variables of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocState {
    pub pi: Vec<f64>,
    pub s: f64,
    /// Row-major `N_d x K` memberships, in the order of the document's pixels.
    pub z: Vec<f64>,
}

impl DocState {
    pub fn membership(&self, n: usize) -> &[f64] {
        let k = self.pi.len();
        &self.z[n * k..(n + 1) * k]
    }

    pub fn n_pixels(&self) -> usize {
        self.z.len() / self.pi.len()
    }
}

/// One full sampler state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub docs: Vec<DocState>,
    pub model: EndmemberModel,
}

impl ModelState {
    /// Start every document at the barycenter of its support with mixing
    /// level `s0`, and every pixel at its document's proportions.
    pub fn initial(doc_sizes: &[usize], supports: &[Support], s0: f64, model: EndmemberModel) -> Self {
        let docs = doc_sizes
            .iter()
            .zip(supports)
            .map(|(&n, sup)| {
                let pi = sup.barycenter();
                DocState {
                    z: pi.repeat(n),
                    pi,
                    s: s0,
                }
            })
            .collect();
        Self { docs, model }
    }

    pub fn pi(&self, d: usize) -> &[f64] {
        &self.docs[d].pi
    }

    pub fn s(&self, d: usize) -> f64 {
        self.docs[d].s
    }

    pub fn z(&self, d: usize, n: usize) -> &[f64] {
        self.docs[d].membership(n)
    }
}

/// Pixels grouped into documents.
#[derive(Debug, Clone, Copy)]
pub struct Corpus<'a> {
    pub bands: usize,
    /// Row-major `N x B` spectra.
    pub pixels: &'a [f64],
    /// Pixel indices of each document.
    pub docs: &'a [Vec<usize>],
}

impl<'a> Corpus<'a> {
    pub fn pixel(&self, i: usize) -> &'a [f64] {
        &self.pixels[i * self.bands..(i + 1) * self.bands]
    }

    pub fn doc_pixels(&self, d: usize) -> impl Iterator<Item = &'a [f64]> + '_ {
        self.docs[d].iter().map(move |&i| self.pixel(i))
    }

    pub fn n_pixels(&self) -> usize {
        self.pixels.len() / self.bands
    }
}
