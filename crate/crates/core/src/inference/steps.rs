//! Metropolis-Hastings blocks of the sampler.
//!
//! Each block has a `*_log_accept_ratio` function computing the log of the
//! acceptance ratio for a given candidate, and an `mh_step_*` function that
//! draws the candidate and applies [`accept`]. All ratios are formed in log
//! space.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::density::{dirichlet_log_density, exponential_log_density, membership_log_likelihood, word_ll};
use super::proposal::{propose_membership, propose_pi, propose_s};
use super::{data_log_likelihood, Corpus, DocState, EndmemberModel, Support, SIGMA2_FLOOR};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Step<T> {
    pub value: T,
    pub accepted: bool,
}

/// Accept with probability `min(1, exp(log_ratio))`. Non-negative ratios are
/// accepted without consuming randomness; NaN is rejected.
pub fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio.is_nan() {
        return false;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Proposal-correction pair `[log p(new) - log p(old)] + [log q(old) - log q(new)]`
/// for an independence sampler whose proposal `q` equals the prior `p`. The
/// two brackets cancel exactly; if either is not finite they cancel
/// analytically and contribute nothing.
fn prior_proposal_terms(log_new: f64, log_old: f64) -> f64 {
    let prior = log_new - log_old;
    let proposal = log_old - log_new;
    let sum = prior + proposal;
    if sum.is_finite() {
        sum
    } else {
        0.0
    }
}

pub fn pi_log_accept_ratio(
    old: &[f64],
    candidate: &[f64],
    s: f64,
    z_doc: &[f64],
    alpha: f64,
    support: &Support,
) -> f64 {
    let alpha = vec![alpha; old.len()];
    let prior = |p: &[f64]| dirichlet_log_density(p, &alpha, support);
    membership_log_likelihood(candidate, s, z_doc, support) - membership_log_likelihood(old, s, z_doc, support)
        + prior_proposal_terms(prior(candidate), prior(old))
}

/// Independence step for `π^d` with the (masked) prior as proposal.
pub fn mh_step_pi<R: Rng + ?Sized>(
    pi: &[f64],
    s: f64,
    z_doc: &[f64],
    alpha: f64,
    support: &Support,
    rng: &mut R,
) -> Step<Vec<f64>> {
    let candidate = propose_pi(alpha, support, rng);
    let lr = pi_log_accept_ratio(pi, &candidate, s, z_doc, alpha, support);
    if accept(lr, rng) {
        Step {
            value: candidate,
            accepted: true,
        }
    } else {
        Step {
            value: pi.to_vec(),
            accepted: false,
        }
    }
}

pub fn s_log_accept_ratio(pi: &[f64], old: f64, candidate: f64, z_doc: &[f64], lambda: f64, support: &Support) -> f64 {
    membership_log_likelihood(pi, candidate, z_doc, support) - membership_log_likelihood(pi, old, z_doc, support)
        + prior_proposal_terms(
            exponential_log_density(candidate, lambda),
            exponential_log_density(old, lambda),
        )
}

/// Independence step for `s^d` with the exponential prior as proposal.
pub fn mh_step_s<R: Rng + ?Sized>(
    pi: &[f64],
    s: f64,
    z_doc: &[f64],
    lambda: f64,
    support: &Support,
    rng: &mut R,
) -> Step<f64> {
    let candidate = propose_s(lambda, rng);
    let lr = s_log_accept_ratio(pi, s, candidate, z_doc, lambda, support);
    let accepted = accept(lr, rng);
    Step {
        value: if accepted { candidate } else { s },
        accepted,
    }
}

pub fn z_log_accept_ratio(
    pi: &[f64],
    s: f64,
    old: &[f64],
    candidate: &[f64],
    x: &[f64],
    model: &EndmemberModel,
    support: &Support,
) -> f64 {
    let conc: Vec<f64> = pi.iter().map(|p| p * s).collect();
    let term = |z: &[f64]| dirichlet_log_density(z, &conc, support) + word_ll(x, z, model);
    term(candidate) - term(old)
}

/// Independence step for one membership vector with a uniform proposal on
/// the support sub-simplex. The proposal density is constant, so no
/// correction term enters the ratio.
pub fn mh_step_z<R: Rng + ?Sized>(
    pi: &[f64],
    s: f64,
    z: &[f64],
    x: &[f64],
    model: &EndmemberModel,
    support: &Support,
    rng: &mut R,
) -> Step<Vec<f64>> {
    let candidate = propose_membership(support, rng);
    let lr = z_log_accept_ratio(pi, s, z, &candidate, x, model, support);
    if accept(lr, rng) {
        Step {
            value: candidate,
            accepted: true,
        }
    } else {
        Step {
            value: z.to_vec(),
            accepted: false,
        }
    }
}

/// Gaussian proposal `N(μ_D, Σ_D)` built from the data mean and covariance.
/// The covariance gets `1e-6 · trace(Σ_D) / B` added to its diagonal.
#[derive(Debug, Clone)]
pub struct MeanProposal {
    mean: DVector<f64>,
    chol_lower: DMatrix<f64>,
    log_norm: f64,
}

impl MeanProposal {
    pub fn from_pixels(pixels: &[f64], bands: usize) -> Result<Self> {
        let n = pixels.len() / bands;
        if n == 0 {
            return Err(Error::Model("cannot build a proposal from zero pixels".into()));
        }
        let mut mean = DVector::zeros(bands);
        for px in pixels.chunks_exact(bands) {
            mean += DVector::from_column_slice(px);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(bands, bands);
        for px in pixels.chunks_exact(bands) {
            let d = DVector::from_column_slice(px) - &mean;
            cov.ger(1.0, &d, &d, 1.0);
        }
        cov /= (n.max(2) - 1) as f64;
        Self::new(mean, cov)
    }

    pub fn new(mean: DVector<f64>, mut cov: DMatrix<f64>) -> Result<Self> {
        let b = mean.len();
        let jitter = (1e-6 * cov.trace() / b as f64).max(SIGMA2_FLOOR);
        for i in 0..b {
            cov[(i, i)] += jitter;
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Model("data covariance is not positive definite".into()))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            mean,
            log_norm: -0.5 * (b as f64 * (2.0 * std::f64::consts::PI).ln() + log_det),
            chol_lower: l,
        })
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let xi = DVector::from_iterator(
            self.mean.len(),
            (0..self.mean.len()).map(|_| rng.sample(StandardNormal)),
        );
        (&self.mean + &self.chol_lower * xi).as_slice().to_vec()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = DVector::from_column_slice(x) - &self.mean;
        let w = self
            .chol_lower
            .solve_lower_triangular(&d)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * w.norm_squared()
    }
}

pub fn mu_log_accept_ratio(
    k: usize,
    candidate: &[f64],
    corpus: &Corpus<'_>,
    docs: &[DocState],
    model: &EndmemberModel,
    proposal: &MeanProposal,
) -> f64 {
    let proposed = model.with_mean(k, candidate);
    data_log_likelihood(corpus, docs, &proposed) - data_log_likelihood(corpus, docs, model)
        + proposal.log_density(model.mean(k))
        - proposal.log_density(candidate)
}

/// Independence step for endmember mean `μ_k`, proposing from the data
/// distribution and correcting for the proposal density.
pub fn mh_step_mu<R: Rng + ?Sized>(
    k: usize,
    corpus: &Corpus<'_>,
    docs: &[DocState],
    model: &EndmemberModel,
    proposal: &MeanProposal,
    rng: &mut R,
) -> Step<Vec<f64>> {
    let candidate = proposal.sample(rng);
    if candidate.as_slice() == model.mean(k) {
        return Step {
            value: candidate,
            accepted: true,
        };
    }
    let lr = mu_log_accept_ratio(k, &candidate, corpus, docs, model, proposal);
    if accept(lr, rng) {
        Step {
            value: candidate,
            accepted: true,
        }
    } else {
        Step {
            value: model.mean(k).to_vec(),
            accepted: false,
        }
    }
}

/// Upper end `u = ½ (max_n ‖x_n − μ_D‖² − min_n ‖x_n − μ_D‖²)` of the
/// uniform variance proposal.
pub fn variance_proposal_bound(pixels: &[f64], bands: usize) -> f64 {
    let n = pixels.len() / bands;
    let mut mean = vec![0.0; bands];
    for px in pixels.chunks_exact(bands) {
        for (m, v) in mean.iter_mut().zip(px) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let (lo, hi) = pixels
        .chunks_exact(bands)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), px| {
            let d2: f64 = px.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum();
            (lo.min(d2), hi.max(d2))
        });
    0.5 * (hi - lo)
}

pub fn sigma2_log_accept_ratio(candidate: f64, corpus: &Corpus<'_>, docs: &[DocState], model: &EndmemberModel) -> f64 {
    data_log_likelihood(corpus, docs, &model.with_sigma2(candidate)) - data_log_likelihood(corpus, docs, model)
}

/// Step for the shared variance with candidate `σ²† ~ Unif(0, u)`, floored
/// at [`SIGMA2_FLOOR`]. Skipped (never accepted) when `u <= 0`.
pub fn mh_step_sigma2<R: Rng + ?Sized>(
    corpus: &Corpus<'_>,
    docs: &[DocState],
    model: &EndmemberModel,
    u: f64,
    rng: &mut R,
) -> Step<f64> {
    if !(u > 0.0) {
        return Step {
            value: model.sigma2(),
            accepted: false,
        };
    }
    let candidate = (rng.random::<f64>() * u).max(SIGMA2_FLOOR);
    let lr = sigma2_log_accept_ratio(candidate, corpus, docs, model);
    let accepted = accept(lr, rng);
    Step {
        value: if accepted { candidate } else { model.sigma2() },
        accepted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Block};

    #[test]
    fn nonnegative_ratio_always_accepts() {
        let mut rng = stream(0, 0, Block::Pi, 0, 0);
        assert!(accept(0.0, &mut rng));
        assert!(accept(3.0, &mut rng));
        assert!(accept(f64::INFINITY, &mut rng));
        assert!(!accept(f64::NAN, &mut rng));
        assert!(!accept(f64::NEG_INFINITY, &mut rng));
    }

    #[test]
    fn identical_candidates_have_zero_log_ratio() {
        let sup = Support::full(2);
        let z = [0.3, 0.7, 0.6, 0.4];
        assert_eq!(pi_log_accept_ratio(&[0.4, 0.6], &[0.4, 0.6], 2.0, &z, 0.3, &sup), 0.0);
        assert_eq!(s_log_accept_ratio(&[0.4, 0.6], 2.0, 2.0, &z, 1.0, &sup), 0.0);
        let m = EndmemberModel::new(2, 1, vec![0.0, 1.0], 0.1).unwrap();
        assert_eq!(
            z_log_accept_ratio(&[0.4, 0.6], 2.0, &z[..2], &z[..2], &[0.5], &m, &sup),
            0.0
        );
    }

    #[test]
    fn variance_bound_hand_case() {
        // Pixels at -2, 0, 1, 1 (mean 0): squared distances {4, 0, 1, 1} -> u = 2.
        assert_eq!(variance_proposal_bound(&[-2.0, 0.0, 1.0, 1.0], 1), 2.0);
        // Both pixels sit at squared distance 1 from the mean 2, so u = 0.
        assert_eq!(variance_proposal_bound(&[1.0, 3.0], 1), 0.0);
    }

    #[test]
    fn variance_bound_squared_distances_one_and_nine() {
        // Mean 0 with squared distances {1, 9, 9, 1}... pixels -3, 1, 3, -1.
        assert_eq!(variance_proposal_bound(&[-3.0, 1.0, 3.0, -1.0], 1), 4.0);
    }

    #[test]
    fn skipped_variance_step_keeps_value() {
        let px = [0.5, 0.5, 0.5];
        let docs_idx = vec![vec![0, 1, 2]];
        let corpus = Corpus {
            bands: 1,
            pixels: &px,
            docs: &docs_idx,
        };
        let docs = vec![DocState {
            pi: vec![1.0],
            s: 1.0,
            z: vec![1.0; 3],
        }];
        let m = EndmemberModel::new(1, 1, vec![0.5], 0.01).unwrap();
        let u = variance_proposal_bound(&px, 1);
        assert_eq!(u, 0.0);
        let step = mh_step_sigma2(&corpus, &docs, &m, u, &mut stream(0, 0, Block::Variance, 0, 0));
        assert_eq!(step.value, 0.01);
        assert!(!step.accepted);
    }

    #[test]
    fn mean_proposal_density_matches_closed_form_1d() {
        let q = MeanProposal::new(DVector::from_vec(vec![1.0]), DMatrix::from_element(1, 1, 4.0)).unwrap();
        let var = 4.0 * (1.0 + 1e-6);
        let expect = -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.25 / (2.0 * var);
        assert!((q.log_density(&[1.5]) - expect).abs() < 1e-12);
    }
}
