use log::debug;
use rayon::prelude::*;

use super::density::{dirichlet_log_density, exponential_log_density, membership_log_likelihood, word_ll};
use super::steps::{
    mh_step_mu, mh_step_pi, mh_step_s, mh_step_sigma2, mh_step_z, variance_proposal_bound, MeanProposal,
};
use super::{fitted_state, Corpus, DocState, EndmemberModel, Hyperparams, ModelState, Support};
use crate::error::{Error, Result};
use crate::io::HsiCube;
use crate::metrics::ProportionMaps;
use crate::rng::{stream, Block};
use crate::superpixel::Segmentation;
use crate::supervision::LabelMatrix;

/// Acceptance fractions of the five blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlockRates {
    pub pi: f64,
    pub s: f64,
    pub z: f64,
    pub mu: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// `(iteration, state)` snapshots every `thin` iterations.
    pub states: Vec<(usize, ModelState)>,
    pub thin: usize,
    /// Joint log density after each iteration; length `T`.
    pub log_density_trace: Vec<f64>,
    pub iteration_rates: Vec<BlockRates>,
    /// Acceptance fractions pooled over the whole run.
    pub acceptance_rates: BlockRates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutput {
    pub chain: Chain,
    /// Highest joint density state after burn-in.
    pub map_state: ModelState,
    pub map_iteration: usize,
    pub map_log_density: f64,
    pub proportions: ProportionMaps,
}

impl SamplerOutput {
    pub fn endmembers(&self) -> &EndmemberModel {
        &self.map_state.model
    }
}

#[derive(Default, Clone, Copy)]
struct Counts {
    accepted: usize,
    tried: usize,
}

impl Counts {
    fn add(&mut self, accepted: bool) {
        self.tried += 1;
        self.accepted += accepted as usize;
    }

    fn merge(&mut self, other: Counts) {
        self.tried += other.tried;
        self.accepted += other.accepted;
    }

    fn rate(&self) -> f64 {
        if self.tried == 0 {
            0.0
        } else {
            self.accepted as f64 / self.tried as f64
        }
    }
}

/// Total joint log density of a state: the sum over documents of
/// `log Dir(π|α) + log Exp(s|λ) + Σ_n [log Dir(z_n|π s) + log p(x_n|z_n)]`,
/// accumulated in document order.
pub fn state_log_density(corpus: &Corpus<'_>, supports: &[Support], hyper: &Hyperparams, state: &ModelState) -> f64 {
    let alpha = vec![hyper.alpha; hyper.k];
    let partial: Vec<f64> = state
        .docs
        .par_iter()
        .enumerate()
        .map(|(d, doc)| {
            let sup = &supports[d];
            let words: f64 = corpus
                .doc_pixels(d)
                .enumerate()
                .map(|(n, x)| word_ll(x, doc.membership(n), &state.model))
                .sum();
            dirichlet_log_density(&doc.pi, &alpha, sup)
                + exponential_log_density(doc.s, hyper.lambda)
                + membership_log_likelihood(&doc.pi, doc.s, &doc.z, sup)
                + words
        })
        .collect();
    partial.iter().sum()
}

fn sweep_document(
    d: usize,
    doc: &mut DocState,
    corpus: &Corpus<'_>,
    support: &Support,
    hyper: &Hyperparams,
    model: &EndmemberModel,
    t: usize,
) -> [Counts; 3] {
    let mut counts = [Counts::default(); 3];
    let (seed, it) = (hyper.seed, t as u64);

    let mut rng = stream(seed, it, Block::Pi, d as u64, 0);
    let step = mh_step_pi(&doc.pi, doc.s, &doc.z, hyper.alpha, support, &mut rng);
    counts[0].add(step.accepted);
    doc.pi = step.value;

    let mut rng = stream(seed, it, Block::MixingLevel, d as u64, 0);
    let step = mh_step_s(&doc.pi, doc.s, &doc.z, hyper.lambda, support, &mut rng);
    counts[1].add(step.accepted);
    doc.s = step.value;

    let k = doc.pi.len();
    for (n, x) in corpus.doc_pixels(d).enumerate() {
        let mut rng = stream(seed, it, Block::Membership, d as u64, n as u64);
        let step = mh_step_z(&doc.pi, doc.s, doc.membership(n), x, model, support, &mut rng);
        counts[2].add(step.accepted);
        if step.accepted {
            doc.z[n * k..(n + 1) * k].copy_from_slice(&step.value);
        }
    }
    counts
}

/// Metropolis-within-Gibbs over all latent variables.
///
/// Each iteration sweeps every document (`π`, then `s`, then each pixel's
/// `z`), then every endmember mean, then the shared variance. Documents are
/// processed in parallel; all draws come from keyed streams, so the chain is
/// identical for any thread count. Without a label matrix every endmember is
/// allowed everywhere.
pub fn run_sampler(
    cube: &HsiCube,
    seg: &Segmentation,
    tau: Option<&LabelMatrix>,
    hyper: &Hyperparams,
    init: &EndmemberModel,
) -> Result<SamplerOutput> {
    hyper.validate()?;
    if seg.rows() != cube.rows() || seg.cols() != cube.cols() {
        return Err(Error::Consistency(format!(
            "segmentation is {}x{} but cube is {}x{}",
            seg.rows(),
            seg.cols(),
            cube.rows(),
            cube.cols()
        )));
    }
    if init.k() != hyper.k || init.bands() != cube.bands() {
        return Err(Error::Consistency(format!(
            "initial endmembers are {}x{}, expected {}x{}",
            init.k(),
            init.bands(),
            hyper.k,
            cube.bands()
        )));
    }
    let supports: Vec<Support> = match tau {
        None => vec![Support::full(hyper.k); seg.n_superpixels()],
        Some(tau) => {
            if tau.n_endmembers() != hyper.k || tau.n_superpixels() != seg.n_superpixels() {
                return Err(Error::Consistency(format!(
                    "label matrix is {}x{} but model has K = {} and {} superpixels",
                    tau.n_endmembers(),
                    tau.n_superpixels(),
                    hyper.k,
                    seg.n_superpixels()
                )));
            }
            (0..seg.n_superpixels())
                .map(|j| Support::from_mask(&tau.column(j)))
                .collect::<Result<_>>()?
        }
    };

    let corpus = Corpus {
        bands: cube.bands(),
        pixels: cube.data(),
        docs: seg.members(),
    };
    let mean_proposal = MeanProposal::from_pixels(cube.data(), cube.bands())?;
    let u = variance_proposal_bound(cube.data(), cube.bands());
    let mut state = fitted_state(&corpus, &supports, 1.0 / hyper.lambda, init.clone());

    let total = hyper.iterations;
    let thin = (total / 100).max(1);
    let burn_in = hyper.burn_in();
    let mut chain = Chain {
        states: Vec::with_capacity(total / thin + 1),
        thin,
        log_density_trace: Vec::with_capacity(total),
        iteration_rates: Vec::with_capacity(total),
        acceptance_rates: BlockRates::default(),
    };
    let mut pooled = [Counts::default(); 5];
    let mut best: Option<(f64, usize, ModelState)> = None;

    for t in 1..=total {
        let model = state.model.clone();
        let doc_counts: Vec<[Counts; 3]> = state
            .docs
            .par_iter_mut()
            .enumerate()
            .map(|(d, doc)| sweep_document(d, doc, &corpus, &supports[d], hyper, &model, t))
            .collect();
        let mut it_counts = [Counts::default(); 5];
        for c in &doc_counts {
            for b in 0..3 {
                it_counts[b].merge(c[b]);
            }
        }

        for k in 0..hyper.k {
            let mut rng = stream(hyper.seed, t as u64, Block::Mean, k as u64, 0);
            let step = mh_step_mu(k, &corpus, &state.docs, &state.model, &mean_proposal, &mut rng);
            it_counts[3].add(step.accepted);
            state.model.set_mean(k, &step.value);
        }

        if u > 0.0 {
            let mut rng = stream(hyper.seed, t as u64, Block::Variance, 0, 0);
            let step = mh_step_sigma2(&corpus, &state.docs, &state.model, u, &mut rng);
            it_counts[4].add(step.accepted);
            state.model.set_sigma2(step.value);
        }

        let lp = state_log_density(&corpus, &supports, hyper, &state);
        chain.log_density_trace.push(lp);
        chain.iteration_rates.push(BlockRates {
            pi: it_counts[0].rate(),
            s: it_counts[1].rate(),
            z: it_counts[2].rate(),
            mu: it_counts[3].rate(),
            sigma2: it_counts[4].rate(),
        });
        for (p, c) in pooled.iter_mut().zip(it_counts) {
            p.merge(c);
        }
        if t % thin == 0 {
            chain.states.push((t, state.clone()));
        }
        if t > burn_in && best.as_ref().is_none_or(|(b, _, _)| lp > *b) {
            best = Some((lp, t, state.clone()));
        }
        debug!(
            "iteration {t}: log density {lp:.6e}, sigma2 {:.3e}",
            state.model.sigma2()
        );
    }

    chain.acceptance_rates = BlockRates {
        pi: pooled[0].rate(),
        s: pooled[1].rate(),
        z: pooled[2].rate(),
        mu: pooled[3].rate(),
        sigma2: pooled[4].rate(),
    };
    // NaN densities never win the comparison above; fall back to the last state.
    let (map_log_density, map_iteration, map_state) =
        best.unwrap_or_else(|| (*chain.log_density_trace.last().unwrap(), total, state.clone()));
    let proportions = ProportionMaps::from_state(seg, &map_state);
    Ok(SamplerOutput {
        chain,
        map_state,
        map_iteration,
        map_log_density,
        proportions,
    })
}
