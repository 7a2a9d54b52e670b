//! Synthetic scenes drawn from the generative model, with every latent
//! variable returned as ground truth.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::inference::{propose_pi, propose_s, sample_dirichlet, EndmemberModel, Support};
use crate::io::HsiCube;
use crate::metrics::ProportionMaps;
use crate::rng::{stream, Block};
use crate::superpixel::Segmentation;
use crate::supervision::LabelMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    pub bands: usize,
    pub k: usize,
    /// Row-major `K x B`; drawn uniformly from `[0.1, 1.0]` per band when absent.
    pub true_means: Option<Vec<f64>>,
    pub sigma2: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Documents are `tile_rows x tile_cols` tiles.
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub seed: u64,
    /// Allowed endmembers per document; all allowed when absent.
    pub masks: Option<Vec<Vec<bool>>>,
    /// Use this mixing level in every document instead of drawing `s ~ Exp(λ)`.
    pub fixed_mixing: Option<f64>,
}

impl SynthSpec {
    pub fn new(rows: usize, cols: usize, bands: usize, k: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            bands,
            k,
            true_means: None,
            sigma2: 1e-4,
            alpha: 1.0,
            lambda: 1.0,
            tile_rows: 8,
            tile_cols: 8,
            seed,
            masks: None,
            fixed_mixing: None,
        }
    }

    pub fn n_documents(&self) -> usize {
        self.rows.div_ceil(self.tile_rows) * self.cols.div_ceil(self.tile_cols)
    }

    /// Forbid `endmember` in the documents of the right half of the tile grid.
    pub fn mask_right_half(mut self, endmember: usize) -> Self {
        let across = self.cols.div_ceil(self.tile_cols);
        let masks = (0..self.n_documents())
            .map(|d| {
                let mut m = vec![true; self.k];
                if d % across >= across.div_ceil(2) {
                    m[endmember] = false;
                }
                m
            })
            .collect();
        self.masks = Some(masks);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.bands == 0 || self.k == 0 {
            return Err(Error::Model("synthetic scene dimensions must be positive".into()));
        }
        if !(self.sigma2 > 0.0 && self.alpha > 0.0 && self.lambda > 0.0) {
            return Err(Error::Model("sigma2, alpha and lambda must be positive".into()));
        }
        if let Some(m) = &self.true_means {
            if m.len() != self.k * self.bands {
                return Err(Error::Model(format!(
                    "{} true mean values for {}x{}",
                    m.len(),
                    self.k,
                    self.bands
                )));
            }
        }
        if let Some(masks) = &self.masks {
            if masks.len() != self.n_documents() || masks.iter().any(|m| m.len() != self.k) {
                return Err(Error::Model("one K-long mask per document is required".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub proportions: ProportionMaps,
    pub endmembers: EndmemberModel,
    pub segmentation: Segmentation,
    pub tau: LabelMatrix,
    /// Document proportions, one K-vector per tile.
    pub pi: Vec<Vec<f64>>,
    pub s: Vec<f64>,
}

/// Draw `π^d ~ Dir(α)` (masked), `s^d ~ Exp(λ)`, `z_n ~ Dir(π^d s^d)` and
/// `x_n ~ N(Σ_k z_nk μ_k, σ² I)` for every tile document.
pub fn generate(spec: &SynthSpec) -> Result<(HsiCube, SynthTruth)> {
    spec.validate()?;
    let (k, b) = (spec.k, spec.bands);
    let means = match &spec.true_means {
        Some(m) => m.clone(),
        None => {
            let mut rng = stream(spec.seed, 0, Block::Synth, u64::MAX, 0);
            (0..k * b).map(|_| rng.random_range(0.1..1.0)).collect()
        }
    };
    let endmembers = EndmemberModel::new(k, b, means, spec.sigma2)?;
    let segmentation = Segmentation::tiles(spec.rows, spec.cols, spec.tile_rows, spec.tile_cols)?;
    let supports: Vec<Support> = match &spec.masks {
        Some(masks) => masks.iter().map(|m| Support::from_mask(m)).collect::<Result<_>>()?,
        None => vec![Support::full(k); segmentation.n_superpixels()],
    };

    let noise = Normal::new(0.0, spec.sigma2.sqrt()).expect("finite positive variance");
    let n = spec.rows * spec.cols;
    let mut data = vec![0.0; n * b];
    let mut props = vec![0.0; n * k];
    let mut pis = Vec::with_capacity(supports.len());
    let mut ss = Vec::with_capacity(supports.len());
    for (d, members) in segmentation.members().iter().enumerate() {
        let sup = &supports[d];
        let mut rng = stream(spec.seed, 0, Block::Synth, d as u64, 0);
        let pi = propose_pi(spec.alpha, sup, &mut rng);
        let s = spec.fixed_mixing.unwrap_or_else(|| propose_s(spec.lambda, &mut rng));
        let conc: Vec<f64> = pi.iter().map(|p| p * s).collect();
        for (j, &i) in members.iter().enumerate() {
            let mut rng = stream(spec.seed, 0, Block::Synth, d as u64, j as u64 + 1);
            let sup_here = positive_support(&conc, sup);
            let z = sample_dirichlet(&conc, &sup_here, &mut rng);
            let mix = endmembers.mixed_mean(&z);
            for (o, m) in data[i * b..(i + 1) * b].iter_mut().zip(mix) {
                *o = m + noise.sample(&mut rng);
            }
            props[i * k..(i + 1) * k].copy_from_slice(&z);
        }
        pis.push(pi);
        ss.push(s);
    }

    let tau = match &spec.masks {
        None => LabelMatrix::all_ones(k, segmentation.n_superpixels()),
        Some(masks) => LabelMatrix::from_rows((0..k).map(|e| masks.iter().map(|m| m[e] as u8).collect()).collect())?,
    };
    let cube = HsiCube::new(spec.rows, spec.cols, b, data)?;
    let proportions = ProportionMaps::new(spec.rows, spec.cols, k, props)?;
    Ok((
        cube,
        SynthTruth {
            proportions,
            endmembers,
            segmentation,
            tau,
            pi: pis,
            s: ss,
        },
    ))
}

/// Drop supported indices whose concentration underflowed to zero.
fn positive_support(conc: &[f64], sup: &Support) -> Support {
    let mask: Vec<bool> = (0..conc.len()).map(|i| sup.contains(i) && conc[i] > 0.0).collect();
    Support::from_mask(&mask).unwrap_or_else(|_| sup.clone())
}
