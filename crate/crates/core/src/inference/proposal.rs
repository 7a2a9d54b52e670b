use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use super::Support;

/// Draw from a Dirichlet restricted to `support` by normalizing independent
/// `Gamma(a_k, 1)` draws. Unsupported entries are exactly zero and a single
/// supported index yields a one-hot vector.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: &[f64], support: &Support, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; support.k()];
    let idx = support.indices();
    if idx.len() == 1 {
        out[idx[0]] = 1.0;
        return out;
    }
    let mut total = 0.0;
    for &k in idx {
        let g = Gamma::new(concentration[k], 1.0)
            .expect("Dirichlet concentration must be positive")
            .sample(rng);
        out[k] = g;
        total += g;
    }
    if total > 0.0 && total.is_finite() {
        for &k in idx {
            out[k] /= total;
        }
    } else {
        // Every gamma draw underflowed; the largest concentration wins.
        let best = idx
            .iter()
            .copied()
            .fold(idx[0], |b, k| if concentration[k] > concentration[b] { k } else { b });
        out.iter_mut().for_each(|v| *v = 0.0);
        out[best] = 1.0;
    }
    out
}

/// Document proportion candidate `π† ~ Dir(τ_d ⊗ α)`.
pub fn propose_pi<R: Rng + ?Sized>(alpha: f64, support: &Support, rng: &mut R) -> Vec<f64> {
    sample_dirichlet(&vec![alpha; support.k()], support, rng)
}

/// Mixing level candidate `s† ~ Exp(λ)`.
pub fn propose_s<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    Exp::new(lambda).expect("rate must be positive").sample(rng)
}

/// Membership candidate, uniform on the support sub-simplex.
pub fn propose_membership<R: Rng + ?Sized>(support: &Support, rng: &mut R) -> Vec<f64> {
    sample_dirichlet(&vec![1.0; support.k()], support, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Block};

    #[test]
    fn masked_component_is_exactly_zero() {
        let sup = Support::from_mask(&[true, false, true]).unwrap();
        let mut rng = stream(1, 0, Block::Pi, 0, 0);
        for _ in 0..200 {
            let p = propose_pi(0.3, &sup, &mut rng);
            assert_eq!(p[1], 0.0);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_support_is_one_hot() {
        let sup = Support::from_mask(&[false, true, false]).unwrap();
        let mut rng = stream(1, 0, Block::Pi, 0, 0);
        assert_eq!(propose_pi(0.3, &sup, &mut rng), vec![0.0, 1.0, 0.0]);
        assert_eq!(propose_membership(&sup, &mut rng), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_mask_is_rejected() {
        assert!(Support::from_mask(&[false, false]).is_err());
    }

    #[test]
    fn dirichlet_marginal_means() {
        // E[π_k] = a_k / Σa.
        let sup = Support::full(3);
        let conc = [0.5, 1.0, 2.5];
        let mut rng = stream(9, 0, Block::Pi, 0, 0);
        let n = 40_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            for (a, v) in acc.iter_mut().zip(sample_dirichlet(&conc, &sup, &mut rng)) {
                *a += v;
            }
        }
        for (a, c) in acc.iter().zip(conc) {
            assert!((a / n as f64 - c / 4.0).abs() < 0.01);
        }
    }
}
