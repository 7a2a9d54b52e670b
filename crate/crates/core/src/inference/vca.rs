//! Vertex Component Analysis initialization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{residual_variance, EndmemberModel};
use crate::error::{Error, Result};
use crate::io::HsiCube;

/// Top `d` eigenvectors (columns, by descending eigenvalue) of a symmetric matrix.
fn leading_eigenvectors(m: DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    DMatrix::from_columns(
        &order[..d]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    )
}

/// Pick `k` endmember spectra from the pixels.
///
/// The data are projected onto a `k`-dimensional signal subspace (projective
/// projection at high SNR, PCA plus an offset coordinate at low SNR). Then,
/// `k` times, a random direction orthogonal to the span of the vertices found
/// so far is drawn and the pixel with the most extreme projection on it is
/// taken. Already-chosen pixels, and pixels duplicating a chosen spectrum, are
/// skipped while alternatives exist.
///
/// The returned model carries the chosen spectra as means and, as `σ²`, the
/// mean squared per-band residual of a sum-to-one least-squares fit of every
/// pixel against them.
pub fn vca_init<R: Rng + ?Sized>(cube: &HsiCube, k: usize, rng: &mut R) -> Result<EndmemberModel> {
    let n = cube.n_pixels();
    let b = cube.bands();
    if k == 0 || k > n {
        return Err(Error::Model(format!("cannot pick {k} endmembers from {n} pixels")));
    }
    if k > b + 1 {
        return Err(Error::Model(format!(
            "cannot pick {k} endmembers in {b} bands (need K <= B + 1)"
        )));
    }
    let r = DMatrix::from_column_slice(b, n, cube.data());

    let chosen = if k == 1 {
        let w = DVector::from_iterator(b, (0..b).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let v = r.tr_mul(&w);
        vec![argmax_excluding(&v, &r, &[])]
    } else {
        let y = signal_subspace(&r, k);
        let mut a = DMatrix::<f64>::zeros(k, k);
        a[(k - 1, 0)] = 1.0;
        let mut chosen = Vec::with_capacity(k);
        for i in 0..k {
            let w = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let pinv = a
                .clone()
                .pseudo_inverse(1e-12)
                .expect("pseudo-inverse of a finite matrix");
            let f = &w - &a * (pinv * &w);
            let f = f.normalize();
            let v = y.tr_mul(&f);
            let idx = argmax_excluding(&v, &r, &chosen);
            a.set_column(i, &y.column(idx));
            chosen.push(idx);
        }
        chosen
    };

    let mut means = Vec::with_capacity(k * b);
    for &i in &chosen {
        means.extend_from_slice(cube.pixel(i));
    }
    let model = EndmemberModel::new(k, b, means, 1.0)?;
    let sigma2 = residual_variance(cube.data(), b, &model);
    Ok(model.with_sigma2(sigma2))
}

/// Data projected to `k` rows (`k x N`).
fn signal_subspace(r: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (b, n) = r.shape();
    let nf = n as f64;
    let mean = r.column_mean();
    let centered = r - &mean * DVector::from_element(n, 1.0).transpose();
    let cov = &centered * centered.transpose() / nf;
    let ud = leading_eigenvectors(cov, k.min(b));
    let xp = ud.tr_mul(&centered);

    let power_total = r.norm_squared() / nf;
    let power_signal = xp.rows(0, k.min(b)).norm_squared() / nf + mean.norm_squared();
    let snr = {
        let denom = power_total - power_signal;
        if denom <= 0.0 {
            f64::INFINITY
        } else {
            10.0 * ((power_signal - k as f64 / b as f64 * power_total) / denom).log10()
        }
    };
    let snr_threshold = 15.0 + 10.0 * (k as f64).log10();

    if snr >= snr_threshold && k <= b {
        let corr = r * r.transpose() / nf;
        let ud = leading_eigenvectors(corr, k);
        let x = ud.tr_mul(r);
        let u = x.column_mean();
        let mut y = x;
        for mut col in y.column_iter_mut() {
            let scale = col.dot(&u);
            if scale != 0.0 {
                col /= scale;
            }
        }
        y
    } else {
        let d = k - 1;
        let x = xp.rows(0, d).into_owned();
        let c = x.column_iter().map(|col| col.norm()).fold(0.0, f64::max);
        let mut y = DMatrix::zeros(k, n);
        y.rows_mut(0, d).copy_from(&x);
        y.row_mut(d).fill(c);
        y
    }
}

/// Index of the largest `|v_i|`, skipping chosen pixels and (while possible)
/// pixels equal to a chosen spectrum. Ties go to the lowest index.
fn argmax_excluding(v: &DVector<f64>, r: &DMatrix<f64>, chosen: &[usize]) -> usize {
    let duplicate = |i: usize| chosen.iter().any(|&c| r.column(c) == r.column(i));
    let pick = |skip_dupes: bool| {
        (0..v.len())
            .filter(|i| !chosen.contains(i) && !(skip_dupes && duplicate(*i)))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if v[b].abs() >= v[i].abs() => Some(b),
                _ => Some(i),
            })
    };
    pick(true).or_else(|| pick(false)).expect("K <= N leaves a candidate")
}
