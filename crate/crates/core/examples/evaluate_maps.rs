// Score proportion maps: total entropy and NCM log-likelihood.

use spmlda::metrics::{ncm_log_likelihood, proportion_entropy, ProportionMaps};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A 1x2 image with two endmembers: one pure pixel, one even mix.
    let maps = ProportionMaps::new(1, 2, 2, vec![1.0, 0.0, 0.5, 0.5])?;
    let entropy = proportion_entropy(&maps)?;
    println!(
        "entropy: total {:.6} (ln 2 = {:.6}), per pixel {:.6}",
        entropy.total,
        2f64.ln(),
        entropy.per_pixel
    );

    // Single-band endmembers at 0 and 2, unit variance.
    let means = [0.0, 2.0];
    let pixels = [0.1, 1.0];
    let ll = ncm_log_likelihood(&pixels, &means, &maps, &[1.0, 1.0])?;
    println!("NCM log-likelihood: {ll:.6}");
    Ok(())
}
