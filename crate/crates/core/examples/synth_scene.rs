// Draw a small synthetic scene with known endmembers and proportions.
//
// Run with `cargo run --example synth_scene`.

use spmlda::synthgen::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 32x32 pixels, 8 bands, 3 endmembers; endmember 2 is forbidden in the
    // right half of the 8x8 tile documents.
    let spec = SynthSpec::new(32, 32, 8, 3, 7).mask_right_half(2);
    let (cube, truth) = generate(&spec)?;

    println!(
        "{}x{} cube, {} bands, {} documents",
        cube.rows(),
        cube.cols(),
        cube.bands(),
        truth.segmentation.n_superpixels()
    );
    for (d, (pi, s)) in truth.pi.iter().zip(&truth.s).enumerate().take(4) {
        println!("doc {d}: pi = {pi:.3?}, s = {s:.3}");
    }
    let forbidden = truth.tau.row(2).iter().filter(|&&v| v == 0).count();
    println!("endmember 2 forbidden in {forbidden} documents");
    Ok(())
}
