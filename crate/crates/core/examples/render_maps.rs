// Render proportion maps as 8-bit PGM images, one per endmember.

use spmlda::io::pgm::read_pgm;
use spmlda::metrics::ProportionMaps;
use spmlda::pipeline::render_maps;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (rows, cols) = (16, 16);
    let mut p = Vec::with_capacity(rows * cols * 2);
    for _r in 0..rows {
        for c in 0..cols {
            let a = c as f64 / (cols - 1) as f64;
            p.extend([a, 1.0 - a]);
        }
    }
    let maps = ProportionMaps::new(rows, cols, 2, p)?;

    let dir = std::env::temp_dir().join("spmlda_render_example");
    std::fs::create_dir_all(&dir)?;
    for path in render_maps(&maps, &dir)? {
        let img = read_pgm(&path)?;
        println!("{}: first row {:?}", path.display(), &img.pixels[..4]);
    }
    Ok(())
}
