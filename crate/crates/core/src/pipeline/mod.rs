//! The six pipeline stages as library calls. Each command reads its inputs
//! from a [`RunConfig`], writes files under `config.output`, and returns the
//! paths it wrote. The `spmlda` binary is a thin argument parser over these.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use sha2::{Digest, Sha256};

pub use config::{parse_class_map, parse_runs, RunConfig, KEYS};

use crate::error::{Error, Result};
use crate::inference::{run_sampler, vca_init};
use crate::io::pgm::{write_pgm, Pgm};
use crate::io::tables::{
    read_endmember_means, read_manifest, read_merge_report, read_proportions, read_segmentation_csv, read_tau,
    write_chain_summary, write_endmembers, write_manifest, write_merge_report, write_proportions,
    write_segmentation_csv, write_segmentation_pgm, write_tau,
};
use crate::io::{
    envi_paths, load_cube, load_geotransform, load_polygons, preprocess_unit_norm, write_cube, CubeFormat, HsiCube,
    Interleave,
};
use crate::metrics::{ncm_log_likelihood, proportion_entropy, proportion_mae, ProportionMaps};
use crate::rng::{stream, Block};
use crate::superpixel::{merge_by_polygons, segment};
use crate::supervision::{build_tau, LabelMatrix};
use crate::synthgen::generate;

/// Run `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(f)
}

/// SHA-256 over a git-style `blob <len>\0` header followed by the content.
pub fn content_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(&bytes);
    let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

fn require<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("missing required setting '{key}'")))
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    Ok(cfg.output.clone())
}

struct Manifest(BTreeMap<String, String>);

impl Manifest {
    fn new(command: &str) -> Self {
        let mut m = BTreeMap::new();
        m.insert("command".into(), command.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        Manifest(m)
    }

    fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.into(), value.to_string());
    }

    /// Record an input's path and content hash. ENVI cubes hash both files.
    fn input(&mut self, key: &str, path: &Path) -> Result<()> {
        self.set(key, path.display());
        if key == "cube" && CubeFormat::from_path(path) == CubeFormat::Envi {
            let (hdr, bin) = envi_paths(path);
            self.set("cube_header_hash", content_hash(&hdr)?);
            self.set("cube_payload_hash", content_hash(&bin)?);
        } else {
            self.set(&format!("{key}_hash"), content_hash(path)?);
        }
        Ok(())
    }

    fn write(self, path: &Path) -> Result<()> {
        write_manifest(&self.0, path)
    }
}

/// Load the cube named by `cfg.cube`, attach a geotransform if one is given,
/// and unit-normalize when `cfg.normalize` is set.
pub fn load_input_cube(cfg: &RunConfig) -> Result<HsiCube> {
    let path = require(&cfg.cube, "cube")?;
    let mut cube = load_cube(path, CubeFormat::from_path(path))?;
    if let Some(gt) = &cfg.geotransform {
        cube = cube.with_geotransform(load_geotransform(gt)?);
    }
    Ok(if cfg.normalize {
        preprocess_unit_norm(&cube).cube
    } else {
        cube
    })
}

/// Superpixel segmentation, merged against polygons when `cfg.polygons` is
/// set. Writes `segmentation.csv`, `segmentation.pgm`, `merge_report.csv`
/// (with polygons) and `segment_manifest.txt`.
pub fn cmd_segment(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = output_dir(cfg)?;
    let cube = load_input_cube(cfg)?;
    let polys = cfg.polygons.as_deref().map(load_polygons).transpose()?;

    let (seg, report) = with_threads(cfg.threads, || {
        let seg = segment(&cube, &cfg.slic)?;
        info!("{} superpixels before merging", seg.n_superpixels());
        match &polys {
            Some(p) => merge_by_polygons(&seg, p, cube.geotransform.as_ref()).map(|(s, r)| (s, Some(r))),
            None => Ok((seg, None)),
        }
    })?;

    let mut written = vec![out.join("segmentation.csv"), out.join("segmentation.pgm")];
    write_segmentation_csv(&seg, &written[0])?;
    write_segmentation_pgm(&seg, &written[1])?;

    let mut m = Manifest::new("segment");
    m.input("cube", require(&cfg.cube, "cube")?)?;
    if let Some(p) = &cfg.polygons {
        m.input("polygons", p)?;
    }
    if let Some(p) = &cfg.geotransform {
        m.input("geotransform", p)?;
    }
    if let Some(r) = &report {
        let p = out.join("merge_report.csv");
        write_merge_report(r, &p)?;
        written.push(p);
    }
    m.set("normalize", cfg.normalize);
    m.set("superpixels", cfg.slic.k_target);
    m.set("m", cfg.slic.m);
    m.set("max_iters", cfg.slic.max_iters);
    m.set("move_tol", cfg.slic.move_tol);
    m.set("perturb_window", cfg.slic.perturb_window);
    m.set("superpixel_count", seg.n_superpixels());
    let p = out.join("segment_manifest.txt");
    m.write(&p)?;
    written.push(p);
    Ok(written)
}

/// Label matrix from a segmentation, its merge report and `cfg.class_map`.
/// Writes `tau.csv`.
pub fn cmd_label(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = output_dir(cfg)?;
    let seg = read_segmentation_csv(require(&cfg.segmentation, "segmentation")?)?;
    let report = match &cfg.merge_report {
        Some(p) => read_merge_report(p)?,
        None => BTreeMap::new(),
    };
    for tag in report.keys().filter(|t| !cfg.class_map.contains_key(*t)) {
        warn!("class '{tag}' has no endmember in class_map; ignored");
    }
    let mut tau = build_tau(seg.n_superpixels(), cfg.hyper.k, &report, &cfg.class_map)?;
    if let Some(names) = &cfg.endmember_names {
        tau = tau.with_names(names.clone())?;
    }
    let p = out.join("tau.csv");
    write_tau(&tau, &p)?;
    Ok(vec![p])
}

/// Run the sampler. Writes `proportions.csv`, one `proportion_<k>.pgm` per
/// endmember, `endmembers.csv`, `chain.csv` and `manifest.txt`; with
/// `cfg.timing` also `timing.txt`, which is the only output that varies
/// between identical runs.
pub fn cmd_unmix(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = output_dir(cfg)?;
    let cube = load_input_cube(cfg)?;
    let seg = read_segmentation_csv(require(&cfg.segmentation, "segmentation")?)?;
    let tau: Option<LabelMatrix> = cfg.tau.as_deref().map(read_tau).transpose()?;
    if let Some(eps) = cfg.epsilon {
        warn!("epsilon = {eps} has no effect on the sampler");
    }

    let started = Instant::now();
    let hyper = &cfg.hyper;
    let result = with_threads(cfg.threads, || {
        let init = vca_init(&cube, hyper.k, &mut stream(hyper.seed, 0, Block::Init, 0, 0))?;
        run_sampler(&cube, &seg, tau.as_ref(), hyper, &init)
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut written = vec![
        out.join("proportions.csv"),
        out.join("endmembers.csv"),
        out.join("chain.csv"),
    ];
    write_proportions(&result.proportions, &written[0])?;
    write_endmembers(result.endmembers(), &written[1])?;
    write_chain_summary(&result.chain, &written[2])?;
    written.extend(render_maps(&result.proportions, &out)?);

    let mut m = Manifest::new("unmix");
    m.input("cube", require(&cfg.cube, "cube")?)?;
    m.input("segmentation", require(&cfg.segmentation, "segmentation")?)?;
    match &cfg.tau {
        Some(p) => m.input("tau", p)?,
        None => m.set("tau", "all-ones"),
    }
    if let Some(p) = &cfg.geotransform {
        m.input("geotransform", p)?;
    }
    if let Some(eps) = cfg.epsilon {
        m.set("epsilon", eps);
    }
    m.set("seed", hyper.seed);
    m.set("normalize", cfg.normalize);
    m.set("endmembers", hyper.k);
    m.set("alpha", hyper.alpha);
    m.set("lambda", hyper.lambda);
    m.set("iterations", hyper.iterations);
    m.set("burn_in_fraction", hyper.burn_in_fraction);
    m.set("sigma2", result.endmembers().sigma2());
    m.set("map_iteration", result.map_iteration);
    m.set("map_log_density", result.map_log_density);
    let r = result.chain.acceptance_rates;
    m.set("acceptance", format!("{},{},{},{},{}", r.pi, r.s, r.z, r.mu, r.sigma2));
    let p = out.join("manifest.txt");
    m.write(&p)?;
    written.push(p);

    if cfg.timing {
        let p = out.join("timing.txt");
        fs::write(&p, format!("runtime_seconds = {elapsed}\n")).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}

/// One row per run directory in `cfg.runs`: entropy, NCM log-likelihood of
/// `cfg.cube`, runtime (when `cfg.timing` and the run recorded one) and,
/// given `cfg.truth`, proportion MAE. Writes `metrics.csv`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.runs.is_empty() {
        return Err(Error::Config("eval needs at least one run (name=dir)".into()));
    }
    let out = output_dir(cfg)?;
    let cube_path = require(&cfg.cube, "cube")?;
    let raw = load_cube(cube_path, CubeFormat::from_path(cube_path))?;
    let normalized = preprocess_unit_norm(&raw).cube;
    let truth = cfg.truth.as_deref().map(read_proportions).transpose()?;

    let mut csv = String::from("method,entropy_total,log_likelihood,runtime_seconds,entropy_per_pixel");
    if truth.is_some() {
        csv.push_str(",proportion_mae");
    }
    csv.push('\n');
    for (name, dir) in &cfg.runs {
        let maps = read_proportions(&dir.join("proportions.csv"))?;
        let (k, b, means) = read_endmember_means(&dir.join("endmembers.csv"))?;
        let manifest = read_manifest(&dir.join("manifest.txt"))?;
        let sigma2: f64 = manifest
            .get("sigma2")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::DataFormat(format!("{}: manifest lacks sigma2", dir.display())))?;
        let cube = if manifest.get("normalize").map(String::as_str) == Some("false") {
            &raw
        } else {
            &normalized
        };
        if maps.rows != cube.rows() || maps.cols != cube.cols() || maps.k != k || b != cube.bands() {
            return Err(Error::Consistency(format!(
                "run '{name}': {}x{} maps with K = {}, {k}x{b} endmembers, cube {}x{}x{}",
                maps.rows,
                maps.cols,
                maps.k,
                cube.rows(),
                cube.cols(),
                cube.bands()
            )));
        }
        let entropy = proportion_entropy(&maps)?;
        let ll = ncm_log_likelihood(cube.data(), &means, &maps, &vec![sigma2; k])?;
        let runtime = if cfg.timing {
            fs::read_to_string(dir.join("timing.txt"))
                .ok()
                .and_then(|t| crate::io::tables::parse_key_values(&t).ok())
                .and_then(|m| m.get("runtime_seconds").cloned())
                .unwrap_or_else(|| "NA".into())
        } else {
            "NA".into()
        };
        csv.push_str(&format!(
            "{name},{},{ll},{runtime},{}",
            entropy.total, entropy.per_pixel
        ));
        if let Some(t) = &truth {
            csv.push_str(&format!(",{}", proportion_mae(&maps, t)?));
        }
        csv.push('\n');
    }
    let p = out.join("metrics.csv");
    fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
    Ok(vec![p])
}

/// Synthetic scene with ground truth from `cfg.synth`. Writes `cube.hdr` and
/// `cube.bin`, `truth_proportions.csv`, `truth_endmembers.csv`,
/// `truth_segmentation.csv`, `truth_tau.csv` and `synth_manifest.txt`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = output_dir(cfg)?;
    let scene = &cfg.synth;
    let (cube, truth) = with_threads(cfg.threads, || generate(scene))?;
    let hdr = out.join("cube.hdr");
    write_cube(&cube, &hdr, CubeFormat::Envi, Interleave::Bsq)?;
    let written = vec![
        hdr.clone(),
        envi_paths(&hdr).1,
        out.join("truth_proportions.csv"),
        out.join("truth_endmembers.csv"),
        out.join("truth_segmentation.csv"),
        out.join("truth_tau.csv"),
        out.join("synth_manifest.txt"),
    ];
    write_proportions(&truth.proportions, &written[2])?;
    write_endmembers(&truth.endmembers, &written[3])?;
    write_segmentation_csv(&truth.segmentation, &written[4])?;
    write_tau(&truth.tau, &written[5])?;

    let mut m = Manifest::new("synth");
    m.set("seed", scene.seed);
    m.set("synth_rows", scene.rows);
    m.set("synth_cols", scene.cols);
    m.set("synth_bands", scene.bands);
    m.set("endmembers", scene.k);
    m.set("synth_sigma2", scene.sigma2);
    m.set("alpha", scene.alpha);
    m.set("lambda", scene.lambda);
    m.set("tile_rows", scene.tile_rows);
    m.set("tile_cols", scene.tile_cols);
    m.set(
        "masked_documents",
        scene.masks
            .as_ref()
            .map_or(0, |ms| ms.iter().filter(|d| d.contains(&false)).count()),
    );
    m.write(&written[6])?;
    Ok(written)
}

/// 8-bit maps of the proportions in `cfg.proportions`.
pub fn cmd_render(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = output_dir(cfg)?;
    let maps = read_proportions(require(&cfg.proportions, "proportions")?)?;
    render_maps(&maps, &out)
}

/// Gray level `round(255 p)`, halves rounding up.
pub fn quantize(p: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Consistency(format!("proportion {p} outside [0, 1]")));
    }
    Ok((255.0 * p + 0.5).floor() as u8)
}

/// Write `proportion_<k>.pgm` for every endmember.
pub fn render_maps(maps: &ProportionMaps, dir: &Path) -> Result<Vec<PathBuf>> {
    let images = (0..maps.k)
        .map(|k| {
            let pixels = (0..maps.n_pixels())
                .map(|i| quantize(maps.pixel(i)[k]).map(u16::from))
                .collect::<Result<Vec<_>>>()?;
            Ok(Pgm {
                width: maps.cols,
                height: maps.rows,
                maxval: 255,
                pixels,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    images
        .iter()
        .enumerate()
        .map(|(k, img)| {
            let p = dir.join(format!("proportion_{k}.pgm"));
            write_pgm(img, &p)?;
            Ok(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_half_up() {
        assert_eq!(quantize(1.0).unwrap(), 255);
        assert_eq!(quantize(0.5).unwrap(), 128);
        assert_eq!(quantize(0.0).unwrap(), 0);
        assert!(matches!(quantize(1.0 + 1e-12), Err(Error::Consistency(_))));
        assert!(matches!(quantize(f64::NAN), Err(Error::Consistency(_))));
    }

    #[test]
    fn hash_uses_blob_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, b"").unwrap();
        // sha256 of "blob 0\0".
        assert_eq!(
            content_hash(&p).unwrap(),
            "sha256:473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}
