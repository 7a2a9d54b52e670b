use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::Hyperparams;
use crate::io::tables::parse_key_values;
use crate::superpixel::SlicParams;
use crate::synthgen::SynthSpec;

/// Every key accepted in a config file or as a command-line override.
pub const KEYS: &[&str] = &[
    "cube",
    "polygons",
    "geotransform",
    "tau",
    "segmentation",
    "merge_report",
    "proportions",
    "truth",
    "output",
    "seed",
    "threads",
    "normalize",
    "superpixels",
    "m",
    "max_iters",
    "move_tol",
    "perturb_window",
    "endmembers",
    "alpha",
    "lambda",
    "iterations",
    "burn_in_fraction",
    "epsilon",
    "class_map",
    "endmember_names",
    "runs",
    "timing",
    "synth_rows",
    "synth_cols",
    "synth_bands",
    "synth_sigma2",
    "synth_tile",
    "synth_mask_half",
];

/// Settings shared by all subcommands. Built from a flat `key = value` file
/// with command-line values layered on top.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cube: Option<PathBuf>,
    pub polygons: Option<PathBuf>,
    pub geotransform: Option<PathBuf>,
    pub tau: Option<PathBuf>,
    pub segmentation: Option<PathBuf>,
    pub merge_report: Option<PathBuf>,
    pub proportions: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub output: PathBuf,
    pub threads: usize,
    pub normalize: bool,
    pub slic: SlicParams,
    pub hyper: Hyperparams,
    /// The one parameter the sampler does not use; kept so configs carrying it
    /// still load.
    pub epsilon: Option<f64>,
    pub class_map: BTreeMap<String, usize>,
    pub endmember_names: Option<Vec<String>>,
    /// `(method name, run directory)` pairs for evaluation.
    pub runs: Vec<(String, PathBuf)>,
    pub timing: bool,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cube: None,
            polygons: None,
            geotransform: None,
            tau: None,
            segmentation: None,
            merge_report: None,
            proportions: None,
            truth: None,
            output: PathBuf::from("."),
            threads: 1,
            normalize: true,
            slic: SlicParams::default(),
            hyper: Hyperparams::default(),
            epsilon: None,
            class_map: BTreeMap::new(),
            endmember_names: None,
            runs: Vec::new(),
            timing: false,
            synth: SynthSpec::new(64, 64, 8, 3, 0),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("'{key}' has invalid value '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("'{key}' expects true/false, got '{v}'"))),
    }
}

impl RunConfig {
    /// Layer `overrides` on top of the optional config file and parse.
    pub fn load(config_file: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut map = match config_file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                parse_key_values(&text).map_err(|e| e.in_file(p))?
            }
            None => BTreeMap::new(),
        };
        map.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut mask_half = None;
        for (key, v) in map {
            let path = || Some(PathBuf::from(v));
            match key.as_str() {
                "cube" => cfg.cube = path(),
                "polygons" => cfg.polygons = path(),
                "geotransform" => cfg.geotransform = path(),
                "tau" => cfg.tau = path(),
                "segmentation" => cfg.segmentation = path(),
                "merge_report" => cfg.merge_report = path(),
                "proportions" => cfg.proportions = path(),
                "truth" => cfg.truth = path(),
                "output" => cfg.output = PathBuf::from(v),
                "seed" => {
                    cfg.hyper.seed = parse(key, v)?;
                    cfg.synth.seed = cfg.hyper.seed;
                }
                "threads" => cfg.threads = parse(key, v)?,
                "normalize" => cfg.normalize = parse_bool(key, v)?,
                "superpixels" => cfg.slic.k_target = parse(key, v)?,
                "m" => cfg.slic.m = parse(key, v)?,
                "max_iters" => cfg.slic.max_iters = parse(key, v)?,
                "move_tol" => cfg.slic.move_tol = parse(key, v)?,
                "perturb_window" => cfg.slic.perturb_window = parse(key, v)?,
                "endmembers" => {
                    cfg.hyper.k = parse(key, v)?;
                    cfg.synth.k = cfg.hyper.k;
                }
                "alpha" => {
                    cfg.hyper.alpha = parse(key, v)?;
                    cfg.synth.alpha = cfg.hyper.alpha;
                }
                "lambda" => {
                    cfg.hyper.lambda = parse(key, v)?;
                    cfg.synth.lambda = cfg.hyper.lambda;
                }
                "iterations" => cfg.hyper.iterations = parse(key, v)?,
                "burn_in_fraction" => cfg.hyper.burn_in_fraction = parse(key, v)?,
                "epsilon" => cfg.epsilon = Some(parse(key, v.trim_end_matches('%'))?),
                "class_map" => cfg.class_map = parse_class_map(v)?,
                "endmember_names" => cfg.endmember_names = Some(v.split(',').map(|s| s.trim().to_string()).collect()),
                "runs" => cfg.runs = parse_runs(v)?,
                "timing" => cfg.timing = parse_bool(key, v)?,
                "synth_rows" => cfg.synth.rows = parse(key, v)?,
                "synth_cols" => cfg.synth.cols = parse(key, v)?,
                "synth_bands" => cfg.synth.bands = parse(key, v)?,
                "synth_sigma2" => cfg.synth.sigma2 = parse(key, v)?,
                "synth_tile" => {
                    let t: usize = parse(key, v)?;
                    cfg.synth.tile_rows = t;
                    cfg.synth.tile_cols = t;
                }
                "synth_mask_half" => mask_half = Some(parse::<usize>(key, v)?),
                other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
            }
        }
        cfg.finish(mask_half)
    }

    fn finish(mut self, mask_half: Option<usize>) -> Result<Self> {
        if let Some(e) = mask_half {
            if e >= self.synth.k {
                return Err(Error::Config(format!(
                    "synth_mask_half = {e} but the scene has {} endmembers",
                    self.synth.k
                )));
            }
            self.synth = self.synth.clone().mask_right_half(e);
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.slic.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.hyper.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(self)
    }
}

/// `tag:index,tag:index`.
pub fn parse_class_map(v: &str) -> Result<BTreeMap<String, usize>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (tag, idx) = pair
                .rsplit_once(':')
                .ok_or_else(|| Error::Config(format!("class_map entry '{pair}' is not tag:index")))?;
            Ok((tag.trim().to_string(), parse("class_map", idx.trim())?))
        })
        .collect()
}

/// `name=dir;name=dir`.
pub fn parse_runs(v: &str) -> Result<Vec<(String, PathBuf)>> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (name, dir) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("run '{pair}' is not name=dir")))?;
            Ok((name.trim().to_string(), PathBuf::from(dir.trim())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "alpha = 0.5\nseed = 3\nendmembers = 4\n").unwrap();
        let overrides = BTreeMap::from([("seed".to_string(), "9".to_string())]);
        let cfg = RunConfig::load(Some(&p), &overrides).unwrap();
        assert_eq!(cfg.hyper.alpha, 0.5);
        assert_eq!(cfg.hyper.seed, 9);
        assert_eq!(cfg.hyper.k, 4);
    }

    #[test]
    fn defaults_match_published_settings() {
        let cfg = RunConfig::default();
        assert_eq!(
            (cfg.hyper.k, cfg.hyper.alpha, cfg.hyper.lambda, cfg.hyper.iterations),
            (6, 0.3, 1.0, 200)
        );
        assert_eq!((cfg.slic.k_target, cfg.slic.m), (500, 20.0));
    }

    #[test]
    fn unknown_key_and_bad_value() {
        let m = BTreeMap::from([("alpah".to_string(), "1".to_string())]);
        assert!(matches!(RunConfig::from_map(&m), Err(Error::Config(_))));
        let m = BTreeMap::from([("alpha".to_string(), "-1".to_string())]);
        assert!(matches!(RunConfig::from_map(&m), Err(Error::Config(_))));
    }

    #[test]
    fn class_map_and_runs() {
        let m = parse_class_map("blue_roof:0, red_roof:1").unwrap();
        assert_eq!(m["red_roof"], 1);
        let r = parse_runs("spmlda=out/a; pmlda=out/b").unwrap();
        assert_eq!(r[1], ("pmlda".to_string(), PathBuf::from("out/b")));
    }
}
