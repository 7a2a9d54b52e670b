use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spmlda::pipeline::{cmd_eval, cmd_label, cmd_render, cmd_segment, cmd_synth, cmd_unmix, RunConfig};

/// Semi-supervised hyperspectral unmixing with superpixel topic models.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Extra `key=value` settings, same keys as the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Inputs {
    #[arg(long)]
    cube: Option<PathBuf>,
    #[arg(long)]
    segmentation: Option<PathBuf>,
    /// Skip unit-norm scaling of pixel spectra.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Superpixels, optionally merged against map polygons.
    Segment {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        polygons: Option<PathBuf>,
        /// World file giving the cube's pixel-to-map transform.
        #[arg(long)]
        geotransform: Option<PathBuf>,
        /// Target superpixel count.
        #[arg(long)]
        superpixels: Option<usize>,
        /// Spatial compactness weight.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Label matrix from a merge report.
    Label {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        merge_report: Option<PathBuf>,
        #[arg(long)]
        endmembers: Option<usize>,
        /// `tag:index,...`
        #[arg(long)]
        class_map: Option<String>,
        /// Comma-separated endmember names.
        #[arg(long)]
        endmember_names: Option<String>,
    },
    /// Sample endmembers and proportion maps.
    Unmix {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        tau: Option<PathBuf>,
        #[arg(long)]
        endmembers: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in_fraction: Option<f64>,
        /// Record wall-clock time in timing.txt.
        #[arg(long)]
        timing: bool,
    },
    /// Entropy, log-likelihood and error of finished runs.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        /// `name=dir`, repeatable.
        #[arg(long = "run")]
        runs: Vec<String>,
        /// Ground-truth proportions.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Report runtimes recorded by `unmix --timing`.
        #[arg(long)]
        timing: bool,
    },
    /// Synthetic scene with known ground truth.
    Synth {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        bands: Option<usize>,
        #[arg(long)]
        endmembers: Option<usize>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Side of the square tile documents.
        #[arg(long)]
        tile: Option<usize>,
        /// Forbid this endmember in the right half of the tiles.
        #[arg(long)]
        mask_half: Option<usize>,
    },
    /// One 8-bit PGM per endmember.
    Render {
        #[arg(long)]
        proportions: Option<PathBuf>,
    },
}

struct Overrides(BTreeMap<String, String>);

impl Overrides {
    fn put(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.0.insert(key.into(), v.to_string());
        }
    }

    fn path(&mut self, key: &str, value: Option<PathBuf>) {
        self.put(key, value.map(|p| p.display().to_string()));
    }

    fn inputs(&mut self, i: Inputs) {
        self.path("cube", i.cube);
        self.path("segmentation", i.segmentation);
        if i.no_normalize {
            self.put("normalize", Some("false"));
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut o = Overrides(BTreeMap::new());
    for kv in &cli.set {
        match kv.split_once('=') {
            Some((k, v)) => o.put(k.trim(), Some(v.trim())),
            None => {
                eprintln!("error: --set expects KEY=VALUE, got '{kv}'");
                return ExitCode::from(2);
            }
        }
    }
    o.put("seed", cli.seed);
    o.put("threads", cli.threads);
    o.path("output", cli.output);

    let run: fn(&RunConfig) -> spmlda::Result<Vec<PathBuf>> = match cli.command {
        Command::Segment {
            inputs,
            polygons,
            geotransform,
            superpixels,
            m,
            max_iters,
        } => {
            o.inputs(inputs);
            o.path("polygons", polygons);
            o.path("geotransform", geotransform);
            o.put("superpixels", superpixels);
            o.put("m", m);
            o.put("max_iters", max_iters);
            cmd_segment
        }
        Command::Label {
            inputs,
            merge_report,
            endmembers,
            class_map,
            endmember_names,
        } => {
            o.inputs(inputs);
            o.path("merge_report", merge_report);
            o.put("endmembers", endmembers);
            o.put("class_map", class_map);
            o.put("endmember_names", endmember_names);
            cmd_label
        }
        Command::Unmix {
            inputs,
            tau,
            endmembers,
            alpha,
            lambda,
            iterations,
            burn_in_fraction,
            timing,
        } => {
            o.inputs(inputs);
            o.path("tau", tau);
            o.put("endmembers", endmembers);
            o.put("alpha", alpha);
            o.put("lambda", lambda);
            o.put("iterations", iterations);
            o.put("burn_in_fraction", burn_in_fraction);
            o.put("timing", timing.then_some(true));
            cmd_unmix
        }
        Command::Eval {
            inputs,
            runs,
            truth,
            timing,
        } => {
            o.inputs(inputs);
            o.put("runs", (!runs.is_empty()).then(|| runs.join(";")));
            o.path("truth", truth);
            o.put("timing", timing.then_some(true));
            cmd_eval
        }
        Command::Synth {
            rows,
            cols,
            bands,
            endmembers,
            sigma2,
            alpha,
            lambda,
            tile,
            mask_half,
        } => {
            o.put("synth_rows", rows);
            o.put("synth_cols", cols);
            o.put("synth_bands", bands);
            o.put("endmembers", endmembers);
            o.put("synth_sigma2", sigma2);
            o.put("alpha", alpha);
            o.put("lambda", lambda);
            o.put("synth_tile", tile);
            o.put("synth_mask_half", mask_half);
            cmd_synth
        }
        Command::Render { proportions } => {
            o.path("proportions", proportions);
            cmd_render
        }
    };

    let result = RunConfig::load(cli.config.as_deref(), &o.0).and_then(|cfg| run(&cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
