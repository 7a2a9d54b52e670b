// The command-line stages driven from code: synthesize a scene, segment it,
// unmix with and without labels, and evaluate both runs.

use std::collections::BTreeMap;
use std::path::Path;

use spmlda::pipeline::{cmd_eval, cmd_segment, cmd_synth, cmd_unmix, RunConfig};

fn config(out: &Path, settings: &[(&str, String)]) -> spmlda::Result<RunConfig> {
    let mut map: BTreeMap<String, String> = settings.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    map.insert("output".into(), out.display().to_string());
    RunConfig::from_map(&map)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("spmlda_pipeline_example");
    let p = |name: &str| root.join(name).display().to_string();
    let s = |v: &str| v.to_string();

    cmd_synth(&config(
        &root.join("scene"),
        &[
            ("synth_rows", s("24")),
            ("synth_cols", s("24")),
            ("synth_bands", s("6")),
            ("endmembers", s("3")),
            ("synth_mask_half", s("2")),
            ("seed", s("3")),
        ],
    )?)?;
    let cube = p("scene/cube.hdr");

    let seg = cmd_segment(&config(
        &root.join("seg"),
        &[("cube", cube.clone()), ("superpixels", s("9"))],
    )?)?;
    println!("SLIC wrote {}", seg[0].display());

    // Unmix on the tile documents, with the true label matrix and without.
    let common = [
        ("cube", cube.clone()),
        ("segmentation", p("scene/truth_segmentation.csv")),
        ("endmembers", s("3")),
        ("iterations", s("40")),
        ("normalize", s("false")),
    ];
    let mut labeled = common.to_vec();
    labeled.push(("tau", p("scene/truth_tau.csv")));
    cmd_unmix(&config(&root.join("spmlda"), &labeled)?)?;
    cmd_unmix(&config(&root.join("pmlda"), &common)?)?;

    let metrics = cmd_eval(&config(
        &root.join("eval"),
        &[
            ("cube", cube),
            ("runs", format!("spmlda={};pmlda={}", p("spmlda"), p("pmlda"))),
            ("truth", p("scene/truth_proportions.csv")),
        ],
    )?)?;
    let text = std::fs::read_to_string(&metrics[0])?;
    print!("{text}");
    Ok(())
}
