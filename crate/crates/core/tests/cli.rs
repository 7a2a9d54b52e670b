//! Behaviour of the `spmlda` binary: outputs, exit codes and messages.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spmlda::io::pgm::read_pgm;
use spmlda::io::tables::{read_merge_report, read_proportions, read_segmentation_csv};
use spmlda::metrics::proportion_entropy;

fn spmlda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spmlda")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = spmlda(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Small synthetic scene; returns its directory.
fn scene(root: &Path) -> PathBuf {
    let dir = root.join("scene");
    ok(&[
        "synth",
        "--output",
        &s(&dir),
        "--rows",
        "16",
        "--cols",
        "16",
        "--bands",
        "4",
        "--endmembers",
        "2",
        "--tile",
        "8",
        "--mask-half",
        "1",
        "--seed",
        "2",
    ]);
    dir
}

fn write_proportions_csv(path: &Path, rows: &[(usize, usize, &[f64])]) {
    let k = rows[0].2.len();
    let mut text = format!(
        "row,col,{}\n",
        (0..k).map(|i| format!("p_{i}")).collect::<Vec<_>>().join(",")
    );
    for (r, c, p) in rows {
        let vals: Vec<String> = p.iter().map(f64::to_string).collect();
        text.push_str(&format!("{r},{c},{}\n", vals.join(",")));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn bad_header_exits_2_and_names_file() {
    let tmp = tempfile::tempdir().unwrap();
    let hdr = tmp.path().join("broken.hdr");
    fs::write(&hdr, "ENVI\nsamples = 4\nlines = x\n").unwrap();
    fs::write(tmp.path().join("broken.bin"), [0u8; 16]).unwrap();
    let out = spmlda(&["segment", "--cube", &s(&hdr), "--output", &s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.hdr"));
}

#[test]
fn missing_input_and_unknown_key_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spmlda(&[
        "segment",
        "--cube",
        &s(&tmp.path().join("nope.hdr")),
        "--output",
        &s(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = spmlda(&["render", "--set", "colour=red"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn segment_without_polygons_skips_merge_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = scene(tmp.path());
    let out = tmp.path().join("seg");
    ok(&[
        "segment",
        "--cube",
        &s(&dir.join("cube.hdr")),
        "--output",
        &s(&out),
        "--superpixels",
        "6",
    ]);
    assert!(out.join("segmentation.csv").exists() && out.join("segmentation.pgm").exists());
    assert!(!out.join("merge_report.csv").exists());
    let pgm = read_pgm(&out.join("segmentation.pgm")).unwrap();
    let seg = read_segmentation_csv(&out.join("segmentation.csv")).unwrap();
    assert_eq!(pgm.maxval, 65535);
    assert!(pgm.pixels.iter().zip(seg.labels()).all(|(&p, &l)| p as usize == l));
}

#[test]
fn two_half_scene_merges_to_two_superpixels() {
    let tmp = tempfile::tempdir().unwrap();
    let cube = tmp.path().join("halves.csv");
    let mut text = String::from("row,col,band_0,band_1\n");
    for r in 0..12 {
        for c in 0..16 {
            let v = if c < 8 { "0.9,0.1" } else { "0.1,0.9" };
            text.push_str(&format!("{r},{c},{v}\n"));
        }
    }
    fs::write(&cube, text).unwrap();
    let poly = tmp.path().join("halves.geojson");
    fs::write(
        &poly,
        r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"class_tag":"west"},
           "geometry":{"type":"Polygon","coordinates":[[[0,0],[8,0],[8,12],[0,12],[0,0]]]}},
          {"type":"Feature","properties":{"class_tag":"east"},
           "geometry":{"type":"Polygon","coordinates":[[[8,0],[16,0],[16,12],[8,12],[8,0]]]}}]}"#,
    )
    .unwrap();
    let out = tmp.path().join("seg");
    ok(&[
        "segment",
        "--cube",
        &s(&cube),
        "--polygons",
        &s(&poly),
        "--output",
        &s(&out),
        "--superpixels",
        "6",
        "--m",
        "0.5",
    ]);
    let seg = read_segmentation_csv(&out.join("segmentation.csv")).unwrap();
    assert_eq!(seg.n_superpixels(), 2);
    assert!((0..12).all(|r| (0..16).all(|c| seg.label_at(r, c) == seg.label_at(0, if c < 8 { 0 } else { 15 }))));
    let report = read_merge_report(&out.join("merge_report.csv")).unwrap();
    assert_eq!(report.len(), 2);
}

#[test]
fn missing_tau_matches_all_ones_tau() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = scene(tmp.path());
    let seg = read_segmentation_csv(&dir.join("truth_segmentation.csv")).unwrap();
    let ones = tmp.path().join("ones.csv");
    let header: Vec<String> = (0..seg.n_superpixels()).map(|j| j.to_string()).collect();
    let row = vec!["1"; seg.n_superpixels()].join(",");
    fs::write(&ones, format!("endmember,{}\n0,{row}\n1,{row}\n", header.join(","))).unwrap();

    let common = [
        "unmix",
        "--cube",
        &s(&dir.join("cube.hdr")),
        "--segmentation",
        &s(&dir.join("truth_segmentation.csv")),
        "--endmembers",
        "2",
        "--iterations",
        "20",
        "--seed",
        "9",
    ];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&[&common[..], &["--output", &s(&a)]].concat());
    ok(&[&common[..], &["--output", &s(&b), "--tau", &s(&ones)]].concat());
    for f in [
        "proportions.csv",
        "endmembers.csv",
        "chain.csv",
        "proportion_0.pgm",
        "proportion_1.pgm",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn tau_segmentation_mismatch_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = scene(tmp.path());
    let tau = tmp.path().join("tau.csv");
    fs::write(&tau, "endmember,0,1\n0,1,1\n1,1,0\n").unwrap();
    let out = spmlda(&[
        "unmix",
        "--cube",
        &s(&dir.join("cube.hdr")),
        "--segmentation",
        &s(&dir.join("truth_segmentation.csv")),
        "--tau",
        &s(&tau),
        "--endmembers",
        "2",
        "--iterations",
        "2",
        "--output",
        &s(&tmp.path().join("u")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_rows_and_entropy_match_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = scene(tmp.path());
    let mut runs = Vec::new();
    for (name, extra) in [("labeled", Some(dir.join("truth_tau.csv"))), ("free", None)] {
        let out = tmp.path().join(name);
        let mut args = vec![
            "unmix".to_string(),
            "--cube".into(),
            s(&dir.join("cube.hdr")),
            "--segmentation".into(),
            s(&dir.join("truth_segmentation.csv")),
            "--endmembers".into(),
            "2".into(),
            "--iterations".into(),
            "10".into(),
            "--output".into(),
            s(&out),
        ];
        if let Some(t) = extra {
            args.extend(["--tau".into(), s(&t)]);
        }
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
        runs.push((name, out));
    }
    let eval_dir = tmp.path().join("eval");
    let mut args = vec![
        "eval".to_string(),
        "--cube".into(),
        s(&dir.join("cube.hdr")),
        "--output".into(),
        s(&eval_dir),
    ];
    for (name, out) in &runs {
        args.extend(["--run".into(), format!("{name}={}", s(out))]);
    }
    args.extend(["--truth".into(), s(&dir.join("truth_proportions.csv"))]);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());

    let text = fs::read_to_string(eval_dir.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "method,entropy_total,log_likelihood,runtime_seconds,entropy_per_pixel,proportion_mae"
    );
    assert_eq!(lines.len(), 3);
    for ((name, out), line) in runs.iter().zip(&lines[1..]) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], *name);
        assert_eq!(cells[3], "NA");
        let h = proportion_entropy(&read_proportions(&out.join("proportions.csv")).unwrap())
            .unwrap()
            .total;
        assert_eq!(cells[1].parse::<f64>().unwrap().to_bits(), h.to_bits());
    }
}

#[test]
fn one_hot_maps_have_zero_entropy() {
    let tmp = tempfile::tempdir().unwrap();
    let cube = tmp.path().join("c.csv");
    fs::write(&cube, "row,col,band_0\n0,0,1.0\n0,1,2.0\n").unwrap();
    let run = tmp.path().join("run");
    fs::create_dir_all(&run).unwrap();
    write_proportions_csv(
        &run.join("proportions.csv"),
        &[(0, 0, &[1.0, 0.0]), (0, 1, &[0.0, 1.0])],
    );
    fs::write(run.join("endmembers.csv"), "endmember,band_0\n0,1.0\n1,2.0\n").unwrap();
    fs::write(run.join("manifest.txt"), "normalize = false\nsigma2 = 0.01\n").unwrap();
    let out = tmp.path().join("eval");
    ok(&[
        "eval",
        "--cube",
        &s(&cube),
        "--run",
        &format!("onehot={}", s(&run)),
        "--output",
        &s(&out),
    ]);
    let text = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);

    // A K mismatch between maps and endmembers is a consistency error.
    fs::write(run.join("endmembers.csv"), "endmember,band_0\n0,1.0\n1,2.0\n2,3.0\n").unwrap();
    let bad = spmlda(&[
        "eval",
        "--cube",
        &s(&cube),
        "--run",
        &format!("x={}", s(&run)),
        "--output",
        &s(&out),
    ]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn render_levels_and_range_check() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("p.csv");
    let values = [0.0, 0.5, 1.0, 0.3137, 0.999, 0.002];
    let rows: Vec<(usize, usize, Vec<f64>)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| (0, i, vec![v, 1.0 - v]))
        .collect();
    let borrowed: Vec<(usize, usize, &[f64])> = rows.iter().map(|(r, c, v)| (*r, *c, v.as_slice())).collect();
    write_proportions_csv(&p, &borrowed);
    let out = tmp.path().join("r");
    ok(&["render", "--proportions", &s(&p), "--output", &s(&out)]);
    let img = read_pgm(&out.join("proportion_0.pgm")).unwrap();
    assert_eq!(img.maxval, 255);
    assert_eq!(&img.pixels[..3], &[0, 128, 255]);
    for (&g, &v) in img.pixels.iter().zip(&values) {
        assert!((g as f64 / 255.0 - v).abs() <= 1.0 / 255.0);
    }

    write_proportions_csv(&p, &[(0, 0, &[1.2, -0.2])]);
    let bad = spmlda(&["render", "--proportions", &s(&p), "--output", &s(&out)]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# scene\nsynth_rows = 8\nsynth_cols = 8\nsynth_bands = 3\nendmembers = 2\nseed = 1\noutput = {}\n",
            s(&tmp.path().join("from_file"))
        ),
    )
    .unwrap();
    let flag_out = tmp.path().join("from_flag");
    ok(&["synth", "--config", &s(&cfg), "--output", &s(&flag_out), "--cols", "4"]);
    assert!(!tmp.path().join("from_file").exists());
    let p = read_proportions(&flag_out.join("truth_proportions.csv")).unwrap();
    assert_eq!((p.rows, p.cols, p.k), (8, 4, 2));
}

#[test]
fn label_builds_tau_from_merge_report() {
    let tmp = tempfile::tempdir().unwrap();
    let seg = tmp.path().join("seg.csv");
    fs::write(&seg, "0,0,1\n2,3,3\n").unwrap();
    let report = tmp.path().join("merge.csv");
    fs::write(&report, "class_tag,superpixel_id\nroof,1\nroof,3\nlawn,\n").unwrap();
    let out = tmp.path().join("l");
    ok(&[
        "label",
        "--segmentation",
        &s(&seg),
        "--merge-report",
        &s(&report),
        "--endmembers",
        "3",
        "--class-map",
        "roof:0,lawn:1",
        "--endmember-names",
        "roof,lawn,other",
        "--output",
        &s(&out),
    ]);
    let text = fs::read_to_string(out.join("tau.csv")).unwrap();
    assert_eq!(text, "endmember,0,1,2,3\nroof,0,1,0,1\nlawn,0,0,0,0\nother,1,1,1,1\n");
}
