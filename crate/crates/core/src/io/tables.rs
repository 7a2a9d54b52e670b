//! CSV and text formats for segmentations, label matrices, proportion maps,
//! endmembers, chain summaries and run manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! table reloads to the exact values that were saved.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::pgm::{write_pgm, Pgm};
use crate::error::{Error, Result};
use crate::inference::{Chain, EndmemberModel};
use crate::metrics::ProportionMaps;
use crate::superpixel::{MergeReport, Segmentation};
use crate::supervision::{parse_cell, LabelMatrix};

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Non-empty lines split on commas, with surrounding whitespace trimmed.
fn csv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect()))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::DataFormat(format!("line {line}: '{s}' is not a finite number")))
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::DataFormat(format!("line {line}: '{s}' is not a non-negative integer")))
}

// --- segmentation -------------------------------------------------------

/// Label grid: one line per image row, comma-separated superpixel ids.
pub fn write_segmentation_csv(seg: &Segmentation, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in seg.labels().chunks(seg.cols()) {
        out.push_str(&join(row));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_segmentation_csv(path: &Path) -> Result<Segmentation> {
    let text = read_text(path)?;
    let parse = || -> Result<Segmentation> {
        let mut labels = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (line, cells) in csv_rows(&text) {
            match cols {
                None => cols = Some(cells.len()),
                Some(c) if c != cells.len() => {
                    return Err(Error::DataFormat(format!(
                        "line {line}: {} labels, expected {c}",
                        cells.len()
                    )))
                }
                _ => {}
            }
            for c in cells {
                labels.push(parse_usize(c, line)?);
            }
            rows += 1;
        }
        Segmentation::from_labels(rows, cols.unwrap_or(0), labels).map_err(|e| Error::DataFormat(e.to_string()))
    };
    parse().map_err(|e| e.in_file(path))
}

/// 16-bit PGM of the label grid for viewing.
pub fn write_segmentation_pgm(seg: &Segmentation, path: &Path) -> Result<()> {
    if seg.n_superpixels() > 65536 {
        return Err(Error::DataFormat(format!(
            "{} superpixels do not fit a 16-bit PGM",
            seg.n_superpixels()
        )));
    }
    let pgm = Pgm {
        width: seg.cols(),
        height: seg.rows(),
        maxval: 65535,
        pixels: seg.labels().iter().map(|&l| l as u16).collect(),
    };
    write_pgm(&pgm, path)
}

// --- merge report -------------------------------------------------------

/// `class_tag,superpixel_id` rows. A class that touched nothing gets a row
/// with an empty id so it survives a round trip.
pub fn write_merge_report(report: &MergeReport, path: &Path) -> Result<()> {
    let mut out = String::from("class_tag,superpixel_id\n");
    for (tag, ids) in report {
        if ids.is_empty() {
            out.push_str(&format!("{tag},\n"));
        }
        for id in ids {
            out.push_str(&format!("{tag},{id}\n"));
        }
    }
    write_text(path, &out)
}

pub fn read_merge_report(path: &Path) -> Result<MergeReport> {
    let text = read_text(path)?;
    let parse = || -> Result<MergeReport> {
        let mut report = MergeReport::new();
        for (line, cells) in csv_rows(&text).skip(1) {
            let [tag, id] = cells[..] else {
                return Err(Error::DataFormat(format!(
                    "line {line}: expected class_tag,superpixel_id"
                )));
            };
            let entry = report.entry(tag.to_string()).or_default();
            if !id.is_empty() {
                entry.insert(parse_usize(id, line)?);
            }
        }
        Ok(report)
    };
    parse().map_err(|e| e.in_file(path))
}

// --- label matrix -------------------------------------------------------

/// Header `endmember,0,1,..,C-1`; then one row per endmember, starting with
/// its name.
pub fn write_tau(tau: &LabelMatrix, path: &Path) -> Result<()> {
    let mut out = format!("endmember,{}\n", join(0..tau.n_superpixels()));
    for k in 0..tau.n_endmembers() {
        let name = tau
            .endmember_names
            .as_ref()
            .map_or_else(|| format!("endmember_{k}"), |n| n[k].clone());
        out.push_str(&format!("{name},{}\n", join(tau.row(k))));
    }
    write_text(path, &out)
}

pub fn read_tau(path: &Path) -> Result<LabelMatrix> {
    let text = read_text(path)?;
    let parse = || -> Result<LabelMatrix> {
        let mut rows = csv_rows(&text);
        let (_, header) = rows
            .next()
            .ok_or_else(|| Error::LabelSchema("empty label file".into()))?;
        let c = header.len().saturating_sub(1);
        let mut names = Vec::new();
        let mut matrix = Vec::new();
        for (line, cells) in rows {
            if cells.len() != c + 1 {
                return Err(Error::LabelSchema(format!(
                    "line {line}: {} entries, expected {c}",
                    cells.len().saturating_sub(1)
                )));
            }
            let k = matrix.len();
            names.push(cells[0].to_string());
            matrix.push(
                cells[1..]
                    .iter()
                    .enumerate()
                    .map(|(j, v)| parse_cell(v, k, j))
                    .collect::<Result<Vec<u8>>>()?,
            );
        }
        LabelMatrix::from_rows(matrix)?.with_names(names)
    };
    parse().map_err(|e| e.in_file(path))
}

// --- proportions --------------------------------------------------------

pub fn write_proportions(maps: &ProportionMaps, path: &Path) -> Result<()> {
    let mut out = format!("row,col,{}\n", join((0..maps.k).map(|k| format!("p_{k}"))));
    for i in 0..maps.n_pixels() {
        out.push_str(&format!(
            "{},{},{}\n",
            i / maps.cols,
            i % maps.cols,
            join(maps.pixel(i))
        ));
    }
    write_text(path, &out)
}

pub fn read_proportions(path: &Path) -> Result<ProportionMaps> {
    let text = read_text(path)?;
    let parse = || -> Result<ProportionMaps> {
        let mut rows = csv_rows(&text);
        let (_, header) = rows
            .next()
            .ok_or_else(|| Error::DataFormat("empty proportion file".into()))?;
        if header.len() < 3 {
            return Err(Error::DataFormat("proportion header needs row,col,p_0..".into()));
        }
        let k = header.len() - 2;
        let mut entries = Vec::new();
        for (line, cells) in rows {
            if cells.len() != k + 2 {
                return Err(Error::DataFormat(format!(
                    "line {line}: {} columns, expected {}",
                    cells.len(),
                    k + 2
                )));
            }
            let r = parse_usize(cells[0], line)?;
            let c = parse_usize(cells[1], line)?;
            let p = cells[2..]
                .iter()
                .map(|v| parse_f64(v, line))
                .collect::<Result<Vec<_>>>()?;
            entries.push((r, c, p));
        }
        let rows_n = entries.iter().map(|e| e.0).max().map_or(0, |m| m + 1);
        let cols_n = entries.iter().map(|e| e.1).max().map_or(0, |m| m + 1);
        if entries.len() != rows_n * cols_n {
            return Err(Error::DataFormat(format!(
                "{} rows do not fill a {rows_n}x{cols_n} grid",
                entries.len()
            )));
        }
        let mut p = vec![f64::NAN; rows_n * cols_n * k];
        for (r, c, v) in entries {
            let i = r * cols_n + c;
            if !p[i * k].is_nan() {
                return Err(Error::DataFormat(format!("pixel ({r},{c}) listed twice")));
            }
            p[i * k..(i + 1) * k].copy_from_slice(&v);
        }
        ProportionMaps::new(rows_n, cols_n, k, p)
    };
    parse().map_err(|e| e.in_file(path))
}

// --- endmembers ---------------------------------------------------------

/// `K x B` means, one row per endmember.
pub fn write_endmembers(model: &EndmemberModel, path: &Path) -> Result<()> {
    let mut out = format!("endmember,{}\n", join((0..model.bands()).map(|b| format!("band_{b}"))));
    for k in 0..model.k() {
        out.push_str(&format!("{k},{}\n", join(model.mean(k))));
    }
    write_text(path, &out)
}

/// Read means written by [`write_endmembers`]; returns `(K, B, values)`.
pub fn read_endmember_means(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let text = read_text(path)?;
    let parse = || -> Result<(usize, usize, Vec<f64>)> {
        let mut rows = csv_rows(&text);
        let (_, header) = rows
            .next()
            .ok_or_else(|| Error::DataFormat("empty endmember file".into()))?;
        let b = header.len().saturating_sub(1);
        let mut values = Vec::new();
        let mut k = 0;
        for (line, cells) in rows {
            if cells.len() != b + 1 {
                return Err(Error::DataFormat(format!(
                    "line {line}: {} bands, expected {b}",
                    cells.len() - 1
                )));
            }
            for v in &cells[1..] {
                values.push(parse_f64(v, line)?);
            }
            k += 1;
        }
        if k == 0 || b == 0 {
            return Err(Error::DataFormat("no endmembers".into()));
        }
        Ok((k, b, values))
    };
    parse().map_err(|e| e.in_file(path))
}

// --- chain summary ------------------------------------------------------

pub fn write_chain_summary(chain: &Chain, path: &Path) -> Result<()> {
    let mut out = String::from("iteration,log_density,accept_pi,accept_s,accept_z,accept_mu,accept_sigma2\n");
    for (t, (lp, r)) in chain.log_density_trace.iter().zip(&chain.iteration_rates).enumerate() {
        out.push_str(&format!(
            "{},{lp},{},{},{},{},{}\n",
            t + 1,
            r.pi,
            r.s,
            r.z,
            r.mu,
            r.sigma2
        ));
    }
    write_text(path, &out)
}

// --- manifest -----------------------------------------------------------

/// Flat `key = value` text, keys sorted.
pub fn write_manifest(entries: &BTreeMap<String, String>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(&format!("{k} = {v}\n"));
    }
    write_text(path, &out)
}

/// Parse `key = value` (or `key=value`) lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_key_values(&read_text(path)?).map_err(|e| e.in_file(path))
}
