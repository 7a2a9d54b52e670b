use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::geo::Geotransform;
use crate::error::{Error, Result};

/// A hyperspectral reflectance raster, stored pixel-interleaved: the spectrum
/// of pixel `(row, col)` is `data[(row * cols + col) * bands..][..bands]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    rows: usize,
    cols: usize,
    bands: usize,
    data: Vec<f64>,
    pub geotransform: Option<Geotransform>,
}

impl HsiCube {
    pub fn new(rows: usize, cols: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || bands == 0 {
            return Err(Error::DataFormat(format!(
                "cube dimensions must be positive, got {rows}x{cols}x{bands}"
            )));
        }
        if data.len() != rows * cols * bands {
            return Err(Error::DataFormat(format!(
                "cube of {rows}x{cols}x{bands} needs {} values, got {}",
                rows * cols * bands,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::DataFormat(format!(
                "non-finite value at pixel {} band {}",
                i / bands,
                i % bands
            )));
        }
        Ok(Self {
            rows,
            cols,
            bands,
            data,
            geotransform: None,
        })
    }

    pub fn with_geotransform(mut self, gt: Geotransform) -> Self {
        self.geotransform = Some(gt);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.bands..(index + 1) * self.bands]
    }

    pub fn pixel_at(&self, row: usize, col: usize) -> &[f64] {
        self.pixel(row * self.cols + col)
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.bands)
    }
}

/// Result of unit-norm preprocessing.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub cube: HsiCube,
    /// All-zero pixels left as zero vectors.
    pub zero_pixels: usize,
}

/// Scale every nonzero pixel spectrum to unit Euclidean length.
pub fn preprocess_unit_norm(cube: &HsiCube) -> Normalized {
    let mut out = cube.clone();
    let mut zero_pixels = 0;
    for px in out.data.chunks_exact_mut(cube.bands) {
        let norm = px.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            zero_pixels += 1;
        } else if norm != 1.0 {
            px.iter_mut().for_each(|v| *v /= norm);
        }
    }
    if zero_pixels > 0 {
        warn!("{zero_pixels} all-zero pixel(s) left unnormalized");
    }
    Normalized { cube: out, zero_pixels }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFormat {
    /// Text `.hdr` header plus raw little-endian float32 payload.
    Envi,
    /// One `row,col,band_0,..` line per pixel.
    Csv,
}

impl CubeFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CubeFormat::Csv,
            _ => CubeFormat::Envi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interleave {
    #[default]
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            other => Err(Error::DataFormat(format!("unknown interleave '{other}'"))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        }
    }

    /// Position in the payload of value (row, col, band).
    fn offset(self, rows: usize, cols: usize, bands: usize, r: usize, c: usize, b: usize) -> usize {
        match self {
            Interleave::Bsq => (b * rows + r) * cols + c,
            Interleave::Bil => (r * bands + b) * cols + c,
            Interleave::Bip => (r * cols + c) * bands + b,
        }
    }
}

pub fn load_cube(path: &Path, format: CubeFormat) -> Result<HsiCube> {
    let res = match format {
        CubeFormat::Envi => load_envi(path),
        CubeFormat::Csv => load_csv(path),
    };
    res.map_err(|e| e.in_file(path))
}

/// Write a cube. For [`CubeFormat::Envi`] `path` names the header; the
/// payload goes next to it with a `.bin` extension.
pub fn write_cube(cube: &HsiCube, path: &Path, format: CubeFormat, interleave: Interleave) -> Result<()> {
    match format {
        CubeFormat::Envi => write_envi(cube, path, interleave),
        CubeFormat::Csv => write_csv(cube, path),
    }
}

/// Header and payload paths for an ENVI-style cube given either of them.
pub fn envi_paths(path: &Path) -> (PathBuf, PathBuf) {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("hdr")) {
        (path.to_path_buf(), path.with_extension("bin"))
    } else {
        (path.with_extension("hdr"), path.to_path_buf())
    }
}

struct EnviHeader {
    samples: usize,
    lines: usize,
    bands: usize,
    interleave: Interleave,
    header_offset: usize,
    data_file: Option<String>,
}

fn parse_envi_header(text: &str) -> Result<EnviHeader> {
    let mut lines = text.lines();
    match lines.next() {
        Some(first) if first.trim() == "ENVI" => {}
        _ => return Err(Error::DataFormat("header does not start with 'ENVI'".into())),
    }
    let mut fields = Vec::new();
    let mut pending: Option<(String, String)> = None;
    for line in lines {
        if let Some((key, mut value)) = pending.take() {
            value.push('\n');
            value.push_str(line);
            if line.contains('}') {
                fields.push((key, value));
            } else {
                pending = Some((key, value));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::DataFormat(format!("malformed header line '{line}'")));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if value.starts_with('{') && !value.contains('}') {
            pending = Some((key, value));
        } else {
            fields.push((key, value));
        }
    }
    if pending.is_some() {
        return Err(Error::DataFormat("unterminated '{' in header".into()));
    }

    let get = |k: &str| fields.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let count = |k: &str| -> Result<usize> {
        let v = get(k).ok_or_else(|| Error::DataFormat(format!("header missing '{k}'")))?;
        v.parse()
            .map_err(|_| Error::DataFormat(format!("header field '{k}' is not a count: '{v}'")))
    };
    let samples = count("samples")?;
    let lines = count("lines")?;
    let bands = count("bands")?;
    let header_offset = if get("header offset").is_some() {
        count("header offset")?
    } else {
        0
    };
    match get("data type").map(str::trim) {
        Some("4") => {}
        Some(other) => {
            return Err(Error::DataFormat(format!(
                "unsupported data type {other}; only 4 (float32) is accepted"
            )))
        }
        None => return Err(Error::DataFormat("header missing 'data type'".into())),
    }
    match get("byte order").map(str::trim) {
        None | Some("0") => {}
        Some(other) => {
            return Err(Error::DataFormat(format!(
                "unsupported byte order {other}; payload must be little-endian"
            )))
        }
    }
    let interleave = get("interleave")
        .map(Interleave::parse)
        .transpose()?
        .unwrap_or_default();
    let data_file = get("data file").map(|s| s.trim_matches(|c| c == '{' || c == '}').trim().to_string());
    Ok(EnviHeader {
        samples,
        lines,
        bands,
        interleave,
        header_offset,
        data_file,
    })
}

fn load_envi(path: &Path) -> Result<HsiCube> {
    let (hdr_path, mut bin_path) = envi_paths(path);
    let text = fs::read_to_string(&hdr_path).map_err(|e| Error::io(&hdr_path, e))?;
    let hdr = parse_envi_header(&text)?;
    if let Some(name) = &hdr.data_file {
        bin_path = hdr_path.with_file_name(name);
    }
    let payload = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let n = hdr.samples * hdr.lines * hdr.bands;
    let body = payload.get(hdr.header_offset..).unwrap_or_default();
    if body.len() != n * 4 {
        return Err(Error::DataFormat(format!(
            "header declares {}x{}x{} float32 values ({} bytes) but payload has {} bytes",
            hdr.lines,
            hdr.samples,
            hdr.bands,
            n * 4,
            body.len()
        )));
    }
    let raw: Vec<f32> = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let (rows, cols, bands) = (hdr.lines, hdr.samples, hdr.bands);
    let mut data = vec![0.0; n];
    for r in 0..rows {
        for c in 0..cols {
            for b in 0..bands {
                data[(r * cols + c) * bands + b] = raw[hdr.interleave.offset(rows, cols, bands, r, c, b)] as f64;
            }
        }
    }
    HsiCube::new(rows, cols, bands, data)
}

fn write_envi(cube: &HsiCube, path: &Path, interleave: Interleave) -> Result<()> {
    let (hdr_path, bin_path) = envi_paths(path);
    let header = format!(
        "ENVI\nsamples = {}\nlines = {}\nbands = {}\nheader offset = 0\nfile type = ENVI Standard\ndata type = 4\ninterleave = {}\nbyte order = 0\n",
        cube.cols,
        cube.rows,
        cube.bands,
        interleave.as_str()
    );
    let (rows, cols, bands) = (cube.rows, cube.cols, cube.bands);
    let mut raw = vec![0f32; cube.data.len()];
    for r in 0..rows {
        for c in 0..cols {
            for b in 0..bands {
                raw[interleave.offset(rows, cols, bands, r, c, b)] = cube.data[(r * cols + c) * bands + b] as f32;
            }
        }
    }
    let bytes: Vec<u8> = raw.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&hdr_path, header).map_err(|e| Error::io(&hdr_path, e))?;
    fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))?;
    Ok(())
}

fn load_csv(path: &Path) -> Result<HsiCube> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::DataFormat(e.to_string()))?;
    let mut entries: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut bands = None;
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::DataFormat(e.to_string()))?;
        if rec.len() < 3 {
            return Err(Error::DataFormat(
                "cube CSV rows need row,col and at least one band".into(),
            ));
        }
        let idx = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| Error::DataFormat(format!("bad pixel index '{}'", &rec[i])))
        };
        let (r, c) = (idx(0)?, idx(1)?);
        let values = rec
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::DataFormat(format!("bad value '{v}' at pixel ({r},{c})")))
            })
            .collect::<Result<Vec<_>>>()?;
        match bands {
            None => bands = Some(values.len()),
            Some(b) if b != values.len() => {
                return Err(Error::DataFormat(format!(
                    "pixel ({r},{c}) has {} bands, expected {b}",
                    values.len()
                )))
            }
            _ => {}
        }
        entries.push((r, c, values));
    }
    let bands = bands.ok_or_else(|| Error::DataFormat("empty cube CSV".into()))?;
    let rows = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
    let cols = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
    if entries.len() != rows * cols {
        return Err(Error::DataFormat(format!(
            "{} pixel rows do not fill a {rows}x{cols} grid",
            entries.len()
        )));
    }
    let mut data = vec![0.0; rows * cols * bands];
    let mut seen = vec![false; rows * cols];
    for (r, c, values) in entries {
        let i = r * cols + c;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DataFormat(format!("pixel ({r},{c}) listed twice")));
        }
        data[i * bands..(i + 1) * bands].copy_from_slice(&values);
    }
    HsiCube::new(rows, cols, bands, data)
}

fn write_csv(cube: &HsiCube, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::DataFormat(e.to_string()))?;
    let mut header = vec!["row".to_string(), "col".to_string()];
    header.extend((0..cube.bands).map(|b| format!("band_{b}")));
    let wr = |e: csv::Error| Error::DataFormat(e.to_string());
    w.write_record(&header).map_err(wr)?;
    for r in 0..cube.rows {
        for c in 0..cube.cols {
            let mut rec = vec![r.to_string(), c.to_string()];
            rec.extend(cube.pixel_at(r, c).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(wr)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> HsiCube {
        let data = (0..12).map(|v| v as f64 * 0.25).collect();
        HsiCube::new(2, 2, 3, data).unwrap()
    }

    #[test]
    fn csv_round_trip_echoes_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        std::fs::write(
            &p,
            "row,col,b0,b1,b2\n0,0,0,0.25,0.5\n0,1,0.75,1,1.25\n1,0,1.5,1.75,2\n1,1,2.25,2.5,2.75\n",
        )
        .unwrap();
        let cube = load_cube(&p, CubeFormat::Csv).unwrap();
        assert_eq!(cube, tiny());
    }

    #[test]
    fn envi_payload_short_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("c.hdr");
        std::fs::write(
            &hdr,
            "ENVI\nsamples = 2\nlines = 2\nbands = 1\ndata type = 4\ninterleave = bsq\nbyte order = 0\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("c.bin"), [0u8; 12]).unwrap();
        let err = load_cube(&hdr, CubeFormat::Envi).unwrap_err();
        assert!(matches!(err, Error::DataFormat(_)), "{err}");
        assert!(err.to_string().contains("c.hdr"));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            HsiCube::new(1, 1, 2, vec![1.0, f64::NAN]),
            Err(Error::DataFormat(_))
        ));
    }

    #[test]
    fn interleaves_agree() {
        let dir = tempfile::tempdir().unwrap();
        let cube = tiny();
        for il in [Interleave::Bsq, Interleave::Bil, Interleave::Bip] {
            let p = dir.path().join(format!("c_{}.hdr", il.as_str()));
            write_cube(&cube, &p, CubeFormat::Envi, il).unwrap();
            assert_eq!(load_cube(&p, CubeFormat::Envi).unwrap(), cube);
        }
    }

    #[test]
    fn header_with_braced_multiline_field() {
        let h = "ENVI\ndescription = {\n  a cube\n}\nsamples = 3\nlines = 2\nbands = 4\ndata type = 4\n";
        let hdr = parse_envi_header(h).unwrap();
        assert_eq!((hdr.samples, hdr.lines, hdr.bands), (3, 2, 4));
        assert_eq!(hdr.interleave, Interleave::Bsq);
    }

    #[test]
    fn unit_norm_hand_case() {
        let cube = HsiCube::new(1, 1, 2, vec![3.0, 4.0]).unwrap();
        let out = preprocess_unit_norm(&cube);
        assert!((out.cube.pixel(0)[0] - 0.6).abs() < 1e-15);
        assert!((out.cube.pixel(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(out.zero_pixels, 0);
    }

    #[test]
    fn unit_pixel_unchanged_and_zero_pixel_reported() {
        let cube = HsiCube::new(1, 2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = preprocess_unit_norm(&cube);
        assert_eq!(out.cube.data(), cube.data());
        assert_eq!(out.zero_pixels, 1);
    }
}
