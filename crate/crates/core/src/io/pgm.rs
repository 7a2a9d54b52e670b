//! Binary PGM (P5) images for visualization.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl Pgm {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval < 256 {
            out.extend(self.pixels.iter().map(|&v| v as u8));
        } else {
            out.extend(self.pixels.iter().flat_map(|v| v.to_be_bytes()));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::DataFormat(format!("PGM: {m}"));
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if bytes.get(pos) == Some(&b'#') {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        }
        if fields[0] != "P5" {
            return Err(bad("not a binary PGM"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
        let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(bad("maxval out of range"));
        }
        let body = &bytes[pos + 1..];
        let n = width * height;
        let pixels: Vec<u16> = if maxval < 256 {
            if body.len() != n {
                return Err(bad("payload size mismatch"));
            }
            body.iter().map(|&b| b as u16).collect()
        } else {
            if body.len() != 2 * n {
                return Err(bad("payload size mismatch"));
            }
            body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        };
        Ok(Pgm {
            width,
            height,
            maxval: maxval as u16,
            pixels,
        })
    }
}

pub fn write_pgm(pgm: &Pgm, path: &Path) -> Result<()> {
    fs::write(path, pgm.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Pgm::from_bytes(&bytes).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_and_sixteen_bit_round_trip() {
        for maxval in [255u16, 65535] {
            let pgm = Pgm {
                width: 3,
                height: 2,
                maxval,
                pixels: vec![0, 1, 2, 200, 254, 255],
            };
            assert_eq!(Pgm::from_bytes(&pgm.to_bytes()).unwrap(), pgm);
        }
    }
}
