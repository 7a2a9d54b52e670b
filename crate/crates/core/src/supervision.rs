//! Binary endmember supervision.
//!
//! `tau[k][j] == 1` means superpixel `j` *may* contain endmember `k`; a zero
//! forbids it. Endmembers nobody supervises are allowed everywhere.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    k: usize,
    c: usize,
    /// Row-major `K x C`.
    tau: Vec<u8>,
    supervised: BTreeSet<usize>,
    pub endmember_names: Option<Vec<String>>,
}

impl LabelMatrix {
    /// Every endmember allowed in every superpixel (no supervision).
    pub fn all_ones(k: usize, c: usize) -> Self {
        Self {
            k,
            c,
            tau: vec![1; k * c],
            supervised: BTreeSet::new(),
            endmember_names: None,
        }
    }

    /// Wrap a raw `K x C` matrix. Rows with any zero count as supervised.
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let k = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if k == 0 || c == 0 {
            return Err(Error::LabelSchema("label matrix must be non-empty".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != c) {
            return Err(Error::LabelSchema(format!(
                "row {i} has {} columns, expected {c}",
                rows[i].len()
            )));
        }
        let supervised = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.contains(&0))
            .map(|(i, _)| i)
            .collect();
        let m = Self {
            k,
            c,
            tau: rows.into_iter().flatten().collect(),
            supervised,
            endmember_names: None,
        };
        validate_tau(&m)?;
        Ok(m)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.k {
            return Err(Error::LabelSchema(format!(
                "{} endmember names for {} endmembers",
                names.len(),
                self.k
            )));
        }
        self.endmember_names = Some(names);
        Ok(self)
    }

    pub fn n_endmembers(&self) -> usize {
        self.k
    }

    pub fn n_superpixels(&self) -> usize {
        self.c
    }

    pub fn get(&self, endmember: usize, superpixel: usize) -> u8 {
        self.tau[endmember * self.c + superpixel]
    }

    /// Column `j` as a boolean mask over endmembers.
    pub fn column(&self, superpixel: usize) -> Vec<bool> {
        (0..self.k).map(|k| self.get(k, superpixel) == 1).collect()
    }

    pub fn row(&self, endmember: usize) -> &[u8] {
        &self.tau[endmember * self.c..(endmember + 1) * self.c]
    }

    pub fn supervised_endmembers(&self) -> &BTreeSet<usize> {
        &self.supervised
    }

    pub fn is_all_ones(&self) -> bool {
        self.tau.iter().all(|&v| v == 1)
    }
}

/// Build `tau` from polygon-derived regions.
///
/// Each class names one endmember; that endmember becomes supervised and is
/// allowed exactly in the union of the regions of the classes mapped to it.
/// Classes absent from `class_to_endmember` are ignored.
pub fn build_tau(
    c: usize,
    k: usize,
    class_regions: &BTreeMap<String, BTreeSet<usize>>,
    class_to_endmember: &BTreeMap<String, usize>,
) -> Result<LabelMatrix> {
    let mut allowed: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (class, &endmember) in class_to_endmember {
        if endmember >= k {
            return Err(Error::LabelSchema(format!(
                "class '{class}' maps to endmember {endmember}, but K = {k}"
            )));
        }
        let region = allowed.entry(endmember).or_default();
        if let Some(ids) = class_regions.get(class) {
            if let Some(&bad) = ids.iter().find(|&&j| j >= c) {
                return Err(Error::LabelSchema(format!(
                    "class '{class}' references superpixel {bad}, but C = {c}"
                )));
            }
            region.extend(ids);
        }
    }
    let mut tau = vec![1u8; k * c];
    for (&endmember, region) in &allowed {
        let row = &mut tau[endmember * c..(endmember + 1) * c];
        for (j, v) in row.iter_mut().enumerate() {
            *v = region.contains(&j) as u8;
        }
    }
    let m = LabelMatrix {
        k,
        c,
        tau,
        supervised: allowed.keys().copied().collect(),
        endmember_names: None,
    };
    validate_tau(&m)?;
    Ok(m)
}

/// Check the structural invariants: binary entries, and at least one allowed
/// endmember per superpixel.
pub fn validate_tau(m: &LabelMatrix) -> Result<()> {
    if m.tau.len() != m.k * m.c {
        return Err(Error::LabelSchema(format!(
            "matrix holds {} entries, expected {}x{}",
            m.tau.len(),
            m.k,
            m.c
        )));
    }
    if let Some(i) = m.tau.iter().position(|&v| v > 1) {
        return Err(Error::LabelSchema(format!(
            "entry ({}, {}) is {}, not 0 or 1",
            i / m.c,
            i % m.c,
            m.tau[i]
        )));
    }
    if let Some(j) = (0..m.c).find(|&j| (0..m.k).all(|k| m.get(k, j) == 0)) {
        return Err(Error::LabelSchema(format!(
            "superpixel {j} admits no endmember (all-zero column)"
        )));
    }
    for k in 0..m.k {
        if !m.supervised.contains(&k) && m.row(k).contains(&0) {
            return Err(Error::LabelSchema(format!(
                "endmember {k} is unsupervised but has zero entries"
            )));
        }
    }
    Ok(())
}

/// Parse one textual τ cell. Anything but `0` or `1` is a schema violation.
pub(crate) fn parse_cell(s: &str, k: usize, j: usize) -> Result<u8> {
    match s.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::LabelSchema(format!("entry ({k}, {j}) is '{other}', not 0 or 1"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pavia_like() -> LabelMatrix {
        let regions = BTreeMap::from([
            ("blue_roof".to_string(), BTreeSet::from([0])),
            ("red_roof".to_string(), BTreeSet::from([1])),
        ]);
        let map = BTreeMap::from([("blue_roof".to_string(), 0), ("red_roof".to_string(), 1)]);
        build_tau(3, 6, &regions, &map).unwrap()
    }

    #[test]
    fn pavia_style_columns() {
        let tau = pavia_like();
        let col = |j| (0..6).map(|k| tau.get(k, j)).collect::<Vec<_>>();
        assert_eq!(col(0), vec![1, 0, 1, 1, 1, 1]);
        assert_eq!(col(1), vec![0, 1, 1, 1, 1, 1]);
        assert_eq!(col(2), vec![0, 0, 1, 1, 1, 1]);
        assert_eq!(tau.supervised_endmembers(), &BTreeSet::from([0, 1]));
    }

    #[test]
    fn no_supervision_is_all_ones() {
        let tau = build_tau(4, 3, &BTreeMap::new(), &BTreeMap::new()).unwrap();
        assert!(tau.is_all_ones());
        assert_eq!(tau, LabelMatrix::all_ones(3, 4));
    }

    #[test]
    fn region_covering_everything_gives_ones_row() {
        let regions = BTreeMap::from([("x".to_string(), BTreeSet::from([0, 1, 2]))]);
        let map = BTreeMap::from([("x".to_string(), 1)]);
        let tau = build_tau(3, 2, &regions, &map).unwrap();
        assert_eq!(tau.row(1), &[1, 1, 1]);
    }

    #[test]
    fn zero_column_rejected() {
        let regions = BTreeMap::from([("x".to_string(), BTreeSet::from([0]))]);
        let map = BTreeMap::from([("x".to_string(), 0)]);
        let err = build_tau(2, 1, &regions, &map).unwrap_err();
        assert!(err.to_string().contains("superpixel 1"), "{err}");
    }

    #[test]
    fn out_of_range_ids_rejected() {
        let regions = BTreeMap::from([("x".to_string(), BTreeSet::from([9]))]);
        let map = BTreeMap::from([("x".to_string(), 0)]);
        assert!(matches!(build_tau(2, 2, &regions, &map), Err(Error::LabelSchema(_))));
        let map = BTreeMap::from([("x".to_string(), 5)]);
        assert!(matches!(
            build_tau(2, 2, &BTreeMap::new(), &map),
            Err(Error::LabelSchema(_))
        ));
    }

    #[test]
    fn validate_names_offending_column() {
        assert!(validate_tau(&LabelMatrix::all_ones(2, 2)).is_ok());
        let err = LabelMatrix::from_rows(vec![vec![1, 0, 1], vec![1, 0, 0]]).unwrap_err();
        assert!(err.to_string().contains("superpixel 1"), "{err}");
        assert!(matches!(parse_cell("0.5", 0, 3), Err(Error::LabelSchema(_))));
    }

    #[test]
    fn imprecise_regions_dominate_precise() {
        let map = BTreeMap::from([("a".to_string(), 0), ("b".to_string(), 1)]);
        let precise = BTreeMap::from([
            ("a".to_string(), BTreeSet::from([0, 1])),
            ("b".to_string(), BTreeSet::from([2])),
        ]);
        let imprecise = BTreeMap::from([
            ("a".to_string(), BTreeSet::from([0, 1, 2])),
            ("b".to_string(), BTreeSet::from([0, 1, 2])),
        ]);
        let p = build_tau(4, 3, &precise, &map).unwrap();
        let q = build_tau(4, 3, &imprecise, &map).unwrap();
        for k in 0..3 {
            for j in 0..4 {
                assert!(q.get(k, j) >= p.get(k, j));
            }
        }
    }
}
