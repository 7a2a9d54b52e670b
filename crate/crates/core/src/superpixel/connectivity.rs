use std::collections::{BTreeMap, VecDeque};

use super::Segmentation;

struct Components {
    /// Component id per pixel, ids in raster order of first pixel.
    id: Vec<usize>,
    label: Vec<usize>,
    pixels: Vec<Vec<usize>>,
}

fn neighbours(i: usize, rows: usize, cols: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (i / cols, i % cols);
    [
        (r > 0).then(|| i - cols),
        (c > 0).then(|| i - 1),
        (c + 1 < cols).then(|| i + 1),
        (r + 1 < rows).then(|| i + cols),
    ]
    .into_iter()
    .flatten()
}

fn components(seg: &Segmentation) -> Components {
    let (rows, cols) = (seg.rows(), seg.cols());
    let labels = seg.labels();
    let mut id = vec![usize::MAX; labels.len()];
    let mut label = Vec::new();
    let mut pixels = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if id[start] != usize::MAX {
            continue;
        }
        let cid = label.len();
        label.push(labels[start]);
        let mut members = Vec::new();
        id[start] = cid;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            members.push(p);
            for q in neighbours(p, rows, cols) {
                if id[q] == usize::MAX && labels[q] == labels[start] {
                    id[q] = cid;
                    queue.push_back(q);
                }
            }
        }
        pixels.push(members);
    }
    Components { id, label, pixels }
}

pub fn is_four_connected(seg: &Segmentation) -> bool {
    components(seg).label.len() == seg.n_superpixels()
}

/// Keep the largest 4-connected piece of every superpixel and hand each
/// remaining piece to the adjacent region it shares the longest border with
/// (ties go to the lower label). Labels of kept pieces are preserved, so an
/// already-connected segmentation comes back unchanged.
pub fn enforce_connectivity(seg: &Segmentation) -> Segmentation {
    let comps = components(seg);
    let n_comps = comps.label.len();
    if n_comps == seg.n_superpixels() {
        return seg.clone();
    }

    let mut kept = vec![usize::MAX; seg.n_superpixels()];
    for (cid, &l) in comps.label.iter().enumerate() {
        if kept[l] == usize::MAX || comps.pixels[cid].len() > comps.pixels[kept[l]].len() {
            kept[l] = cid;
        }
    }
    let mut region: Vec<Option<usize>> = vec![None; n_comps];
    for (l, &cid) in kept.iter().enumerate() {
        region[cid] = Some(l);
    }

    let (rows, cols) = (seg.rows(), seg.cols());
    let mut pending: Vec<usize> = (0..n_comps).filter(|&c| region[c].is_none()).collect();
    while !pending.is_empty() {
        let mut still = Vec::new();
        for &cid in &pending {
            let mut border: BTreeMap<usize, usize> = BTreeMap::new();
            for &p in &comps.pixels[cid] {
                for q in neighbours(p, rows, cols) {
                    if let Some(r) = region[comps.id[q]].filter(|_| comps.id[q] != cid) {
                        *border.entry(r).or_default() += 1;
                    }
                }
            }
            // BTreeMap iterates ascending, so strict `>` keeps the lowest label on ties.
            let best = border
                .into_iter()
                .fold(None, |acc: Option<(usize, usize)>, (r, n)| match acc {
                    Some((_, bn)) if bn >= n => acc,
                    _ => Some((r, n)),
                });
            match best {
                Some((r, _)) => region[cid] = Some(r),
                None => still.push(cid),
            }
        }
        assert!(still.len() < pending.len(), "orphan pieces with no assigned neighbour");
        pending = still;
    }

    let labels = comps
        .id
        .iter()
        .map(|&cid| region[cid].expect("every piece assigned"))
        .collect::<Vec<_>>();
    Segmentation::compacted(rows, cols, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connected_is_unchanged() {
        let seg = Segmentation::from_labels(2, 3, vec![0, 0, 1, 2, 2, 1]).unwrap();
        assert_eq!(enforce_connectivity(&seg), seg);
    }

    #[test]
    fn orphan_pixel_joins_surrounding_region() {
        #[rustfmt::skip]
        let labels = vec![
            0, 0, 1, 1, 1,
            0, 0, 1, 0, 1,
            0, 0, 1, 1, 1,
        ];
        let seg = Segmentation::from_labels(3, 5, labels).unwrap();
        let out = enforce_connectivity(&seg);
        assert_eq!(out.label_at(1, 3), 1);
        assert!(is_four_connected(&out));
        assert_eq!(out.n_superpixels(), 2);
    }

    #[test]
    fn checkerboard_becomes_connected() {
        let (rows, cols) = (6, 7);
        let labels = (0..rows * cols).map(|i| (i / cols + i % cols) % 2).collect();
        let seg = Segmentation::from_labels(rows, cols, labels).unwrap();
        let out = enforce_connectivity(&seg);
        assert!(is_four_connected(&out));
        assert_eq!(out.members().iter().map(Vec::len).sum::<usize>(), rows * cols);
    }
}
