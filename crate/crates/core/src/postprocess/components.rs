use std::str::FromStr;

use super::LabelMap;
use crate::error::Error;
use crate::imgcore::BinaryMask;

/// Which neighbors count as connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "4" => Ok(Connectivity::Four),
            "8" => Ok(Connectivity::Eight),
            other => Err(Error::invalid("connectivity", format!("{other:?}, expected 4 or 8"))),
        }
    }
}

const OFFSETS4: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
const OFFSETS8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Labels foreground components 1.. in order of their first pixel in
/// row-major order; returns the label map and each component's size
/// (`sizes[k]` belongs to label `k + 1`).
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> (LabelMap, Vec<usize>) {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let src = mask.as_slice();
    let offsets: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &OFFSETS4,
        Connectivity::Eight => &OFFSETS8,
    };
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if src[start] == 0 || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for &(dx, dy) in offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if src[n] == 1 && labels[n] == 0 {
                    labels[n] = label;
                    stack.push(n);
                }
            }
        }
        sizes.push(size);
    }
    let count = sizes.len() as u32;
    (
        LabelMap::from_raw(mask.width(), mask.height(), labels, count),
        sizes,
    )
}

/// Keeps only the largest component; on equal sizes the one whose first
/// pixel comes earliest in row-major order wins.
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let (labels, sizes) = label_components(mask, connectivity);
    let mut best: Option<(usize, u32)> = None;
    for (k, &size) in sizes.iter().enumerate() {
        if best.is_none_or(|(s, _)| size > s) {
            best = Some((size, k as u32 + 1));
        }
    }
    let keep = best.map_or(0, |(_, l)| l);
    let data = labels
        .labels()
        .iter()
        .map(|&l| (l != 0 && l == keep) as u8)
        .collect();
    BinaryMask::from_raw(mask.width(), mask.height(), data)
}
