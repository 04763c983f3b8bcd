use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::LabelMap;
use crate::error::{Error, Result};
use crate::imgcore::ProbMap;

/// Order-preserving integer key of a non-negative float.
fn key(v: f32) -> u32 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// 4-neighbors in N, W, E, S order.
pub(crate) fn neighbors4(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    [
        (y > 0).then(|| i - w),
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

/// Marker-based watershed by priority flood.
///
/// Marker pixels are queued in row-major order at their own elevation. The
/// lowest queued pixel (oldest first on ties) hands its label to every
/// unlabeled 4-neighbor, which is queued at `max(own elevation, flood
/// level)`. Every pixel ends up with exactly one marker label.
pub fn watershed(elevation: &ProbMap, markers: &LabelMap) -> Result<LabelMap> {
    if elevation.channels() != 1 {
        return Err(Error::invalid(
            "elevation",
            format!("expected one channel, got {}", elevation.channels()),
        ));
    }
    if elevation.dimensions() != markers.dimensions() {
        return Err(Error::dims(elevation.dimensions(), markers.dimensions()));
    }
    let (w, h) = (markers.width() as usize, markers.height() as usize);
    let elev = elevation.as_slice();
    let mut labels = markers.labels().to_vec();
    let mut heap = BinaryHeap::new();
    let mut age = 0u64;
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 {
            heap.push(Reverse((key(elev[i]), age, i)));
            age += 1;
        }
    }
    if heap.is_empty() {
        return Err(Error::invalid("watershed", "no markers"));
    }
    while let Some(Reverse((level, _, i))) = heap.pop() {
        let label = labels[i];
        for n in neighbors4(i, w, h) {
            if labels[n] == 0 {
                labels[n] = label;
                heap.push(Reverse((key(elev[n]).max(level), age, n)));
                age += 1;
            }
        }
    }
    Ok(LabelMap::from_raw(
        markers.width(),
        markers.height(),
        labels,
        markers.num_labels(),
    ))
}
