//! Brute-force reference implementations used by the integration and
//! acceptance tests. Each one takes the slow, obvious route and shares no
//! code with the library path it checks.

#![allow(dead_code)]

use dermpipe_core::postprocess::CrfParams;
use dermpipe_core::{BinaryMask, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density)).unwrap()
}

pub fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
}

/// Pixel-by-pixel intersection over union with the empty/empty = 1 rule.
pub fn jaccard(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let mut inter = 0u64;
    let mut union = 0u64;
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            let a = pred.get(x, y);
            let b = gt.get(x, y);
            if a && b {
                inter += 1;
            }
            if a || b {
                union += 1;
            }
        }
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Dense mean-field over all pixel pairs, both labels kept explicitly, with
/// kernels evaluated directly. Returns the lesion marginal.
pub fn dense_crf(image: &RgbImage, prob: &[f64], params: &CrfParams) -> Vec<f64> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let n = w * h;
    let eps = 1e-6;
    let unary: Vec<[f64; 2]> = prob
        .iter()
        .map(|&p| {
            let p = p.clamp(eps, 1.0 - eps);
            [-(1.0 - p).ln(), -p.ln()]
        })
        .collect();
    let pos = |i: usize| ((i % w) as f64, (i / w) as f64);
    let color = |i: usize| {
        let p = image.pixel((i % w) as u32, (i / w) as u32);
        [p[0] as f64, p[1] as f64, p[2] as f64]
    };
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (xi, yi) = pos(i);
            let (xj, yj) = pos(j);
            let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
            let ci = color(i);
            let cj = color(j);
            let c2: f64 = (0..3).map(|c| (ci[c] - cj[c]).powi(2)).sum();
            kernel[i * n + j] = params.w_spatial
                * (-d2 / (2.0 * params.sigma_spatial.powi(2))).exp()
                + params.w_bilateral
                    * (-d2 / (2.0 * params.sigma_bilateral_xy.powi(2))
                        - c2 / (2.0 * params.sigma_bilateral_rgb.powi(2)))
                    .exp();
        }
    }
    let mut q: Vec<[f64; 2]> = prob
        .iter()
        .map(|&p| {
            let p = p.clamp(eps, 1.0 - eps);
            [1.0 - p, p]
        })
        .collect();
    for _ in 0..params.iterations {
        let mut next = vec![[0.0; 2]; n];
        for i in 0..n {
            let mut energy = unary[i];
            for j in 0..n {
                let k = kernel[i * n + j];
                // Potts: label l pays for neighbor mass on the other label.
                energy[0] += k * q[j][1];
                energy[1] += k * q[j][0];
            }
            let e0 = (-energy[0]).exp();
            let e1 = (-energy[1]).exp();
            next[i] = [e0 / (e0 + e1), e1 / (e0 + e1)];
        }
        q = next;
    }
    q.iter().map(|v| v[1]).collect()
}

/// Priority flood with a plain list and a linear scan for the minimum
/// `(level, age)` entry, 4-neighbors in N, W, E, S order.
pub fn priority_flood(elev: &[f32], markers: &[u32], w: usize, h: usize) -> Vec<u32> {
    let mut labels = markers.to_vec();
    let mut frontier: Vec<(f32, u64, usize)> = Vec::new();
    let mut age = 0;
    for i in 0..w * h {
        if labels[i] != 0 {
            frontier.push((elev[i], age, i));
            age += 1;
        }
    }
    while !frontier.is_empty() {
        let mut best = 0;
        for k in 1..frontier.len() {
            let (l, a, _) = frontier[k];
            let (bl, ba, _) = frontier[best];
            if l < bl || (l == bl && a < ba) {
                best = k;
            }
        }
        let (level, _, i) = frontier.remove(best);
        let (x, y) = (i % w, i / w);
        let mut nbrs = Vec::new();
        if y > 0 {
            nbrs.push(i - w);
        }
        if x > 0 {
            nbrs.push(i - 1);
        }
        if x + 1 < w {
            nbrs.push(i + 1);
        }
        if y + 1 < h {
            nbrs.push(i + w);
        }
        for nb in nbrs {
            if labels[nb] == 0 {
                labels[nb] = labels[i];
                frontier.push((elev[nb].max(level), age, nb));
                age += 1;
            }
        }
    }
    labels
}

/// Minimax path cost from the pixels carrying `label` in `markers` to every
/// pixel: the smallest possible maximum elevation along a 4-connected path
/// (endpoints included). Computed by repeated relaxation.
pub fn minimax_cost(elev: &[f32], markers: &[u32], label: u32, w: usize, h: usize) -> Vec<f32> {
    let mut cost = vec![f32::INFINITY; w * h];
    for i in 0..w * h {
        if markers[i] == label {
            cost[i] = elev[i];
        }
    }
    loop {
        let mut changed = false;
        for i in 0..w * h {
            let (x, y) = (i % w, i / w);
            let mut consider = |j: usize| {
                let c = cost[j].max(elev[i]);
                if c < cost[i] {
                    cost[i] = c;
                    changed = true;
                }
            };
            if y > 0 {
                consider(i - w);
            }
            if x > 0 {
                consider(i - 1);
            }
            if x + 1 < w {
                consider(i + 1);
            }
            if y + 1 < h {
                consider(i + w);
            }
        }
        if !changed {
            return cost;
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Component roots per pixel (None for background), via union-find over
/// already-visited neighbors.
pub fn union_find_roots(mask: &BinaryMask, eight: bool) -> Vec<Option<usize>> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let v = mask.as_slice();
    let mut uf = UnionFind::new(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if v[i] == 0 {
                continue;
            }
            let mut prev = Vec::new();
            if x > 0 {
                prev.push(i - 1);
            }
            if y > 0 {
                prev.push(i - w);
                if eight && x > 0 {
                    prev.push(i - w - 1);
                }
                if eight && x + 1 < w {
                    prev.push(i - w + 1);
                }
            }
            for j in prev {
                if v[j] == 1 {
                    uf.union(i, j);
                }
            }
        }
    }
    (0..w * h)
        .map(|i| (v[i] == 1).then(|| uf.find(i)))
        .collect()
}

/// Largest component via union-find; the smaller root index (= earliest
/// first pixel, since roots are the minimum index) wins ties.
pub fn largest_component(mask: &BinaryMask, eight: bool) -> BinaryMask {
    let roots = union_find_roots(mask, eight);
    let mut sizes = std::collections::BTreeMap::new();
    for r in roots.iter().flatten() {
        *sizes.entry(*r).or_insert(0usize) += 1;
    }
    let mut best: Option<(usize, usize)> = None;
    for (&root, &size) in &sizes {
        match best {
            Some((s, _)) if s >= size => {}
            _ => best = Some((size, root)),
        }
    }
    let keep = best.map(|b| b.1);
    let data = roots.iter().map(|r| (r.is_some() && *r == keep) as u8).collect();
    BinaryMask::new(mask.width(), mask.height(), data).unwrap()
}

fn mirror(i: i64, n: usize) -> usize {
    // Walk back and forth until inside; obvious but slow.
    if n == 1 {
        return 0;
    }
    let mut i = i;
    let n = n as i64;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Materializes the full bilinear resize (half-pixel centers, clamped
/// borders), then center-crops or reflect-pads it to the original size.
pub fn scale_reference(image: &RgbImage, factor: f64) -> RgbImage {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let nw = (w as f64 * factor).round() as usize;
    let nh = (h as f64 * factor).round() as usize;
    let mut resized = vec![[0.0f64; 3]; nw * nh];
    for ry in 0..nh {
        for rx in 0..nw {
            let sx = ((rx as f64 + 0.5) * w as f64 / nw as f64 - 0.5).clamp(0.0, (w - 1) as f64);
            let sy = ((ry as f64 + 0.5) * h as f64 / nh as f64 - 0.5).clamp(0.0, (h - 1) as f64);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
            for c in 0..3 {
                let p = |x: usize, y: usize| image.pixel(x as u32, y as u32)[c] as f64;
                let top = p(x0, y0) + (p(x1, y0) - p(x0, y0)) * tx;
                let bot = p(x0, y1) + (p(x1, y1) - p(x0, y1)) * tx;
                resized[ry * nw + rx][c] = top + (bot - top) * ty;
            }
        }
    }
    let fit = |o: usize, n: usize, m: usize| -> usize {
        if m >= n {
            o + (m - n) / 2
        } else {
            mirror(o as i64 - ((n - m) / 2) as i64, m)
        }
    };
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let v = resized[fit(y as usize, h, nh) * nw + fit(x as usize, w, nw)];
        v.map(|c| c.round().clamp(0.0, 255.0) as u8)
    })
    .unwrap()
}

/// Source pixel of output `(x, y)` after flips then a nearest-neighbor
/// scale-and-refit, in original coordinates.
pub fn augmented_source(
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    flip_h: bool,
    flip_v: bool,
    factor: f64,
) -> (usize, usize) {
    let axis = |o: usize, n: usize| -> usize {
        let m = (n as f64 * factor).round() as usize;
        let r = if m >= n {
            o + (m - n) / 2
        } else {
            mirror(o as i64 - ((n - m) / 2) as i64, m)
        };
        // Exact rational floor of (r + 0.5)·n / m.
        ((2 * r + 1) * n / (2 * m)).min(n - 1)
    };
    let (sx, sy) = (axis(x, w), axis(y, h));
    (
        if flip_h { w - 1 - sx } else { sx },
        if flip_v { h - 1 - sy } else { sy },
    )
}

/// Per-channel means in `[0, 1]`, L2-normalized.
pub fn gray_world(image: &RgbImage) -> [f64; 3] {
    let mut sums = [0.0f64; 3];
    for y in 0..image.height() {
        for x in 0..image.width() {
            let p = image.pixel(x, y);
            for c in 0..3 {
                sums[c] += p[c] as f64 / 255.0;
            }
        }
    }
    let n = image.pixel_count() as f64;
    let means = sums.map(|s| s / n);
    let norm = means.iter().map(|m| m * m).sum::<f64>().sqrt();
    means.map(|m| m / norm)
}

/// Mean recall over present classes from raw (truth, predicted) pairs.
pub fn balanced_accuracy(pairs: &[(usize, usize)]) -> f64 {
    let mut recalls = Vec::new();
    for class in 0..7 {
        let of_class: Vec<_> = pairs.iter().filter(|(t, _)| *t == class).collect();
        if of_class.is_empty() {
            continue;
        }
        let hit = of_class.iter().filter(|(_, p)| *p == class).count();
        recalls.push(hit as f64 / of_class.len() as f64);
    }
    recalls.iter().sum::<f64>() / recalls.len() as f64
}
