//! Two-label fully connected CRF with Gaussian spatial and bilateral Potts
//! kernels, solved by mean-field iteration.
//!
//! Messages are summed over a square window of radius
//! `ceil(truncation * max(sigma_spatial, sigma_bilateral_xy))`, which is
//! exact whenever the window covers the image. Images whose longer side
//! exceeds `max_working_side` are iterated on an integer-factor box-averaged
//! grid (each cell weighted by the number of pixels it holds, sigmas scaled
//! down by the factor); the last update always happens at full resolution
//! with full-resolution unaries and bilinearly interpolated messages.
//!
//! Updates are Jacobi-style: every pixel of an iteration reads the previous
//! iteration's marginals, so the result does not depend on the schedule.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::exec;
use crate::imgcore::{ProbMap, RgbImage};

/// Probabilities are clamped into `[EPS, 1 - EPS]` before taking logs.
pub const PROB_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    pub iterations: u32,
    pub w_spatial: f64,
    pub sigma_spatial: f64,
    pub w_bilateral: f64,
    pub sigma_bilateral_xy: f64,
    /// In 8-bit intensity units.
    pub sigma_bilateral_rgb: f64,
    pub kernel_truncation_radius_sigmas: f64,
    /// Longest side iterated at full resolution; 0 never downsamples.
    pub max_working_side: u32,
    /// Dense O(N²) messages at full resolution, ignoring truncation and
    /// `max_working_side`.
    pub exact: bool,
}

impl Default for CrfParams {
    fn default() -> Self {
        CrfParams {
            iterations: 5,
            w_spatial: 3.0,
            sigma_spatial: 3.0,
            w_bilateral: 5.0,
            sigma_bilateral_xy: 50.0,
            sigma_bilateral_rgb: 13.0,
            kernel_truncation_radius_sigmas: 3.0,
            max_working_side: 128,
            exact: false,
        }
    }
}

impl CrfParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_spatial", self.sigma_spatial),
            ("sigma_bilateral_xy", self.sigma_bilateral_xy),
            ("sigma_bilateral_rgb", self.sigma_bilateral_rgb),
            ("kernel_truncation_radius_sigmas", self.kernel_truncation_radius_sigmas),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("CRF parameters", format!("{name} = {v} must be > 0")));
            }
        }
        for (name, v) in [("w_spatial", self.w_spatial), ("w_bilateral", self.w_bilateral)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid("CRF parameters", format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn apply_config(&mut self, cfg: &mut Config, prefix: &str) -> Result<()> {
        let key = |k: &str| format!("{prefix}{k}");
        cfg.take_into(&key("iterations"), &mut self.iterations)?;
        cfg.take_into(&key("w_spatial"), &mut self.w_spatial)?;
        cfg.take_into(&key("sigma_spatial"), &mut self.sigma_spatial)?;
        cfg.take_into(&key("w_bilateral"), &mut self.w_bilateral)?;
        cfg.take_into(&key("sigma_bilateral_xy"), &mut self.sigma_bilateral_xy)?;
        cfg.take_into(&key("sigma_bilateral_rgb"), &mut self.sigma_bilateral_rgb)?;
        cfg.take_into(
            &key("kernel_truncation_radius_sigmas"),
            &mut self.kernel_truncation_radius_sigmas,
        )?;
        cfg.take_into(&key("max_working_side"), &mut self.max_working_side)?;
        cfg.take_into(&key("exact"), &mut self.exact)?;
        self.validate()
    }

    fn downsample_factor(&self, width: u32, height: u32) -> usize {
        let side = width.max(height);
        if self.exact || self.max_working_side == 0 || side <= self.max_working_side {
            1
        } else {
            side.div_ceil(self.max_working_side) as usize
        }
    }
}

/// Grid the messages are computed on.
struct Grid {
    width: usize,
    height: usize,
    colors: Vec<[u8; 3]>,
    /// Number of full-resolution pixels behind each cell.
    weights: Vec<f64>,
}

impl Grid {
    fn full(image: &RgbImage) -> Self {
        Grid {
            width: image.width() as usize,
            height: image.height() as usize,
            colors: image.pixels().collect(),
            weights: vec![1.0; image.pixel_count()],
        }
    }

    /// Box-averages `factor × factor` blocks (partial blocks at the borders).
    /// Returns the grid and the block-averaged lesion probabilities.
    fn downsampled(image: &RgbImage, prob: &[f64], factor: usize) -> (Self, Vec<f64>) {
        let (w, h) = (image.width() as usize, image.height() as usize);
        let (gw, gh) = (w.div_ceil(factor), h.div_ceil(factor));
        let mut sums = vec![[0.0f64; 4]; gw * gh];
        let mut counts = vec![0.0f64; gw * gh];
        let bytes = image.as_bytes();
        for y in 0..h {
            for x in 0..w {
                let cell = (y / factor) * gw + x / factor;
                let i = y * w + x;
                for c in 0..3 {
                    sums[cell][c] += bytes[i * 3 + c] as f64;
                }
                sums[cell][3] += prob[i];
                counts[cell] += 1.0;
            }
        }
        let colors = sums
            .iter()
            .zip(&counts)
            .map(|(s, n)| std::array::from_fn(|c| (s[c] / n).round() as u8))
            .collect();
        let probs = sums.iter().zip(&counts).map(|(s, n)| s[3] / n).collect();
        (
            Grid {
                width: gw,
                height: gh,
                colors,
                weights: counts,
            },
            probs,
        )
    }
}

/// Kernel tables for one working resolution.
struct Kernels {
    radius: usize,
    /// `w_spatial * exp(-d²/2σs²)` per window offset.
    spatial: Vec<f64>,
    /// `w_bilateral * exp(-d²/2σxy²)` per window offset.
    bilateral_xy: Vec<f64>,
    /// `exp(-|ΔI|²/2σrgb²)` indexed by the integer squared color distance.
    color: Vec<f64>,
    bilateral: bool,
}

impl Kernels {
    fn new(params: &CrfParams, scale: f64, radius: usize) -> Self {
        let ss = params.sigma_spatial / scale;
        let sb = params.sigma_bilateral_xy / scale;
        let side = 2 * radius + 1;
        let mut spatial = Vec::with_capacity(side * side);
        let mut bilateral_xy = Vec::with_capacity(side * side);
        for dy in 0..side {
            for dx in 0..side {
                let d2 = ((dy as f64 - radius as f64).powi(2) + (dx as f64 - radius as f64).powi(2)) as f64;
                spatial.push(params.w_spatial * (-d2 / (2.0 * ss * ss)).exp());
                bilateral_xy.push(params.w_bilateral * (-d2 / (2.0 * sb * sb)).exp());
            }
        }
        let bilateral = params.w_bilateral > 0.0;
        let color = if bilateral {
            let s2 = 2.0 * params.sigma_bilateral_rgb * params.sigma_bilateral_rgb;
            (0..=3 * 255 * 255).map(|d2| (-(d2 as f64) / s2).exp()).collect()
        } else {
            Vec::new()
        };
        Kernels {
            radius,
            spatial,
            bilateral_xy,
            color,
            bilateral,
        }
    }
}

fn color_d2(a: [u8; 3], b: [u8; 3]) -> usize {
    (0..3)
        .map(|c| {
            let d = a[c] as i32 - b[c] as i32;
            (d * d) as usize
        })
        .sum()
}

/// For every cell, `(Σ k·w·Q_lesion, Σ k·w)` over the window, excluding the
/// cell's own pixel.
fn messages(grid: &Grid, kernels: &Kernels, q: &[f64]) -> Vec<(f64, f64)> {
    let (gw, gh, r) = (grid.width, grid.height, kernels.radius);
    let side = 2 * r + 1;
    let center = r * side + r;
    let self_k = kernels.spatial[center]
        + if kernels.bilateral {
            kernels.bilateral_xy[center] * kernels.color[0]
        } else {
            0.0
        };
    let mut out = vec![(0.0, 0.0); gw * gh];
    exec::for_each_chunk_mut(&mut out, gw, |y, row| {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(gh - 1);
        for (x, slot) in row.iter_mut().enumerate() {
            let i = y * gw + x;
            let ci = grid.colors[i];
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(gw - 1);
            let mut m = 0.0;
            let mut total = 0.0;
            for yy in y0..=y1 {
                let cells = yy * gw + x0..=yy * gw + x1;
                let k0 = (yy + r - y) * side + (x0 + r - x);
                let offsets = k0..=k0 + (x1 - x0);
                let neighbors = grid.colors[cells.clone()]
                    .iter()
                    .zip(&grid.weights[cells.clone()])
                    .zip(&q[cells]);
                if kernels.bilateral {
                    let kernel = kernels.spatial[offsets.clone()]
                        .iter()
                        .zip(&kernels.bilateral_xy[offsets]);
                    for (((cj, w), qj), (sp, bx)) in neighbors.zip(kernel) {
                        let kw = (sp + bx * kernels.color[color_d2(ci, *cj)]) * w;
                        m += kw * qj;
                        total += kw;
                    }
                } else {
                    for (((_, w), qj), sp) in neighbors.zip(&kernels.spatial[offsets]) {
                        let kw = sp * w;
                        m += kw * qj;
                        total += kw;
                    }
                }
            }
            // The cell's own pixel is not its neighbor; its other pixels are.
            *slot = (m - self_k * q[i], total - self_k);
        }
    });
    out
}

fn unary_diff(p: f64) -> f64 {
    // U_lesion - U_background = -ln p + ln(1 - p)
    let p = p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
    (1.0 - p).ln() - p.ln()
}

/// Mean-field update of the lesion marginal from its unary difference and
/// the pairwise messages. Potts energy of label l is the kernel mass held by
/// the other label, so E_lesion - E_bg = du + (total - m) - m.
fn update(du: f64, (m, total): (f64, f64)) -> f64 {
    1.0 / (1.0 + (du + total - 2.0 * m).exp())
}

/// Refines a single-channel lesion probability map.
pub fn crf_refine(image: &RgbImage, prob: &ProbMap, params: &CrfParams) -> Result<ProbMap> {
    params.validate()?;
    if prob.channels() != 1 {
        return Err(Error::invalid(
            "probability map",
            format!("CRF needs one channel, got {}", prob.channels()),
        ));
    }
    if image.dimensions() != prob.dimensions() {
        return Err(Error::dims(image.dimensions(), prob.dimensions()));
    }
    if params.iterations == 0 {
        return Ok(prob.clone());
    }
    let (w, h) = (image.width() as usize, image.height() as usize);
    let p_full: Vec<f64> = prob.as_slice().iter().map(|&v| v as f64).collect();
    let du_full: Vec<f64> = p_full.iter().map(|&p| unary_diff(p)).collect();
    let factor = params.downsample_factor(image.width(), image.height());

    let radius_for = |gw: usize, gh: usize, scale: f64| -> usize {
        let span = gw.max(gh) - 1;
        if params.exact {
            return span;
        }
        let sigma = params.sigma_spatial.max(params.sigma_bilateral_xy) / scale;
        let r = (params.kernel_truncation_radius_sigmas * sigma).ceil();
        (r as usize).min(span)
    };

    let final_messages = if factor == 1 {
        let grid = Grid::full(image);
        let kernels = Kernels::new(params, 1.0, radius_for(w, h, 1.0));
        let mut q: Vec<f64> = p_full.iter().map(|p| p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)).collect();
        for _ in 1..params.iterations {
            let msg = messages(&grid, &kernels, &q);
            q = du_full.iter().zip(msg).map(|(&du, m)| update(du, m)).collect();
        }
        messages(&grid, &kernels, &q)
    } else {
        let (grid, p_low) = Grid::downsampled(image, &p_full, factor);
        let scale = factor as f64;
        let kernels = Kernels::new(params, scale, radius_for(grid.width, grid.height, scale));
        let du_low: Vec<f64> = p_low.iter().map(|&p| unary_diff(p)).collect();
        let mut q: Vec<f64> = p_low.iter().map(|p| p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)).collect();
        for _ in 1..params.iterations {
            let msg = messages(&grid, &kernels, &q);
            q = du_low.iter().zip(msg).map(|(&du, m)| update(du, m)).collect();
        }
        let msg = messages(&grid, &kernels, &q);
        upsample_messages(&msg, grid.width, grid.height, w, h, factor)
    };

    let data = du_full
        .iter()
        .zip(final_messages)
        .map(|(&du, m)| update(du, m) as f32)
        .collect();
    Ok(ProbMap::from_raw(prob.width(), prob.height(), 1, data))
}

fn upsample_messages(
    low: &[(f64, f64)],
    gw: usize,
    gh: usize,
    w: usize,
    h: usize,
    factor: usize,
) -> Vec<(f64, f64)> {
    let taps = |n: usize, g: usize| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|i| {
                let s = ((i as f64 + 0.5) / factor as f64 - 0.5).clamp(0.0, (g - 1) as f64);
                let i0 = s.floor() as usize;
                (i0, (i0 + 1).min(g - 1), s - i0 as f64)
            })
            .collect()
    };
    let xt = taps(w, gw);
    let yt = taps(h, gh);
    let mut out = Vec::with_capacity(w * h);
    for &(y0, y1, ty) in &yt {
        for &(x0, x1, tx) in &xt {
            let lerp2 = |f: fn(&(f64, f64)) -> f64| {
                let a = f(&low[y0 * gw + x0]);
                let b = f(&low[y0 * gw + x1]);
                let c = f(&low[y1 * gw + x0]);
                let d = f(&low[y1 * gw + x1]);
                let top = a + (b - a) * tx;
                let bottom = c + (d - c) * tx;
                top + (bottom - top) * ty
            };
            out.push((lerp2(|m| m.0), lerp2(|m| m.1)));
        }
    }
    out
}
