//! Scale-space Laplacian-of-Gaussian blob detection.
//!
//! The response stack is the scale-normalized negated LoG, so bright
//! blobs produce positive maxima at the scale matching their radius.

use ndarray::{Array2, Array3, ArrayView2};

/// Blob detector configuration.
///
/// The noise-floor fields parameterize the preprocessing step that runs
/// before detection in the tracking pipeline.
#[derive(Debug, Clone)]
pub struct DetectionParams {
    pub sigma_min_px: f64,
    pub sigma_max_px: f64,
    pub n_sigma: usize,
    /// Minimum response on the [0,1]-normalized intensity scale.
    pub log_threshold: f64,
    /// Intensity at or below which preprocessing injects noise.
    pub noise_floor_cutoff: f64,
    /// Standard deviation of the injected noise.
    pub noise_sigma: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            sigma_min_px: 2.0,
            sigma_max_px: 6.0,
            n_sigma: 5,
            log_threshold: 0.05,
            noise_floor_cutoff: 20.0,
            noise_sigma: 5.0,
        }
    }
}

impl DetectionParams {
    fn sigma_grid(&self) -> Vec<f64> {
        assert!(self.n_sigma >= 1);
        assert!(0.0 < self.sigma_min_px && self.sigma_min_px < self.sigma_max_px);
        if self.n_sigma == 1 {
            return vec![self.sigma_min_px];
        }
        let step = (self.sigma_max_px - self.sigma_min_px) / (self.n_sigma - 1) as f64;
        (0..self.n_sigma)
            .map(|i| self.sigma_min_px + step * i as f64)
            .collect()
    }
}

/// A detected blob with sub-pixel center and estimated scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub response: f64,
}

fn reflect(i: isize, len: usize) -> usize {
    // scipy "reflect" boundary: d c b a | a b c d | d c b a
    let len = len as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= len {
            i = 2 * len - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Convolve rows (axis 1) with a symmetric 1D kernel, reflect boundary.
fn convolve_rows(input: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let (rows, cols) = input.dim();
    let radius = kernel.len() / 2;
    let mut out = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let idx = reflect(c as isize + k as isize - radius as isize, cols);
                acc += w * input[[r, idx]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Convolve columns (axis 0) with a symmetric 1D kernel, reflect boundary.
fn convolve_cols(input: &Array2<f64>, kernel: &[f64]) -> Array2<f64> {
    let (rows, cols) = input.dim();
    let radius = kernel.len() / 2;
    let mut out = Array2::zeros((rows, cols));
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let idx = reflect(r as isize + k as isize - radius as isize, rows);
                acc += w * input[[idx, c]];
            }
            out[[r, c]] = acc;
        }
    }
    out
}

/// Sampled Gaussian kernel of the given derivative order (0 or 2),
/// radius 4 sigma, zeroth order normalized to unit sum.
fn gaussian_kernel(sigma: f64, order: u8) -> Vec<f64> {
    let radius = (4.0 * sigma + 0.5) as isize;
    let mut phi: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = phi.iter().sum();
    for v in phi.iter_mut() {
        *v /= sum;
    }
    match order {
        0 => phi,
        2 => (-radius..=radius)
            .zip(phi.iter())
            .map(|(i, &p)| ((i * i) as f64 / (sigma * sigma) - 1.0) / (sigma * sigma) * p)
            .collect(),
        _ => unreachable!("only orders 0 and 2 are used"),
    }
}

/// Scale-normalized negated LoG response: -sigma^2 * laplacian(G_sigma * I).
fn log_response(frame: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let smooth = gaussian_kernel(sigma, 0);
    let second = gaussian_kernel(sigma, 2);
    // d2/dx2 along rows, Gaussian along columns; and vice versa.
    let dxx = convolve_cols(&convolve_rows(frame, &second), &smooth);
    let dyy = convolve_rows(&convolve_cols(frame, &second), &smooth);
    let mut out = dxx + dyy;
    out.mapv_inplace(|v| -v * sigma * sigma);
    out
}

fn quadratic_offset(prev: f64, center: f64, next: f64) -> f64 {
    let denom = prev - 2.0 * center + next;
    if denom.abs() < 1e-12 {
        return 0.0;
    }
    let offset = 0.5 * (prev - next) / denom;
    if offset.abs() > 1.0 {
        0.0
    } else {
        offset
    }
}

/// Detect bright blobs in a single intensity frame (values in [0, 255]).
///
/// Local maxima of the response stack over (row, col, scale) at or above
/// the threshold become candidates; centers are refined by per-axis
/// quadratic peak interpolation, and overlapping candidates closer than
/// `sqrt(2) * max(sigma_i, sigma_j)` are suppressed keeping the stronger.
pub fn detect_blobs(frame: ArrayView2<'_, f64>, params: &DetectionParams) -> Vec<Blob> {
    let (rows, cols) = frame.dim();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let normalized = frame.mapv(|v| v / 255.0);
    let sigmas = params.sigma_grid();

    let mut stack = Array3::zeros((sigmas.len(), rows, cols));
    for (s, &sigma) in sigmas.iter().enumerate() {
        stack
            .index_axis_mut(ndarray::Axis(0), s)
            .assign(&log_response(&normalized, sigma));
    }

    let mut candidates: Vec<Blob> = Vec::new();
    for s in 0..sigmas.len() {
        for r in 0..rows {
            for c in 0..cols {
                let value = stack[[s, r, c]];
                if value < params.log_threshold {
                    continue;
                }
                let mut is_max = true;
                'neighbors: for ds in -1i64..=1 {
                    for dr in -1i64..=1 {
                        for dc in -1i64..=1 {
                            if ds == 0 && dr == 0 && dc == 0 {
                                continue;
                            }
                            let (ns, nr, nc) =
                                (s as i64 + ds, r as i64 + dr, c as i64 + dc);
                            if ns < 0
                                || nr < 0
                                || nc < 0
                                || ns >= sigmas.len() as i64
                                || nr >= rows as i64
                                || nc >= cols as i64
                            {
                                continue;
                            }
                            if stack[[ns as usize, nr as usize, nc as usize]] > value {
                                is_max = false;
                                break 'neighbors;
                            }
                        }
                    }
                }
                if !is_max {
                    continue;
                }
                let dx = if c > 0 && c + 1 < cols {
                    quadratic_offset(stack[[s, r, c - 1]], value, stack[[s, r, c + 1]])
                } else {
                    0.0
                };
                let dy = if r > 0 && r + 1 < rows {
                    quadratic_offset(stack[[s, r - 1, c]], value, stack[[s, r + 1, c]])
                } else {
                    0.0
                };
                candidates.push(Blob {
                    x: c as f64 + dx,
                    y: r as f64 + dy,
                    sigma: sigmas[s],
                    response: value,
                });
            }
        }
    }

    // Strongest-first suppression of overlapping candidates.
    candidates.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
            .then(a.sigma.total_cmp(&b.sigma))
    });
    let mut kept: Vec<Blob> = Vec::new();
    for blob in candidates {
        let overlaps = kept.iter().any(|k| {
            let limit = std::f64::consts::SQRT_2 * k.sigma.max(blob.sigma);
            (k.x - blob.x).hypot(k.y - blob.y) < limit
        });
        if !overlaps {
            kept.push(blob);
        }
    }
    kept
}
