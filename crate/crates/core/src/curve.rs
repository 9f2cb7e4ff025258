//! Interframe difference curve and Hanning-window smoothing.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::media::{Frame, FrameSequence};

/// Below this many samples the parallel paths are not worth the overhead.
const PAR_THRESHOLD: usize = 4096;

/// Per-transition mean absolute luma difference; `values[i]` describes the
/// step from frame `i` to frame `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffCurve {
    pub values: Vec<f64>,
    pub smoothed: Option<Vec<f64>>,
    /// Effective window used for `smoothed`, after clipping for short curves.
    pub window_size: Option<usize>,
}

impl DiffCurve {
    pub fn new(values: Vec<f64>) -> Self {
        DiffCurve {
            values,
            smoothed: None,
            window_size: None,
        }
    }

    /// A single-frame video has no transitions.
    pub fn is_degenerate(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smoothed values when present, raw values otherwise.
    pub fn best(&self) -> &[f64] {
        self.smoothed.as_deref().unwrap_or(&self.values)
    }
}

/// Mean absolute difference between two frames. The pixel sum is exact
/// integer arithmetic; only the final division is floating point.
/// Chunks of 2^16 pixels cannot overflow a u32 partial sum, so the inner
/// loop adds with wrapping arithmetic, which keeps it vectorizable even in
/// builds with overflow checks.
pub fn interframe_diff(prev: &Frame, next: &Frame) -> Result<f64> {
    prev.same_shape(next)?;
    let sum: u64 = prev
        .pixels()
        .chunks(1 << 16)
        .zip(next.pixels().chunks(1 << 16))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .fold(0u32, |acc, (&x, &y)| acc.wrapping_add(x.abs_diff(y) as u32))
                as u64
        })
        .sum();
    Ok(sum as f64 / prev.pixels().len() as f64)
}

pub fn compute_curve(seq: &FrameSequence) -> DiffCurve {
    let frames = seq.frames();
    let diff = |w: &[Frame]| interframe_diff(&w[0], &w[1]).expect("sequence frames share a shape");
    let values = if frames.len() > 64 {
        frames.par_windows(2).map(diff).collect()
    } else {
        frames.windows(2).map(diff).collect()
    };
    DiffCurve::new(values)
}

/// Normalized Hanning taps. Raw weights are `0.5 * (1 - cos(2*pi*k/(size-1)))`;
/// the second half mirrors the first so the taps are exactly symmetric.
/// `size == 2` is rejected because both taps are zero and cannot be normalized.
pub fn hanning_window(size: usize) -> Result<Vec<f64>> {
    if size < 3 {
        return Err(Error::InvalidWindow(size));
    }
    let denom = (size - 1) as f64;
    let mut w = vec![0.0; size];
    for k in 0..size.div_ceil(2) {
        let v = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / denom).cos());
        w[k] = v;
        w[size - 1 - k] = v;
    }
    w[0] = 0.0;
    w[size - 1] = 0.0;
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Window actually applied to a curve of `len` samples: requests of at least
/// `2 * len` shrink to the largest odd size below `2 * len`.
pub fn effective_window(window_size: usize, len: usize) -> usize {
    if len > 0 && window_size >= 2 * len {
        2 * len - 1
    } else {
        window_size
    }
}

/// Same-length convolution with the normalized Hanning window, centered with
/// offset `floor(size / 2)` and edge-replicated boundaries. Windows with
/// fewer than three taps have no interior weight and leave the curve as is.
pub fn smooth(curve: &DiffCurve, window_size: usize) -> Result<DiffCurve> {
    if curve.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot smooth an empty curve".into(),
        ));
    }
    let size = effective_window(window_size, curve.len());
    let smoothed = if size < 3 {
        curve.values.clone()
    } else {
        convolve_replicate(&curve.values, &hanning_window(size)?)
    };
    Ok(DiffCurve {
        values: curve.values.clone(),
        smoothed: Some(smoothed),
        window_size: Some(size),
    })
}

fn convolve_replicate(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let off = (w.len() / 2) as isize;
    let at = |i: usize| -> f64 {
        let base = i as isize - off;
        let mut acc = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            let j = (base + k as isize).clamp(0, n - 1);
            acc += wk * x[j as usize];
        }
        acc
    };
    if x.len() >= PAR_THRESHOLD {
        (0..x.len()).into_par_iter().map(at).collect()
    } else {
        (0..x.len()).map(at).collect()
    }
}
