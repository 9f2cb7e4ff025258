//! Frame descriptors: compact unit-norm vectors compared by cosine.
//!
//! The bundled [`DctDescriptor`] reduces a frame to 32x32, removes the mean,
//! takes the low-frequency 8x8 block of the 2-D DCT and drops the DC term,
//! leaving 63 coefficients. Anything implementing [`FrameDescriber`] can be
//! used in its place; the rest of the pipeline only sees vectors.

mod dct;
mod store;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::media::{Frame, FrameSequence};
use crate::selection::{select, SelectionPolicy, SelectionResult};

pub use dct::{dct_block, demeaned_grid, downscale, GRID};
pub use store::{read_store, store_size, write_store, STORE_HEADER_LEN, STORE_MAGIC};

/// Pre-normalization norms below this mark a frame as flat.
pub const FLAT_EPSILON: f64 = 1e-9;

/// A unit vector, or the all-zero vector for frames without structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub flat: bool,
}

impl FeatureVector {
    /// L2-normalize; tiny inputs become the flat vector.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < FLAT_EPSILON {
            values.fill(0.0);
            return FeatureVector { values, flat: true };
        }
        for v in &mut values {
            *v /= norm;
        }
        FeatureVector {
            values,
            flat: false,
        }
    }
}

pub trait FrameDescriber: Send + Sync {
    fn dim(&self) -> usize;
    fn describe(&self, frame: &Frame) -> FeatureVector;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DctDescriptor {
    block: usize,
}

impl Default for DctDescriptor {
    fn default() -> Self {
        DctDescriptor { block: 8 }
    }
}

impl DctDescriptor {
    /// `block` x `block` low-frequency coefficients minus DC; 2..=32.
    pub fn with_block(block: usize) -> Result<Self> {
        if !(2..=GRID).contains(&block) {
            return Err(Error::InvalidArgument(format!(
                "dct block {block} outside 2..={GRID}"
            )));
        }
        Ok(DctDescriptor { block })
    }

    /// Unnormalized AC coefficients.
    pub fn coefficients(&self, frame: &Frame) -> Vec<f64> {
        let grid = demeaned_grid(frame);
        let mut c = dct_block(&grid, self.block);
        c.remove(0);
        c
    }
}

impl FrameDescriber for DctDescriptor {
    fn dim(&self) -> usize {
        self.block * self.block - 1
    }

    fn describe(&self, frame: &Frame) -> FeatureVector {
        FeatureVector::normalized(self.coefficients(frame))
    }
}

pub fn dct_descriptor(frame: &Frame) -> FeatureVector {
    DctDescriptor::default().describe(frame)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameDescriptor {
    pub frame_index: usize,
    pub timestamp: f64,
    pub vector: Vec<f64>,
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptorSet {
    pub video_id: String,
    pub policy: SelectionPolicy,
    pub descriptors: Vec<FrameDescriptor>,
}

impl DescriptorSet {
    pub fn dim(&self) -> Option<usize> {
        self.descriptors.first().map(|d| d.vector.len())
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dim) = self.dim() {
            for d in &self.descriptors {
                if d.vector.len() != dim {
                    return Err(Error::VectorDimension(dim, d.vector.len()));
                }
            }
        }
        if !self
            .descriptors
            .windows(2)
            .all(|w| w[0].frame_index < w[1].frame_index)
        {
            return Err(Error::Invariant(format!(
                "{}: frame indices not strictly increasing",
                self.video_id
            )));
        }
        Ok(())
    }
}

/// Dot product of two unit (or all-zero) vectors, clamped to [-1, 1].
/// A flat vector is all zeros, so it matches nothing.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::VectorDimension(a.len(), b.len()));
    }
    Ok(dot(a, b))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .sum::<f64>()
        .clamp(-1.0, 1.0)
}

/// Describe already-selected frames.
pub fn describe_selection(
    seq: &FrameSequence,
    selection: &SelectionResult,
    describer: &dyn FrameDescriber,
) -> DescriptorSet {
    let frames = seq.frames();
    let describe_one = |(&index, &timestamp): (&usize, &f64)| {
        let fv = describer.describe(&frames[index]);
        FrameDescriptor {
            frame_index: index,
            timestamp,
            vector: fv.values,
            flat: fv.flat,
        }
    };
    let pairs = selection.indices.iter().zip(&selection.timestamps);
    let descriptors = if selection.indices.len() > 8 {
        pairs
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(describe_one)
            .collect()
    } else {
        pairs.map(describe_one).collect()
    };
    DescriptorSet {
        video_id: seq.video_id().to_string(),
        policy: selection.policy,
        descriptors,
    }
}

pub fn describe_video_with(
    seq: &FrameSequence,
    policy: &SelectionPolicy,
    describer: &dyn FrameDescriber,
) -> Result<DescriptorSet> {
    let selection = select(seq, policy)?;
    Ok(describe_selection(seq, &selection, describer))
}

pub fn describe_video(seq: &FrameSequence, policy: &SelectionPolicy) -> Result<DescriptorSet> {
    describe_video_with(seq, policy, &DctDescriptor::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Fps;

    /// Direct double sum over the whole grid for each requested coefficient.
    fn naive_dct(grid: &[f64], block: usize) -> Vec<f64> {
        let n = GRID as f64;
        let alpha = |k: usize| {
            if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            }
        };
        let mut out = Vec::new();
        for v in 0..block {
            for u in 0..block {
                let mut s = 0.0;
                for y in 0..GRID {
                    for x in 0..GRID {
                        s += grid[y * GRID + x]
                            * (std::f64::consts::PI * (2 * y + 1) as f64 * v as f64 / (2.0 * n))
                                .cos()
                            * (std::f64::consts::PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n))
                                .cos();
                    }
                }
                out.push(alpha(u) * alpha(v) * s);
            }
        }
        out
    }

    #[test]
    fn downscale_examples() {
        let f = Frame::from_fn(32, 32, |x, y| (x * 7 + y * 3) as u8);
        let g = downscale(&f);
        assert!(g.iter().zip(f.pixels()).all(|(a, &b)| *a == b as f64));

        assert!(downscale(&Frame::filled(64, 64, 7))
            .iter()
            .all(|&v| v == 7.0));

        let checker = Frame::from_fn(64, 64, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 });
        assert!(downscale(&checker).iter().all(|&v| v == 127.5));

        // upscaling replicates the nearest source pixel
        let tiny = Frame::new(2, 1, vec![10, 20]).unwrap();
        let g = downscale(&tiny);
        assert_eq!(g[0], 10.0);
        assert_eq!(g[31], 20.0);
        assert_eq!(g[GRID * 31 + 16], 20.0);
    }

    #[test]
    fn dct_matches_direct_sum() {
        let gradient = Frame::from_fn(48, 40, |x, _| (x * 5) as u8);
        let grid = downscale(&gradient);
        let fast = dct_block(&grid, 8);
        let slow = naive_dct(&grid, 8);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_frames_are_flat() {
        let d = dct_descriptor(&Frame::filled(40, 30, 99));
        assert!(d.flat);
        assert!(d.values.iter().all(|&v| v == 0.0));
        assert_eq!(d.values.len(), 63);
    }

    #[test]
    fn brightness_shift_is_invisible() {
        let f = Frame::from_fn(50, 37, |x, y| ((x * 3 + y * y) % 200) as u8);
        let shifted = Frame::from_fn(50, 37, |x, y| f.get(x, y) + 20);
        let a = dct_descriptor(&f);
        let b = dct_descriptor(&shifted);
        assert_eq!(a, b);
        let norm: f64 = a.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cosine_examples() {
        let v = dct_descriptor(&Frame::from_fn(32, 32, |x, y| ((x ^ y) * 8) as u8)).values;
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&v, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&vec![0.0; 63], &v).unwrap(), 0.0);
        assert!(cosine_similarity(&v, &v[..10]).is_err());
    }

    #[test]
    fn block_size_sets_the_dimension() {
        let d = DctDescriptor::with_block(4).unwrap();
        assert_eq!(d.dim(), 15);
        assert_eq!(
            d.describe(&Frame::from_fn(8, 8, |x, _| x as u8 * 30))
                .values
                .len(),
            15
        );
        assert!(DctDescriptor::with_block(1).is_err());
    }

    #[test]
    fn describe_constant_video_gives_one_flat_descriptor() {
        let seq = FrameSequence::new(
            "c",
            Fps::integer(24).unwrap(),
            vec![Frame::filled(16, 16, 50); 30],
        )
        .unwrap();
        let set = describe_video(&seq, &SelectionPolicy::local_max(10).unwrap()).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.descriptors[0].flat);
        assert_eq!(set.descriptors[0].frame_index, 15);
    }
}
