//! Representative-frame selection policies.
//!
//! * `LocalMax` picks the first frame after each peak of the smoothed
//!   difference curve (the scene-change frames).
//! * `LocalMaxMid` picks the frames halfway between consecutive peaks, plus
//!   the midpoints of the leading and trailing segments.
//! * `UniformPerSecond` is the conventional baseline: the middle frame of each
//!   second.
//!
//! The two curve-based policies never look at the frame rate, so relabeling a
//! video's fps leaves their output untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::{compute_curve, smooth, DiffCurve};
use crate::error::{Error, Result};
use crate::media::{Fps, FrameSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    UniformPerSecond,
    LocalMax,
    LocalMaxMid,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::UniformPerSecond => "uniform_per_second",
            PolicyKind::LocalMax => "local_max",
            PolicyKind::LocalMaxMid => "local_max_mid",
        }
    }

    /// Wire code used by the descriptor store.
    pub fn code(&self) -> u8 {
        match self {
            PolicyKind::UniformPerSecond => 0,
            PolicyKind::LocalMax => 1,
            PolicyKind::LocalMaxMid => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PolicyKind::UniformPerSecond),
            1 => Some(PolicyKind::LocalMax),
            2 => Some(PolicyKind::LocalMaxMid),
            _ => None,
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "uniform_per_second" | "uniform" | "1fps" => Ok(PolicyKind::UniformPerSecond),
            "local_max" => Ok(PolicyKind::LocalMax),
            "local_max_mid" | "mid" => Ok(PolicyKind::LocalMaxMid),
            _ => Err(Error::InvalidArgument(format!("unknown policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SelectionPolicy {
    pub kind: PolicyKind,
    /// Hanning window size; ignored (and stored as 0) for the uniform baseline.
    #[serde(default)]
    pub window: usize,
}

impl SelectionPolicy {
    pub fn uniform() -> Self {
        SelectionPolicy {
            kind: PolicyKind::UniformPerSecond,
            window: 0,
        }
    }

    pub fn local_max(window: usize) -> Result<Self> {
        Self::new(PolicyKind::LocalMax, window)
    }

    pub fn local_max_mid(window: usize) -> Result<Self> {
        Self::new(PolicyKind::LocalMaxMid, window)
    }

    pub fn new(kind: PolicyKind, window: usize) -> Result<Self> {
        let p = match kind {
            PolicyKind::UniformPerSecond => Self::uniform(),
            _ => SelectionPolicy { kind, window },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != PolicyKind::UniformPerSecond && self.window < 2 {
            return Err(Error::InvalidArgument(format!(
                "{} needs a window of at least 2, got {}",
                self.kind.as_str(),
                self.window
            )));
        }
        if self.window > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "window {} too large",
                self.window
            )));
        }
        Ok(())
    }

    /// Short label such as `local_max_mid-w30` or `uniform_per_second`.
    pub fn label(&self) -> String {
        match self.kind {
            PolicyKind::UniformPerSecond => self.kind.as_str().to_string(),
            _ => format!("{}-w{}", self.kind.as_str(), self.window),
        }
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub video_id: String,
    pub policy: SelectionPolicy,
    pub indices: Vec<usize>,
    pub timestamps: Vec<f64>,
    pub source_frame_count: usize,
}

impl SelectionResult {
    fn new(seq: &FrameSequence, policy: SelectionPolicy, indices: Vec<usize>) -> Self {
        debug_assert!(!indices.is_empty());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let fps = seq.fps();
        SelectionResult {
            video_id: seq.video_id().to_string(),
            policy,
            timestamps: indices.iter().map(|&i| fps.timestamp(i)).collect(),
            indices,
            source_frame_count: seq.len(),
        }
    }
}

/// Indices of strict local maxima. A run of equal values counts once, at its
/// midpoint rounded down, when both neighbors of the run are strictly smaller.
/// The first and last samples have no outer neighbor and never qualify.
pub fn find_local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let v = values[start];
        let mut end = start;
        while end + 1 < n && values[end + 1] == v {
            end += 1;
        }
        if start > 0 && end + 1 < n && values[start - 1] < v && values[end + 1] < v {
            out.push((start + end) / 2);
        }
        start = end + 1;
    }
    out
}

/// Frame indices of the curve peaks, mapped to the frame after each peaked
/// transition. Empty when the video has fewer than two frames or no peaks.
pub fn peak_frames(seq: &FrameSequence, window: usize) -> Result<(DiffCurve, Vec<usize>)> {
    let curve = compute_curve(seq);
    if curve.is_degenerate() {
        return Ok((curve, Vec::new()));
    }
    let curve = smooth(&curve, window)?;
    let frames = find_local_maxima(curve.best())
        .into_iter()
        .map(|i| i + 1)
        .collect();
    Ok((curve, frames))
}

fn middle_frame(n: usize) -> Vec<usize> {
    vec![n / 2]
}

pub fn select_local_max(seq: &FrameSequence, window: usize) -> Result<SelectionResult> {
    let policy = SelectionPolicy::local_max(window)?;
    let (_, peaks) = peak_frames(seq, window)?;
    let indices = if peaks.is_empty() {
        middle_frame(seq.len())
    } else {
        peaks
    };
    Ok(SelectionResult::new(seq, policy, indices))
}

/// Midpoints of the segments delimited by `peaks` within an `n`-frame video.
pub fn segment_midpoints(peaks: &[usize], n: usize) -> Vec<usize> {
    let (Some(&first), Some(&last)) = (peaks.first(), peaks.last()) else {
        return middle_frame(n);
    };
    let mut out = Vec::with_capacity(peaks.len() + 1);
    out.push(first / 2);
    out.extend(peaks.windows(2).map(|w| (w[0] + w[1]) / 2));
    out.push((last + n - 1) / 2);
    out.dedup();
    out
}

pub fn select_local_max_mid(seq: &FrameSequence, window: usize) -> Result<SelectionResult> {
    let policy = SelectionPolicy::local_max_mid(window)?;
    let (_, peaks) = peak_frames(seq, window)?;
    Ok(SelectionResult::new(
        seq,
        policy,
        segment_midpoints(&peaks, seq.len()),
    ))
}

/// `min(floor((s + 1/2) * fps), n - 1)` for every second `s` touched by the
/// video, deduplicated. Evaluated in integer arithmetic on the exact rational.
pub fn middle_of_second_indices(fps: Fps, n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let (num, den) = (fps.num() as u128, fps.den() as u128);
    let seconds = (n as u128 * den).div_ceil(num);
    let mut out: Vec<usize> = (0..seconds)
        .map(|s| {
            let idx = (2 * s + 1) * num / (2 * den);
            idx.min(n as u128 - 1) as usize
        })
        .collect();
    out.dedup();
    out
}

pub fn select_uniform_per_second(seq: &FrameSequence) -> SelectionResult {
    SelectionResult::new(
        seq,
        SelectionPolicy::uniform(),
        middle_of_second_indices(seq.fps(), seq.len()),
    )
}

pub fn select(seq: &FrameSequence, policy: &SelectionPolicy) -> Result<SelectionResult> {
    match policy.kind {
        PolicyKind::UniformPerSecond => Ok(select_uniform_per_second(seq)),
        PolicyKind::LocalMax => select_local_max(seq, policy.window),
        PolicyKind::LocalMaxMid => select_local_max_mid(seq, policy.window),
    }
}

/// Source frames per selected frame.
pub fn reduction_factor(result: &SelectionResult) -> f64 {
    result.source_frame_count as f64 / result.indices.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Frame;
    use proptest::prelude::*;

    /// Straight from the definition: find the run around `i`, check it.
    fn brute_maxima(v: &[f64]) -> Vec<usize> {
        let n = v.len();
        (0..n)
            .filter(|&i| {
                let mut a = i;
                while a > 0 && v[a - 1] == v[i] {
                    a -= 1;
                }
                let mut b = i;
                while b + 1 < n && v[b + 1] == v[i] {
                    b += 1;
                }
                a > 0 && b + 1 < n && v[a - 1] < v[i] && v[b + 1] < v[i] && i == (a + b) / 2
            })
            .collect()
    }

    fn static_scenes(lengths: &[usize], levels: &[u8], fps: Fps) -> FrameSequence {
        let frames = lengths
            .iter()
            .zip(levels)
            .flat_map(|(&len, &lvl)| (0..len).map(move |_| Frame::filled(8, 6, lvl)))
            .collect();
        FrameSequence::new("scenes", fps, frames).unwrap()
    }

    fn constant_video(n: usize) -> FrameSequence {
        static_scenes(&[n], &[90], Fps::integer(24).unwrap())
    }

    #[test]
    fn maxima_examples() {
        assert_eq!(find_local_maxima(&[0.0, 1.0, 0.0]), vec![1]);
        assert_eq!(
            find_local_maxima(&[1.0, 3.0, 2.0, 2.0, 5.0, 0.0]),
            vec![1, 4]
        );
        assert_eq!(find_local_maxima(&[0.0, 2.0, 2.0, 2.0, 0.0]), vec![2]);
        assert_eq!(
            find_local_maxima(&[0.0, 1.0, 2.0, 3.0]),
            Vec::<usize>::new()
        );
        assert_eq!(find_local_maxima(&[3.0, 2.0, 1.0]), Vec::<usize>::new());
        // plateau touching an end has no outer neighbor
        assert_eq!(find_local_maxima(&[2.0, 2.0, 1.0]), Vec::<usize>::new());
        assert_eq!(find_local_maxima(&[0.0, 2.0, 2.0, 0.0]), vec![1]);
        assert_eq!(find_local_maxima(&[5.0]), Vec::<usize>::new());
    }

    #[test]
    fn local_max_finds_scene_cuts() {
        let seq = static_scenes(&[40, 40, 40], &[20, 120, 60], Fps::integer(24).unwrap());
        for window in 2..=30 {
            let r = select_local_max(&seq, window).unwrap();
            assert_eq!(r.indices, vec![40, 80], "window {window}");
        }
    }

    #[test]
    fn degenerate_videos_fall_back_to_middle() {
        assert_eq!(
            select_local_max(&constant_video(1), 30).unwrap().indices,
            vec![0]
        );
        assert_eq!(
            select_local_max(&constant_video(100), 30).unwrap().indices,
            vec![50]
        );
        assert_eq!(
            select_local_max_mid(&constant_video(100), 30)
                .unwrap()
                .indices,
            vec![50]
        );
        assert_eq!(
            select_local_max_mid(&constant_video(1), 5).unwrap().indices,
            vec![0]
        );
    }

    #[test]
    fn midpoint_examples() {
        assert_eq!(segment_midpoints(&[40, 80], 120), vec![20, 60, 99]);
        assert_eq!(segment_midpoints(&[], 100), vec![50]);
        assert_eq!(segment_midpoints(&[10], 20), vec![5, 14]);
        assert_eq!(segment_midpoints(&[1, 2], 3), vec![0, 1, 2]);

        let seq = static_scenes(&[40, 40, 40], &[20, 120, 60], Fps::integer(24).unwrap());
        assert_eq!(
            select_local_max_mid(&seq, 30).unwrap().indices,
            vec![20, 60, 99]
        );
    }

    #[test]
    fn uniform_examples() {
        let fps24 = Fps::integer(24).unwrap();
        assert_eq!(middle_of_second_indices(fps24, 72), vec![12, 36, 60]);
        assert_eq!(
            middle_of_second_indices(Fps::integer(1).unwrap(), 3),
            vec![0, 1, 2]
        );
        assert_eq!(middle_of_second_indices(fps24, 10), vec![9]);
        let ntsc = Fps::new(30000, 1001).unwrap();
        let idx = middle_of_second_indices(ntsc, 90);
        assert_eq!(&idx[..3], &[14, 44, 74]);
        // 90 frames span 3.003 s; the partial fourth second clamps to the end
        assert_eq!(idx[3], 89);

        let seq = constant_video(72);
        let r = select_uniform_per_second(&seq);
        assert_eq!(r.timestamps, vec![0.5, 1.5, 2.5]);
        assert_eq!(r.policy.window, 0);
    }

    #[test]
    fn reduction_examples() {
        let mk = |n: usize, k: usize| SelectionResult {
            video_id: "v".into(),
            policy: SelectionPolicy::uniform(),
            indices: (0..k).collect(),
            timestamps: vec![0.0; k],
            source_frame_count: n,
        };
        assert!((reduction_factor(&mk(719, 17)) - 42.294).abs() < 1e-3);
        assert!((reduction_factor(&mk(719, 5)) - 143.8).abs() < 1e-9);
        assert_eq!(reduction_factor(&mk(50, 50)), 1.0);
    }

    #[test]
    fn fps_relabel_changes_only_the_uniform_policy() {
        let seq = static_scenes(
            &[33, 47, 29, 51],
            &[10, 200, 90, 160],
            Fps::integer(24).unwrap(),
        );
        let fast = seq.clone().with_fps(Fps::integer(36).unwrap());
        for p in [
            SelectionPolicy::local_max(10).unwrap(),
            SelectionPolicy::local_max_mid(10).unwrap(),
        ] {
            assert_eq!(
                select(&seq, &p).unwrap().indices,
                select(&fast, &p).unwrap().indices
            );
        }
        assert_ne!(
            select_uniform_per_second(&seq).indices,
            select_uniform_per_second(&fast).indices
        );
    }

    #[test]
    fn policy_validation() {
        assert!(SelectionPolicy::local_max(1).is_err());
        assert!(SelectionPolicy::local_max_mid(2).is_ok());
        assert_eq!(
            "local-max-mid".parse::<PolicyKind>().unwrap(),
            PolicyKind::LocalMaxMid
        );
        assert_eq!(
            SelectionPolicy::local_max_mid(30).unwrap().label(),
            "local_max_mid-w30"
        );
    }

    fn curve_with_plateaus() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((0u8..6, 1usize..4), 1..40).prop_map(|runs| {
            runs.into_iter()
                .flat_map(|(v, len)| std::iter::repeat_n(v as f64, len))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn maxima_match_definition(v in curve_with_plateaus()) {
            prop_assert_eq!(find_local_maxima(&v), brute_maxima(&v));
        }

        #[test]
        fn mid_avoids_peak_frames_in_long_segments(
            mut peaks in proptest::collection::btree_set(1usize..400, 0..12),
            extra in 1usize..50,
        ) {
            let peaks: Vec<usize> = std::mem::take(&mut peaks).into_iter().collect();
            let n = peaks.last().copied().unwrap_or(0) + extra;
            let mids = segment_midpoints(&peaks, n);
            prop_assert!(!mids.is_empty());
            prop_assert!(mids.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(mids.iter().all(|&m| m < n));
            // A midpoint may land on a peak frame only in segments of length <= 2.
            let mut bounds = vec![0];
            bounds.extend(&peaks);
            bounds.push(n - 1);
            for &m in &mids {
                if peaks.contains(&m) {
                    let short = bounds.windows(2).any(|w| w[1] - w[0] <= 2 && w[0] <= m && m <= w[1]);
                    prop_assert!(short, "mid {} on a peak of {:?}", m, peaks);
                }
            }
        }
    }
}
