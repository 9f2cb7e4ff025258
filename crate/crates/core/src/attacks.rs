//! Temporal attacks on decoded frames: random blackouts, middle-of-second
//! blackouts and playback-speed relabeling.
//!
//! Random blackouts draw one value per frame, in frame order, from SplitMix64
//! seeded with the attack seed. A draw `x` maps to `u = (x >> 11) * 2^-53` and
//! the frame is blacked when `u < p`. This is the whole contract; any
//! SplitMix64 implementation reproduces the same blackout set.

use num_rational::Ratio;
use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{Frame, FrameSequence};
use crate::selection::middle_of_second_indices;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec {
    None,
    RandomBlackout {
        p: f64,
        /// Fixed seed; the experiment harness derives one per cell when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default)]
        bleed: usize,
    },
    TargetedBlackout {
        #[serde(default)]
        bleed: usize,
    },
    Speed {
        factor: f64,
    },
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackSpec::RandomBlackout { p, .. } if !(0.0..=1.0).contains(&p) => Err(
                Error::InvalidArgument(format!("blackout probability {p} outside [0, 1]")),
            ),
            AttackSpec::Speed { factor } => speed_factor(factor).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::None => "none",
            AttackSpec::RandomBlackout { .. } => "random",
            AttackSpec::TargetedBlackout { .. } => "targeted",
            AttackSpec::Speed { .. } => "speed",
        }
    }

    /// The attack's numeric parameter as printed in summary tables.
    pub fn param(&self) -> String {
        match *self {
            AttackSpec::None => String::new(),
            AttackSpec::RandomBlackout { p, bleed, .. } => {
                if bleed > 0 {
                    format!("p={p};bleed={bleed}")
                } else {
                    format!("p={p}")
                }
            }
            AttackSpec::TargetedBlackout { bleed } => {
                if bleed > 0 {
                    format!("bleed={bleed}")
                } else {
                    String::new()
                }
            }
            AttackSpec::Speed { factor } => format!("factor={factor}"),
        }
    }

    pub fn label(&self) -> String {
        let p = self.param();
        if p.is_empty() {
            self.name().to_string()
        } else {
            format!("{}({})", self.name(), p)
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, AttackSpec::RandomBlackout { .. })
    }

    /// Apply to one video. `seed` is used by random blackouts without a
    /// fixed seed of their own.
    pub fn apply(&self, seq: &FrameSequence, seed: u64) -> Result<FrameSequence> {
        self.validate()?;
        Ok(match *self {
            AttackSpec::None => seq.clone(),
            AttackSpec::RandomBlackout {
                p,
                seed: own,
                bleed,
            } => blackout_random(seq, p, own.unwrap_or(seed), bleed),
            AttackSpec::TargetedBlackout { bleed } => {
                blackout_frames(seq, &middle_of_second_indices(seq.fps(), seq.len()), bleed)
            }
            AttackSpec::Speed { factor } => speed_change(seq, speed_factor(factor)?)?,
        })
    }
}

/// Frames a random blackout with probability `p` and `seed` would hit.
pub fn random_blackout_indices(n: usize, p: f64, seed: u64) -> Vec<usize> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..n)
        .filter(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            u < p
        })
        .collect()
}

pub fn blackout_random(seq: &FrameSequence, p: f64, seed: u64, bleed: usize) -> FrameSequence {
    blackout_frames(seq, &random_blackout_indices(seq.len(), p, seed), bleed)
}

pub fn blackout_targeted(seq: &FrameSequence) -> FrameSequence {
    blackout_frames(seq, &middle_of_second_indices(seq.fps(), seq.len()), 0)
}

/// Zero the given frames. With `bleed > 0`, frames within `bleed` of a blacked
/// frame (and not blacked themselves) are darkened to half intensity once.
pub fn blackout_frames(seq: &FrameSequence, indices: &[usize], bleed: usize) -> FrameSequence {
    let n = seq.len();
    let mut black = vec![false; n];
    for &i in indices {
        if i < n {
            black[i] = true;
        }
    }
    let mut dim = vec![false; n];
    if bleed > 0 {
        for i in (0..n).filter(|&i| black[i]) {
            for j in i.saturating_sub(bleed)..=(i + bleed).min(n - 1) {
                dim[j] = !black[j];
            }
        }
    }
    let mut out = seq.clone();
    let (w, h) = (seq.width(), seq.height());
    for (i, frame) in out.frames_mut().iter_mut().enumerate() {
        if black[i] {
            *frame = Frame::filled(w, h, 0);
        } else if dim[i] {
            for v in frame.pixels_mut() {
                *v = v.div_ceil(2);
            }
        }
    }
    out
}

/// Exact rational for a decimal speed factor such as 1.2 (= 6/5).
pub fn speed_factor(factor: f64) -> Result<Ratio<u64>> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "speed factor must be a positive number, got {factor}"
        )));
    }
    let r = Ratio::<i64>::approximate_float(factor)
        .filter(|r| *r.numer() > 0)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("speed factor {factor} not representable"))
        })?;
    Ok(Ratio::new(*r.numer() as u64, *r.denom() as u64))
}

/// Keep every frame, relabel the frame rate as `fps * factor`.
pub fn speed_change(seq: &FrameSequence, factor: Ratio<u64>) -> Result<FrameSequence> {
    let fps = seq.fps().scaled(factor)?;
    Ok(seq.clone().with_fps(fps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Fps;
    use crate::selection::select_uniform_per_second;
    use proptest::prelude::*;
    use rand::RngCore;

    fn video(n: usize, fps: Fps) -> FrameSequence {
        let frames = (0..n)
            .map(|i| Frame::from_fn(4, 3, |x, y| (40 + (i * 3 + x * 5 + y * 11) % 180) as u8))
            .collect();
        FrameSequence::new("v", fps, frames).unwrap()
    }

    fn black_indices(seq: &FrameSequence) -> Vec<usize> {
        (0..seq.len())
            .filter(|&i| seq.frames()[i].pixels().iter().all(|&v| v == 0))
            .collect()
    }

    #[test]
    fn random_extremes() {
        let seq = video(50, Fps::integer(24).unwrap());
        assert_eq!(blackout_random(&seq, 0.0, 7, 0), seq);
        assert_eq!(black_indices(&blackout_random(&seq, 1.0, 7, 0)).len(), 50);
    }

    #[test]
    fn random_is_seeded() {
        let a = random_blackout_indices(1000, 0.1, 42);
        let b = random_blackout_indices(1000, 0.1, 42);
        assert_eq!(a, b);
        assert!((60..=140).contains(&a.len()), "{}", a.len());
        assert_ne!(a, random_blackout_indices(1000, 0.1, 43));
        for seed in 0..20 {
            assert_ne!(
                random_blackout_indices(100, 0.04, seed),
                random_blackout_indices(100, 0.04, seed + 1000)
            );
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0, as published with the
        // generator's reference implementation.
        let mut rng = SplitMix64::seed_from_u64(0);
        assert_eq!(rng.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(rng.next_u64(), 0x6e789e6aa1b965f4);
    }

    #[test]
    fn targeted_examples() {
        let seq = video(72, Fps::integer(24).unwrap());
        let hit = blackout_targeted(&seq);
        assert_eq!(black_indices(&hit), vec![12, 36, 60]);
        assert_eq!(black_indices(&hit), select_uniform_per_second(&seq).indices);

        let one = video(1, Fps::integer(24).unwrap());
        assert_eq!(black_indices(&blackout_targeted(&one)), vec![0]);

        let ntsc = video(90, Fps::new(30000, 1001).unwrap());
        assert_eq!(
            &black_indices(&blackout_targeted(&ntsc))[..3],
            &[14, 44, 74]
        );
    }

    #[test]
    fn bleed_halves_neighbors() {
        let seq = video(10, Fps::integer(24).unwrap());
        let out = blackout_frames(&seq, &[4], 2);
        assert_eq!(black_indices(&out), vec![4]);
        for i in [2, 3, 5, 6] {
            let want: Vec<u8> = seq.frames()[i]
                .pixels()
                .iter()
                .map(|v| v.div_ceil(2))
                .collect();
            assert_eq!(out.frames()[i].pixels(), &want[..]);
        }
        for i in [0, 1, 7, 8, 9] {
            assert_eq!(out.frames()[i], seq.frames()[i]);
        }
        // adjacent blackouts: neighbors dimmed once, black stays black
        let out = blackout_frames(&seq, &[4, 5], 1);
        assert_eq!(black_indices(&out), vec![4, 5]);
        let want: Vec<u8> = seq.frames()[3]
            .pixels()
            .iter()
            .map(|v| v.div_ceil(2))
            .collect();
        assert_eq!(out.frames()[3].pixels(), &want[..]);
    }

    #[test]
    fn speed_examples() {
        let seq = video(20, Fps::integer(24).unwrap());
        assert_eq!(speed_change(&seq, speed_factor(1.0).unwrap()).unwrap(), seq);
        let fast = speed_change(&seq, speed_factor(1.5).unwrap()).unwrap();
        assert_eq!(fast.fps(), Fps::integer(36).unwrap());
        assert_eq!(fast.frames(), seq.frames());
        let slow = speed_change(&seq, speed_factor(0.5).unwrap()).unwrap();
        assert_eq!(slow.fps(), Fps::integer(12).unwrap());
        assert_eq!(speed_factor(1.2).unwrap(), Ratio::new(6, 5));
        assert!(speed_factor(0.0).is_err());
        assert!(speed_factor(-1.0).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let a: AttackSpec = serde_json::from_str(r#"{"kind":"random_blackout","p":0.1}"#).unwrap();
        assert_eq!(
            a,
            AttackSpec::RandomBlackout {
                p: 0.1,
                seed: None,
                bleed: 0
            }
        );
        let s: AttackSpec = serde_json::from_str(r#"{"kind":"speed","factor":1.5}"#).unwrap();
        assert_eq!(s.label(), "speed(factor=1.5)");
        assert!(AttackSpec::RandomBlackout {
            p: 1.5,
            seed: None,
            bleed: 0
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn speed_round_trip_is_exact(
            num in 1u64..60_000, den in 1u64..2000,
            f_num in 1u64..50, f_den in 1u64..50,
        ) {
            let seq = video(3, Fps::new(num, den).unwrap());
            let f = Ratio::new(f_num, f_den);
            let back = speed_change(&speed_change(&seq, f).unwrap(), f.recip()).unwrap();
            prop_assert_eq!(back, seq);
        }

        #[test]
        fn targeted_hits_the_uniform_selection(
            n in 1usize..200, num in 1u64..120, den in 1u64..5,
        ) {
            let seq = video(n, Fps::new(num, den).unwrap());
            prop_assert_eq!(
                black_indices(&blackout_targeted(&seq)),
                select_uniform_per_second(&seq).indices
            );
        }

        #[test]
        fn attacks_preserve_shape(n in 1usize..60, p in 0.0f64..1.0, seed: u64, bleed in 0usize..3) {
            let seq = video(n, Fps::integer(25).unwrap());
            for a in [
                AttackSpec::RandomBlackout { p, seed: None, bleed },
                AttackSpec::TargetedBlackout { bleed },
                AttackSpec::Speed { factor: 1.2 },
            ] {
                let out = a.apply(&seq, seed).unwrap();
                prop_assert_eq!((out.width(), out.height(), out.len()), (seq.width(), seq.height(), seq.len()));
            }
        }
    }
}
