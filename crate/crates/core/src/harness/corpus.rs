//! Seeded synthetic corpus: multi-scene reference videos built from
//! procedural textures, positive queries that embed a run of scenes copied
//! from one reference between freshly generated scenes, and distractor
//! queries made only of fresh scenes.
//!
//! Scenes are still unless `drift_pixels_per_second` is set, in which case
//! each scene's texture slides slowly in a random direction. Queries carry a
//! fixed per-video grain pattern and a brightness offset, both integral and
//! small enough that no pixel saturates, so a copied span has exactly the
//! difference curve of its source.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::error::{Error, Result};
use crate::media::{save_video, Fps, Frame, FrameSequence, Manifest, ManifestEntry, Role};
use crate::metrics::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneLength {
    pub mean: f64,
    pub jitter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCorpusSpec {
    pub num_references: usize,
    pub num_queries_positive: usize,
    pub num_distractors: usize,
    pub fps: Fps,
    pub width: usize,
    pub height: usize,
    /// Scene duration in seconds, uniform in `mean +- jitter`.
    pub scene_length_seconds: SceneLength,
    pub scenes_per_video: CountRange,
    /// Number of consecutive scenes a positive query copies. The rest of the
    /// query, up to a `scenes_per_video` draw, is fresh material.
    pub scenes_per_query: CountRange,
    pub noise_sigma: f64,
    /// Upper bound on per-scene texture motion; 0 gives still scenes.
    pub drift_pixels_per_second: f64,
    /// Maximum absolute brightness offset applied to queries.
    pub brightness_jitter: i16,
    /// Place every cut on a whole-second boundary.
    pub align_cuts_to_seconds: bool,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        SyntheticCorpusSpec {
            num_references: 200,
            num_queries_positive: 50,
            num_distractors: 50,
            fps: Fps::integer(24).expect("24 fps"),
            width: 64,
            height: 48,
            scene_length_seconds: SceneLength {
                mean: 3.0,
                jitter: 1.5,
            },
            scenes_per_video: CountRange { min: 8, max: 12 },
            scenes_per_query: CountRange { min: 3, max: 6 },
            noise_sigma: 2.0,
            drift_pixels_per_second: 0.0,
            brightness_jitter: 10,
            align_cuts_to_seconds: false,
            seed: 2024,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic corpus: {m}")));
        if self.num_references == 0 {
            return bad("need at least one reference");
        }
        if self.num_queries_positive + self.num_distractors == 0 {
            return bad("need at least one query");
        }
        if self.width == 0 || self.height == 0 || self.width > 4096 || self.height > 4096 {
            return bad("frame size out of range");
        }
        let SceneLength { mean, jitter } = self.scene_length_seconds;
        if !mean.is_finite() || jitter.is_nan() || jitter < 0.0 || jitter >= mean {
            return bad("scene length needs mean > jitter >= 0");
        }
        for r in [self.scenes_per_video, self.scenes_per_query] {
            if r.min == 0 || r.min > r.max {
                return bad("count ranges need 1 <= min <= max");
            }
        }
        if !(0.0..=8.0).contains(&self.noise_sigma) {
            return bad("noise_sigma must be within [0, 8]");
        }
        if !(0.0..=100.0).contains(&self.drift_pixels_per_second) {
            return bad("drift_pixels_per_second must be within [0, 100]");
        }
        if !(0..=20).contains(&self.brightness_jitter) {
            return bad("brightness_jitter must be within [0, 20]");
        }
        Ok(())
    }
}

/// Procedural still image. Every variant is rescaled into `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Texture {
    Gradient {
        angle: f64,
    },
    Bars {
        angle: f64,
        period: f64,
        phase: f64,
        duty: f64,
    },
    Waves {
        components: Vec<(f64, f64, f64, f64)>,
    },
    Rings {
        cx: f64,
        cy: f64,
        period: f64,
        phase: f64,
    },
    ValueNoise {
        grid: usize,
        cells: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub texture: Texture,
    pub lo: f64,
    pub hi: f64,
    pub frames: usize,
    /// Texture motion in pixels per frame.
    pub drift: (f64, f64),
}

impl Scene {
    fn is_static(&self) -> bool {
        self.drift == (0.0, 0.0)
    }

    /// Border needed around the frame so drifting never samples outside.
    fn margin(&self) -> usize {
        let reach =
            self.drift.0.abs().max(self.drift.1.abs()) * self.frames.saturating_sub(1) as f64;
        reach.ceil() as usize + 1
    }

    /// Texture over the frame extended by `m` pixels on every side, rescaled
    /// into `[lo, hi]`.
    fn field(&self, w: usize, h: usize, m: usize) -> Vec<f64> {
        let (wf, hf) = (w as f64, h as f64);
        let (bw, bh) = (w + 2 * m, h + 2 * m);
        let mut field = Vec::with_capacity(bw * bh);
        for y in 0..bh {
            for x in 0..bw {
                let xf = x as f64 - m as f64 + 0.5;
                let yf = y as f64 - m as f64 + 0.5;
                let v = match &self.texture {
                    Texture::Gradient { angle } => xf * angle.cos() + yf * angle.sin(),
                    Texture::Bars {
                        angle,
                        period,
                        phase,
                        duty,
                    } => {
                        let s = ((xf * angle.cos() + yf * angle.sin()) / period + phase)
                            .rem_euclid(1.0);
                        if s < *duty {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Texture::Waves { components } => components
                        .iter()
                        .map(|&(fx, fy, ph, amp)| {
                            amp * (TAU * (fx * xf / wf + fy * yf / hf) + ph).sin()
                        })
                        .sum(),
                    Texture::Rings {
                        cx,
                        cy,
                        period,
                        phase,
                    } => {
                        let r = ((xf - cx * wf).powi(2) + (yf - cy * hf).powi(2)).sqrt();
                        (TAU * r / period + phase).sin()
                    }
                    Texture::ValueNoise { grid, cells } => {
                        let g = *grid as f64 - 1.0;
                        let gx = (xf / wf * g).clamp(0.0, g);
                        let gy = (yf / hf * g).clamp(0.0, g);
                        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
                        let (ix1, iy1) = ((ix + 1).min(grid - 1), (iy + 1).min(grid - 1));
                        let (tx, ty) = (gx - ix as f64, gy - iy as f64);
                        let c = |a: usize, b: usize| cells[b * grid + a];
                        let top = c(ix, iy) * (1.0 - tx) + c(ix1, iy) * tx;
                        let bottom = c(ix, iy1) * (1.0 - tx) + c(ix1, iy1) * tx;
                        top * (1.0 - ty) + bottom * ty
                    }
                };
                field.push(v);
            }
        }
        let min = field.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (max - min).max(1e-12);
        for v in &mut field {
            *v = self.lo + (self.hi - self.lo) * (*v - min) / span;
        }
        field
    }

    /// Luma fields of every frame of the scene, before grain.
    fn frame_fields(&self, w: usize, h: usize) -> Vec<Vec<f64>> {
        if self.is_static() {
            return vec![self.field(w, h, 0)];
        }
        let m = self.margin();
        let big = self.field(w, h, m);
        let bw = w + 2 * m;
        (0..self.frames)
            .map(|t| {
                let sx0 = m as f64 + self.drift.0 * t as f64;
                let sy0 = m as f64 + self.drift.1 * t as f64;
                let (ix, iy) = (sx0.floor() as usize, sy0.floor() as usize);
                let (tx, ty) = (sx0 - ix as f64, sy0 - iy as f64);
                let mut out = Vec::with_capacity(w * h);
                for y in 0..h {
                    let r0 = &big[(y + iy) * bw..];
                    let r1 = &big[(y + iy + 1) * bw..];
                    for x in 0..w {
                        let i = x + ix;
                        let top = r0[i] * (1.0 - tx) + r0[i + 1] * tx;
                        let bottom = r1[i] * (1.0 - tx) + r1[i + 1] * tx;
                        out.push(top * (1.0 - ty) + bottom * ty);
                    }
                }
                out
            })
            .collect()
    }
}

/// Fixed per-video perturbation of a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grain {
    pub seed: u64,
    pub sigma: f64,
    pub brightness: i16,
}

/// Where a positive query's copied scenes come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopySpan {
    pub reference: String,
    pub reference_scene: usize,
    pub query_scene: usize,
    pub scenes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoPlan {
    pub video_id: String,
    pub role: Role,
    pub distractor: bool,
    pub source: Option<CopySpan>,
    pub scenes: Vec<Scene>,
    pub grain: Option<Grain>,
}

impl VideoPlan {
    pub fn frame_count(&self) -> usize {
        self.scenes.iter().map(|s| s.frames).sum()
    }

    /// First frame of scene `scene`.
    pub fn scene_start(&self, scene: usize) -> usize {
        self.scenes[..scene].iter().map(|s| s.frames).sum()
    }

    /// Frame indices where a new scene starts.
    pub fn cut_frames(&self) -> Vec<usize> {
        self.scenes
            .iter()
            .scan(0, |acc, s| {
                *acc += s.frames;
                Some(*acc)
            })
            .take(self.scenes.len().saturating_sub(1))
            .collect()
    }

    pub fn render(&self, spec: &SyntheticCorpusSpec) -> FrameSequence {
        let (w, h) = (spec.width, spec.height);
        let grain = self.grain.map(|g| {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let limit = (4.0 * g.sigma).ceil();
            let field: Vec<f64> = if g.sigma > 0.0 {
                let normal = Normal::new(0.0, g.sigma).expect("sigma validated");
                (0..w * h)
                    .map(|_| normal.sample(&mut rng).round().clamp(-limit, limit))
                    .collect()
            } else {
                vec![0.0; w * h]
            };
            (field, g.brightness as f64)
        });
        let mut frames = Vec::with_capacity(self.frame_count());
        for scene in &self.scenes {
            let fields = scene.frame_fields(w, h);
            let repeat = if scene.is_static() { scene.frames } else { 1 };
            for field in fields {
                // Grain is integral, so adding it after rounding is the same
                // as before: a copied scene keeps its exact frame differences.
                let data: Vec<u8> = match &grain {
                    Some((noise, brightness)) => field
                        .iter()
                        .zip(noise)
                        .map(|(v, n)| (v.round() + n + brightness).clamp(0.0, 255.0) as u8)
                        .collect(),
                    None => field
                        .iter()
                        .map(|v| v.round().clamp(0.0, 255.0) as u8)
                        .collect(),
                };
                let frame = Frame::new(w, h, data).expect("sized from spec");
                frames.extend(std::iter::repeat_n(frame, repeat));
            }
        }
        FrameSequence::new(self.video_id.clone(), spec.fps, frames).expect("non-empty plan")
    }
}

fn random_texture(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Texture {
    let diag = ((w * w + h * h) as f64).sqrt();
    match rng.random_range(0..5) {
        0 => Texture::Gradient {
            angle: rng.random_range(0.0..TAU),
        },
        1 => Texture::Bars {
            angle: rng.random_range(0.0..TAU),
            period: rng.random_range(diag / 6.0..diag / 1.5),
            phase: rng.random_range(0.0..1.0),
            duty: rng.random_range(0.3..0.7),
        },
        2 => Texture::Waves {
            components: (0..3)
                .map(|_| {
                    (
                        rng.random_range(-3.0f64..3.0).round(),
                        rng.random_range(-3.0f64..3.0).round(),
                        rng.random_range(0.0..TAU),
                        rng.random_range(0.3..1.0),
                    )
                })
                .collect(),
        },
        3 => Texture::Rings {
            cx: rng.random_range(0.0..1.0),
            cy: rng.random_range(0.0..1.0),
            period: rng.random_range(diag / 5.0..diag / 1.5),
            phase: rng.random_range(0.0..TAU),
        },
        _ => {
            let grid = rng.random_range(3..=6);
            Texture::ValueNoise {
                grid,
                cells: (0..grid * grid)
                    .map(|_| rng.random_range(0.0..1.0))
                    .collect(),
            }
        }
    }
}

fn random_scenes(spec: &SyntheticCorpusSpec, rng: &mut ChaCha8Rng) -> Vec<Scene> {
    let count = rng.random_range(spec.scenes_per_video.min..=spec.scenes_per_video.max);
    let SceneLength { mean, jitter } = spec.scene_length_seconds;
    let fps = spec.fps.as_f64();
    let mut scenes = Vec::with_capacity(count);
    // cumulative time and frame position keep rounding error from drifting
    let (mut t, mut pos) = (0.0f64, 0usize);
    for _ in 0..count {
        let mut len = if jitter > 0.0 {
            rng.random_range(mean - jitter..=mean + jitter)
        } else {
            mean
        };
        if spec.align_cuts_to_seconds {
            len = len.round().max(1.0);
        }
        t += len;
        let end = if spec.align_cuts_to_seconds {
            // exact frame index of second t: floor(t * num / den)
            (t as u64 * spec.fps.num() / spec.fps.den()) as usize
        } else {
            (t * fps).round() as usize
        };
        let frames = end.saturating_sub(pos).max(1);
        pos += frames;
        let speed = rng.random_range(0.0..=1.0) * spec.drift_pixels_per_second / fps;
        let heading = rng.random_range(0.0..TAU);
        scenes.push(Scene {
            texture: random_texture(rng, spec.width, spec.height),
            lo: rng.random_range(30.0..80.0),
            hi: rng.random_range(170.0..225.0),
            frames,
            drift: if speed > 0.0 {
                (speed * heading.cos(), speed * heading.sin())
            } else {
                (0.0, 0.0)
            },
        });
    }
    scenes
}

fn random_grain(spec: &SyntheticCorpusSpec, rng: &mut ChaCha8Rng) -> Grain {
    let j = spec.brightness_jitter;
    Grain {
        seed: rng.random(),
        sigma: spec.noise_sigma,
        brightness: if j > 0 { rng.random_range(-j..=j) } else { 0 },
    }
}

/// Every video of a synthetic corpus, described but not rendered.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub spec: SyntheticCorpusSpec,
    pub plans: Vec<VideoPlan>,
    pub ground_truth: GroundTruth,
    index: BTreeMap<String, usize>,
}

impl SyntheticCorpus {
    pub fn new(spec: SyntheticCorpusSpec) -> Result<Self> {
        spec.validate()?;
        let mut plans = Vec::new();
        for i in 0..spec.num_references {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("reference/{i}")));
            plans.push(VideoPlan {
                video_id: format!("R{i:04}"),
                role: Role::Reference,
                distractor: false,
                source: None,
                scenes: random_scenes(&spec, &mut rng),
                grain: None,
            });
        }

        // Query ids are shuffled so that id order carries no label signal.
        let n_queries = spec.num_queries_positive + spec.num_distractors;
        let mut slots: Vec<usize> = (0..n_queries).collect();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "query-order"));
        for i in (1..slots.len()).rev() {
            let j = shuffle_rng.random_range(0..=i);
            slots.swap(i, j);
        }

        let mut gt = GroundTruth::default();
        for (k, &slot) in slots.iter().enumerate() {
            let video_id = format!("Q{slot:04}");
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &format!("query/{k}")));
            let plan = if k < spec.num_queries_positive {
                let src = rng.random_range(0..spec.num_references);
                let source = &plans[src];
                let total = source.scenes.len();
                let want = rng.random_range(spec.scenes_per_query.min..=spec.scenes_per_query.max);
                let take = want.min(total);
                let start = rng.random_range(0..=total - take);
                let fresh = random_scenes(&spec, &mut rng);
                let padding = fresh.len().saturating_sub(take);
                let prefix = rng.random_range(0..=padding);
                let mut scenes = fresh[..prefix].to_vec();
                scenes.extend_from_slice(&source.scenes[start..start + take]);
                scenes.extend_from_slice(&fresh[prefix..padding]);
                gt.insert(video_id.clone(), source.video_id.clone());
                VideoPlan {
                    video_id,
                    role: Role::Query,
                    distractor: false,
                    source: Some(CopySpan {
                        reference: source.video_id.clone(),
                        reference_scene: start,
                        query_scene: prefix,
                        scenes: take,
                    }),
                    scenes,
                    grain: Some(random_grain(&spec, &mut rng)),
                }
            } else {
                VideoPlan {
                    video_id,
                    role: Role::Query,
                    distractor: true,
                    source: None,
                    scenes: random_scenes(&spec, &mut rng),
                    grain: Some(random_grain(&spec, &mut rng)),
                }
            };
            plans.push(plan);
        }
        plans.sort_by(|a, b| a.video_id.cmp(&b.video_id));
        let index = plans
            .iter()
            .enumerate()
            .map(|(i, p)| (p.video_id.clone(), i))
            .collect();
        Ok(SyntheticCorpus {
            spec,
            plans,
            ground_truth: gt,
            index,
        })
    }

    pub fn plan(&self, video_id: &str) -> Option<&VideoPlan> {
        self.index.get(video_id).map(|&i| &self.plans[i])
    }

    pub fn render(&self, video_id: &str) -> Result<FrameSequence> {
        self.plan(video_id)
            .map(|p| p.render(&self.spec))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown video {video_id:?}")))
    }
}

/// Written corpus: file paths plus the manifest and ground truth locations.
#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub ground_truth: GroundTruth,
    pub ground_truth_path: PathBuf,
}

/// Render every video of the corpus to `out_dir` as `.vcdr` files, with
/// `manifest.json` and `ground_truth.csv` alongside.
pub fn generate_corpus(spec: &SyntheticCorpusSpec, out_dir: &Path) -> Result<GeneratedCorpus> {
    use rayon::prelude::*;

    let corpus = SyntheticCorpus::new(spec.clone())?;
    let videos = out_dir.join("videos");
    std::fs::create_dir_all(&videos).map_err(|e| Error::io(&videos, e))?;
    corpus.plans.par_iter().try_for_each(|plan| {
        let path = videos.join(format!("{}.vcdr", plan.video_id));
        save_video(&plan.render(spec), &path)
    })?;
    let manifest = Manifest {
        entries: corpus
            .plans
            .iter()
            .map(|p| ManifestEntry {
                video_id: p.video_id.clone(),
                path: PathBuf::from("videos").join(format!("{}.vcdr", p.video_id)),
                fps_override: None,
                role: p.role,
                distractor: p.distractor,
            })
            .collect(),
    };
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    let ground_truth_path = out_dir.join("ground_truth.csv");
    let file =
        std::fs::File::create(&ground_truth_path).map_err(|e| Error::io(&ground_truth_path, e))?;
    corpus.ground_truth.write_csv(file)?;
    let spec_path = out_dir.join("corpus_spec.json");
    std::fs::write(
        &spec_path,
        serde_json::to_string_pretty(spec).expect("spec serializes") + "\n",
    )
    .map_err(|e| Error::io(&spec_path, e))?;
    Ok(GeneratedCorpus {
        manifest,
        manifest_path,
        ground_truth: corpus.ground_truth,
        ground_truth_path,
    })
}
