//! Video ingestion: decoded grayscale frames plus exact frame-rate metadata.
//!
//! Three on-disk forms are understood: YUV4MPEG2 streams (`.y4m`), the raw
//! grayscale blob format (`.vcdr`) and directories of numbered binary PGM
//! images. Real containers are expected to be piped through an external
//! decoder first, e.g. `ffmpeg -i in.mp4 -pix_fmt gray -f yuv4mpegpipe -`.

mod blob;
mod pgm;
mod y4m;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use blob::{read_blob, write_blob, BLOB_HEADER_LEN, BLOB_MAGIC};
pub use pgm::{load_image_dir, parse_pgm, write_pgm};
pub use y4m::{parse_y4m, write_y4m, Y4mReader};

/// Frame rate as an exact positive rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fps(Ratio<u64>);

impl Fps {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidArgument(format!(
                "fps {num}/{den}: numerator and denominator must be >= 1"
            )));
        }
        Ok(Fps(Ratio::new(num, den)))
    }

    pub fn integer(num: u64) -> Result<Self> {
        Self::new(num, 1)
    }

    pub fn num(&self) -> u64 {
        *self.0.numer()
    }

    pub fn den(&self) -> u64 {
        *self.0.denom()
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn as_f64(&self) -> f64 {
        self.num() as f64 / self.den() as f64
    }

    /// Multiply by a positive rational factor; the result is kept reduced.
    pub fn scaled(&self, factor: Ratio<u64>) -> Result<Self> {
        if *factor.numer() == 0 {
            return Err(Error::InvalidArgument("speed factor must be > 0".into()));
        }
        let r = self.0 * factor;
        Fps::new(*r.numer(), *r.denom())
    }

    /// Seconds elapsed at frame `index`.
    pub fn timestamp(&self, index: usize) -> f64 {
        index as f64 * self.den() as f64 / self.num() as f64
    }
}

impl fmt::Display for Fps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num(), self.den())
    }
}

impl FromStr for Fps {
    type Err = Error;

    /// Accepts `30`, `30000/1001` or `30000:1001`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse fps {s:?}"));
        let s = s.trim();
        match s.split_once(['/', ':']) {
            Some((n, d)) => Fps::new(n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?),
            None => Fps::integer(s.parse().map_err(|_| bad())?),
        }
    }
}

impl Serialize for Fps {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fps {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(u64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(n) => Fps::integer(n).map_err(serde::de::Error::custom),
        }
    }
}

/// One decoded luma frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("frame must be at least 1x1".into()));
        }
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "frame buffer has {} bytes, expected {}x{}={}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Frame {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Frame {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &Frame) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }
}

/// All decoded frames of one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    video_id: String,
    width: usize,
    height: usize,
    fps: Fps,
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(video_id: impl Into<String>, fps: Fps, frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidArgument("a video needs at least one frame".into()))?;
        let (width, height) = (first.width, first.height);
        for f in &frames[1..] {
            first.same_shape(f)?;
        }
        Ok(FrameSequence {
            video_id: video_id.into(),
            width,
            height,
            fps,
            frames,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> Fps {
        self.fps
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.fps.timestamp(self.frames.len())
    }

    pub fn with_id(mut self, video_id: impl Into<String>) -> Self {
        self.video_id = video_id.into();
        self
    }

    pub fn with_fps(mut self, fps: Fps) -> Self {
        self.fps = fps;
        self
    }

    /// Replace frames in place; shape is preserved by construction.
    pub(crate) fn frames_mut(&mut self) -> &mut [Frame] {
        &mut self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// BT.601 luma.
pub fn rgb_to_luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    y.round().clamp(0.0, 255.0) as u8
}

/// Where a manifest entry sits in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Reference,
    Query,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps_override: Option<Fps>,
    pub role: Role,
    /// Set for queries that copy nothing; they also seed the background pool.
    #[serde(default)]
    pub distractor: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.video_id.as_str()) {
                return Err(Error::DuplicateId(e.video_id.clone()));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))?;
        m.validate()?;
        // Relative paths resolve against the manifest's directory.
        if let Some(dir) = path.parent() {
            for e in &mut m.entries {
                if e.path.is_relative() {
                    e.path = dir.join(&e.path);
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn references(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Reference)
    }

    pub fn queries(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Query)
    }
}

/// Load a video by inspecting the path: directories are PGM sequences,
/// `.vcdr` is the raw blob format, anything else is parsed as Y4M.
pub fn load_video(path: &Path, video_id: &str, fps_override: Option<Fps>) -> Result<FrameSequence> {
    let seq = if path.is_dir() {
        let fps = fps_override.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{}: image directories need an explicit fps",
                path.display()
            ))
        })?;
        load_image_dir(path, fps)?
    } else {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        if path.extension().is_some_and(|e| e == "vcdr") {
            read_blob(reader)?
        } else {
            parse_y4m(reader)?
        }
    };
    let seq = seq.with_id(video_id);
    Ok(match fps_override {
        Some(fps) => seq.with_fps(fps),
        None => seq,
    })
}

/// Write a sequence in the format implied by the extension (`.vcdr` or Y4M).
pub fn save_video(seq: &FrameSequence, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    if path.extension().is_some_and(|e| e == "vcdr") {
        write_blob(seq, &mut w)?;
    } else {
        write_y4m(seq, &mut w)?;
    }
    std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
}

/// Video id derived from a file name, used when none is given.
pub fn default_video_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "video".to_string())
}
