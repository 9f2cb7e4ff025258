//! Raw grayscale blob (`.vcdr`).
//!
//! Layout, little-endian:
//!
//! ```text
//! magic "VCDR" | u16 version=1 | u16 width | u16 height | u32 frames
//! | u16 fps_num | u16 fps_den | frames x (width*height) luma bytes
//! ```

use std::io::{ErrorKind, Read, Write};

use super::{Fps, Frame, FrameSequence};
use crate::error::{Error, Result};

pub const BLOB_MAGIC: &[u8; 4] = b"VCDR";
pub const BLOB_HEADER_LEN: usize = 18;
const VERSION: u16 = 1;

pub fn read_blob<R: Read>(mut r: R) -> Result<FrameSequence> {
    let mut header = [0u8; BLOB_HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Blob("truncated header".into()))?;
    if &header[0..4] != BLOB_MAGIC {
        return Err(Error::Blob("bad magic, expected VCDR".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([header[i], header[i + 1]]);
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::Blob(format!("unsupported version {version}")));
    }
    let width = u16_at(6) as usize;
    let height = u16_at(8) as usize;
    let count = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    let fps =
        Fps::new(u16_at(14) as u64, u16_at(16) as u64).map_err(|e| Error::Blob(e.to_string()))?;
    if width == 0 || height == 0 || count == 0 {
        return Err(Error::Blob(format!(
            "degenerate header: {width}x{height}, {count} frames"
        )));
    }
    let mut frames = Vec::with_capacity(count.min(1 << 16));
    for i in 0..count {
        let mut data = vec![0u8; width * height];
        r.read_exact(&mut data).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::Blob(format!("truncated at frame {i} of {count}")),
            _ => Error::Blob(e.to_string()),
        })?;
        frames.push(Frame::new(width, height, data)?);
    }
    FrameSequence::new("video", fps, frames)
}

pub fn write_blob<W: Write>(seq: &FrameSequence, w: &mut W) -> Result<()> {
    let narrow = |v: u64, what: &str| {
        u16::try_from(v).map_err(|_| Error::Blob(format!("{what} {v} does not fit in u16")))
    };
    let width = narrow(seq.width() as u64, "width")?;
    let height = narrow(seq.height() as u64, "height")?;
    let num = narrow(seq.fps().num(), "fps numerator")?;
    let den = narrow(seq.fps().den(), "fps denominator")?;
    let count = u32::try_from(seq.len()).map_err(|_| Error::Blob("too many frames".into()))?;

    let mut header = Vec::with_capacity(BLOB_HEADER_LEN);
    header.extend_from_slice(BLOB_MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&width.to_le_bytes());
    header.extend_from_slice(&height.to_le_bytes());
    header.extend_from_slice(&count.to_le_bytes());
    header.extend_from_slice(&num.to_le_bytes());
    header.extend_from_slice(&den.to_le_bytes());
    let io = |e| Error::io("<blob output>", e);
    w.write_all(&header).map_err(io)?;
    for f in seq.frames() {
        w.write_all(f.pixels()).map_err(io)?;
    }
    Ok(())
}
