//! Descriptor store (`.vcds`), little-endian:
//!
//! ```text
//! "VCDS" | u16 version=1 | u16 dim | u32 videos
//! per video: u16 id_len | id (UTF-8) | u8 policy kind | u16 window | u32 frames
//! per frame: u32 frame_index | f64 timestamp | dim x f32
//! ```
//!
//! Flat descriptors are stored as zero vectors and recognized on read.

use std::io::{Read, Write};

use super::{DescriptorSet, FrameDescriptor};
use crate::error::{Error, Result};
use crate::selection::{PolicyKind, SelectionPolicy};

pub const STORE_MAGIC: &[u8; 4] = b"VCDS";
pub const STORE_HEADER_LEN: u64 = 12;
const VERSION: u16 = 1;
const DEFAULT_DIM: usize = 63;

fn store_dim(sets: &[DescriptorSet]) -> usize {
    sets.iter().find_map(|s| s.dim()).unwrap_or(DEFAULT_DIM)
}

/// Exact serialized size in bytes.
pub fn store_size(sets: &[DescriptorSet]) -> u64 {
    let dim = store_dim(sets) as u64;
    STORE_HEADER_LEN
        + sets
            .iter()
            .map(|s| 2 + s.video_id.len() as u64 + 1 + 2 + 4 + s.len() as u64 * (4 + 8 + 4 * dim))
            .sum::<u64>()
}

pub fn write_store<W: Write>(sets: &[DescriptorSet], w: &mut W) -> Result<()> {
    let dim = store_dim(sets);
    let dim16 = u16::try_from(dim).map_err(|_| Error::Store(format!("dim {dim} too large")))?;
    let count = u32::try_from(sets.len()).map_err(|_| Error::Store("too many videos".into()))?;
    let mut buf = Vec::with_capacity(store_size(sets) as usize);
    buf.extend_from_slice(STORE_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&dim16.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    for set in sets {
        set.validate()?;
        let id = set.video_id.as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::Store(format!("video id too long: {}", set.video_id)))?;
        let window = u16::try_from(set.policy.window)
            .map_err(|_| Error::Store(format!("window {} too large", set.policy.window)))?;
        buf.extend_from_slice(&id_len.to_le_bytes());
        buf.extend_from_slice(id);
        buf.push(set.policy.kind.code());
        buf.extend_from_slice(&window.to_le_bytes());
        buf.extend_from_slice(&(set.len() as u32).to_le_bytes());
        for d in &set.descriptors {
            if d.vector.len() != dim {
                return Err(Error::VectorDimension(dim, d.vector.len()));
            }
            let index = u32::try_from(d.frame_index)
                .map_err(|_| Error::Store(format!("frame index {} too large", d.frame_index)))?;
            buf.extend_from_slice(&index.to_le_bytes());
            buf.extend_from_slice(&d.timestamp.to_le_bytes());
            for &v in &d.vector {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    w.write_all(&buf)
        .map_err(|e| Error::io("<descriptor store>", e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Store(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn read_store<R: Read>(mut r: R) -> Result<Vec<DescriptorSet>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io("<descriptor store>", e))?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if c.take(4)? != STORE_MAGIC {
        return Err(Error::Store("bad magic, expected VCDS".into()));
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::Store(format!("unsupported version {version}")));
    }
    let dim = c.u16()? as usize;
    let count = c.u32()?;
    let mut sets = Vec::new();
    for _ in 0..count {
        let id_len = c.u16()? as usize;
        let video_id = std::str::from_utf8(c.take(id_len)?)
            .map_err(|_| Error::Store("video id is not UTF-8".into()))?
            .to_string();
        let code = c.u8()?;
        let kind = PolicyKind::from_code(code)
            .ok_or_else(|| Error::Store(format!("unknown policy kind {code}")))?;
        let window = c.u16()? as usize;
        let frames = c.u32()?;
        let mut descriptors = Vec::new();
        for _ in 0..frames {
            let frame_index = c.u32()? as usize;
            let timestamp = c.f64()?;
            let vector = (0..dim)
                .map(|_| c.f32().map(f64::from))
                .collect::<Result<Vec<_>>>()?;
            let flat = vector.iter().all(|&v| v == 0.0);
            descriptors.push(FrameDescriptor {
                frame_index,
                timestamp,
                vector,
                flat,
            });
        }
        let set = DescriptorSet {
            video_id,
            policy: SelectionPolicy { kind, window },
            descriptors,
        };
        set.validate()?;
        sets.push(set);
    }
    if c.pos != bytes.len() {
        return Err(Error::Store(format!(
            "{} trailing bytes after last video",
            bytes.len() - c.pos
        )));
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_set() -> impl Strategy<Value = DescriptorSet> {
        (
            "[a-z0-9_]{1,12}",
            0u8..3,
            2usize..200,
            proptest::collection::btree_set(0usize..5000, 0..6),
        )
            .prop_flat_map(|(id, kind, window, frames)| {
                let n = frames.len();
                proptest::collection::vec(proptest::collection::vec(-1.0f32..1.0, 63), n).prop_map(
                    move |vecs| {
                        let kind = PolicyKind::from_code(kind).unwrap();
                        let window = if kind == PolicyKind::UniformPerSecond {
                            0
                        } else {
                            window
                        };
                        DescriptorSet {
                            video_id: id.clone(),
                            policy: SelectionPolicy { kind, window },
                            descriptors: frames
                                .iter()
                                .zip(vecs)
                                .map(|(&i, v)| FrameDescriptor {
                                    frame_index: i,
                                    timestamp: i as f64 / 24.0,
                                    vector: v.into_iter().map(f64::from).collect(),
                                    flat: false,
                                })
                                .collect(),
                        }
                    },
                )
            })
    }

    proptest! {
        #[test]
        fn round_trip_and_exact_size(sets in proptest::collection::vec(arb_set(), 0..4)) {
            let mut buf = Vec::new();
            write_store(&sets, &mut buf).unwrap();
            prop_assert_eq!(buf.len() as u64, store_size(&sets));
            let back = read_store(&buf[..]).unwrap();
            prop_assert_eq!(back, sets);
        }
    }

    #[test]
    fn rejects_unknown_version_and_truncation() {
        let set = DescriptorSet {
            video_id: "v".into(),
            policy: SelectionPolicy::uniform(),
            descriptors: vec![FrameDescriptor {
                frame_index: 3,
                timestamp: 0.125,
                vector: vec![0.0; 63],
                flat: true,
            }],
        };
        let mut buf = Vec::new();
        write_store(std::slice::from_ref(&set), &mut buf).unwrap();
        assert_eq!(&buf[..12], b"VCDS\x01\x00\x3f\x00\x01\x00\x00\x00");
        let back = read_store(&buf[..]).unwrap();
        assert!(back[0].descriptors[0].flat);

        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(read_store(&bad[..])
            .unwrap_err()
            .to_string()
            .contains("version"));
        assert!(read_store(&buf[..buf.len() - 3]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_store(&extra[..]).is_err());
    }
}
