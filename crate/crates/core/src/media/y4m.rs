//! YUV4MPEG2 subset: 8-bit `Cmono` and the `C420` family. Only the luma
//! plane is kept; chroma bytes are consumed and dropped.

use std::io::{BufRead, ErrorKind, Write};

use super::{Fps, Frame, FrameSequence};
use crate::error::{Error, Result};

const SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_TAG: &[u8] = b"FRAME";
const MAX_LINE: usize = 4096;
const MAX_DIM: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Colorspace {
    Mono,
    Yuv420,
}

/// Streaming reader: parses the header eagerly, then yields frames one at a
/// time so only the current frame has to be resident.
pub struct Y4mReader<R> {
    inner: R,
    offset: u64,
    width: usize,
    height: usize,
    fps: Fps,
    colorspace: Colorspace,
    chroma_scratch: Vec<u8>,
}

fn err(offset: u64, message: impl Into<String>) -> Error {
    Error::Y4m {
        offset,
        message: message.into(),
    }
}

impl<R: BufRead> Y4mReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let line = read_line(&mut inner, 0)?
            .ok_or_else(|| err(0, "empty stream, expected YUV4MPEG2 signature"))?;
        if !line.starts_with(SIGNATURE)
            || !(line.len() == SIGNATURE.len() || line[SIGNATURE.len()] == b' ')
        {
            return Err(err(0, "malformed signature, expected YUV4MPEG2"));
        }

        let (mut width, mut height, mut fps) = (None, None, None);
        let mut colorspace = Colorspace::Yuv420;
        // Track each tag's offset so errors point at the offending token.
        let mut pos = SIGNATURE.len() as u64;
        for tok in line[SIGNATURE.len()..].split(|&b| b == b' ') {
            let at = pos;
            pos += tok.len() as u64 + 1;
            if tok.is_empty() {
                continue;
            }
            let value =
                std::str::from_utf8(&tok[1..]).map_err(|_| err(at, "non-ascii header tag"))?;
            match tok[0] {
                b'W' => width = Some(parse_dim(value, at, "W")?),
                b'H' => height = Some(parse_dim(value, at, "H")?),
                b'F' => {
                    let (n, d) = value
                        .split_once(':')
                        .ok_or_else(|| err(at, format!("bad frame rate tag F{value}")))?;
                    let n: u64 = n.parse().map_err(|_| err(at, "bad fps numerator"))?;
                    let d: u64 = d.parse().map_err(|_| err(at, "bad fps denominator"))?;
                    fps = Some(Fps::new(n, d).map_err(|e| err(at, e.to_string()))?);
                }
                b'C' => {
                    colorspace = match value {
                        "mono" => Colorspace::Mono,
                        "420" | "420jpeg" | "420paldv" | "420mpeg2" => Colorspace::Yuv420,
                        other => return Err(err(at, format!("unsupported colorspace C{other}"))),
                    }
                }
                // Interlacing, aspect ratio and extensions do not affect layout.
                b'I' | b'A' | b'X' => {}
                other => return Err(err(at, format!("unknown header tag {:?}", other as char))),
            }
        }
        let header_end = line.len() as u64 + 1;
        let width = width.ok_or_else(|| err(header_end, "missing W tag"))?;
        let height = height.ok_or_else(|| err(header_end, "missing H tag"))?;
        let fps = fps.ok_or_else(|| err(header_end, "missing F tag"))?;

        let chroma = match colorspace {
            Colorspace::Mono => 0,
            Colorspace::Yuv420 => 2 * width.div_ceil(2) * height.div_ceil(2),
        };
        Ok(Y4mReader {
            inner,
            offset: header_end,
            width,
            height,
            fps,
            colorspace,
            chroma_scratch: vec![0; chroma],
        })
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

    pub fn is_mono(&self) -> bool {
        self.colorspace == Colorspace::Mono
    }

    /// Next frame, `Ok(None)` at a clean end of stream.
    pub fn next_frame(&mut self) -> Result<Option<Frame>> {
        let start = self.offset;
        let line = match read_line(&mut self.inner, start)? {
            None => return Ok(None),
            Some(l) => l,
        };
        // FRAME may carry parameters after a space; they are ignored.
        if !line.starts_with(FRAME_TAG)
            || !(line.len() == FRAME_TAG.len() || line[FRAME_TAG.len()] == b' ')
        {
            return Err(err(start, "expected FRAME marker"));
        }
        self.offset += line.len() as u64 + 1;

        let mut luma = vec![0u8; self.width * self.height];
        self.read_payload(&mut luma)?;
        let mut scratch = std::mem::take(&mut self.chroma_scratch);
        let res = self.read_payload(&mut scratch);
        self.chroma_scratch = scratch;
        res?;
        Ok(Some(
            Frame::new(self.width, self.height, luma).expect("buffer sized from header"),
        ))
    }

    fn read_payload(&mut self, buf: &mut [u8]) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(err(
                        self.offset + filled as u64,
                        format!(
                            "truncated frame payload: got {filled} of {} bytes",
                            buf.len()
                        ),
                    ))
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(err(self.offset + filled as u64, e.to_string())),
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }
}

impl<R: BufRead> Iterator for Y4mReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

fn parse_dim(value: &str, at: u64, tag: &str) -> Result<usize> {
    let v: usize = value
        .parse()
        .map_err(|_| err(at, format!("bad {tag} tag {value:?}")))?;
    if v == 0 || v > MAX_DIM {
        return Err(err(at, format!("{tag}{v} out of range")));
    }
    Ok(v)
}

/// Read up to a newline. `None` if the stream is already at EOF.
fn read_line<R: BufRead>(r: &mut R, offset: u64) -> Result<Option<Vec<u8>>> {
    let mut line = Vec::new();
    loop {
        let (done, used) = {
            let buf = match r.fill_buf() {
                Ok(b) => b,
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => return Err(err(offset, e.to_string())),
            };
            if buf.is_empty() {
                if line.is_empty() {
                    return Ok(None);
                }
                return Err(err(offset + line.len() as u64, "unterminated line"));
            }
            match buf.iter().position(|&b| b == b'\n') {
                Some(i) => {
                    line.extend_from_slice(&buf[..i]);
                    (true, i + 1)
                }
                None => {
                    line.extend_from_slice(buf);
                    (false, buf.len())
                }
            }
        };
        r.consume(used);
        if line.len() > MAX_LINE {
            return Err(err(offset, "header line too long"));
        }
        if done {
            return Ok(Some(line));
        }
    }
}

/// Parse a whole stream into memory.
pub fn parse_y4m<R: BufRead>(reader: R) -> Result<FrameSequence> {
    let mut r = Y4mReader::new(reader)?;
    let mut frames = Vec::new();
    while let Some(f) = r.next_frame()? {
        frames.push(f);
    }
    if frames.is_empty() {
        return Err(err(r.offset, "stream contains no frames"));
    }
    FrameSequence::new("video", r.fps, frames)
}

/// Serialize as `Cmono`.
pub fn write_y4m<W: Write>(seq: &FrameSequence, w: &mut W) -> Result<()> {
    let io = |e| Error::io("<y4m output>", e);
    writeln!(
        w,
        "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 Cmono",
        seq.width(),
        seq.height(),
        seq.fps().num(),
        seq.fps().den()
    )
    .map_err(io)?;
    for f in seq.frames() {
        w.write_all(b"FRAME\n").map_err(io)?;
        w.write_all(f.pixels()).map_err(io)?;
    }
    Ok(())
}
