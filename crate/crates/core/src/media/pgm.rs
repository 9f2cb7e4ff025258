//! Binary PGM (P5, maxval 255) frames and numbered image directories.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Fps, Frame, FrameSequence};
use crate::error::{Error, Result};

pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<Frame> {
    let bad = |message: String| Error::Pgm {
        path: path.to_path_buf(),
        message,
    };
    if !bytes.starts_with(b"P5") {
        return Err(bad("not a binary PGM (P5) file".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and '#' comments may separate header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad header field at byte {start}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad(format!("maxval {maxval} unsupported, only 255")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing whitespace after header".into()));
    }
    pos += 1;
    let need = width * height;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| bad(format!("truncated raster, need {need} bytes")))?;
    Frame::new(width, height, data.to_vec()).map_err(|e| bad(e.to_string()))
}

pub fn write_pgm<W: Write>(frame: &Frame, w: &mut W) -> std::io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", frame.width(), frame.height())?;
    w.write_all(frame.pixels())
}

/// Load `000001.pgm`, `000002.pgm`, ... ordered by the numeric file stem.
/// Gaps in the numbering are allowed; files with other names are ignored.
pub fn load_image_dir(dir: &Path, fps: Fps) -> Result<FrameSequence> {
    let dir_err = |message: String| Error::ImageDir {
        path: dir.to_path_buf(),
        message,
    };
    let mut numbered: Vec<(u64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if stem.is_empty() || !stem.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        if let Ok(n) = stem.parse() {
            numbered.push((n, path));
        }
    }
    if numbered.is_empty() {
        return Err(dir_err("no numbered .pgm files".into()));
    }
    numbered.sort();

    let mut frames: Vec<Frame> = Vec::with_capacity(numbered.len());
    for (_, path) in &numbered {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let frame = parse_pgm(&bytes, path)?;
        if let Some(first) = frames.first() {
            if first.same_shape(&frame).is_err() {
                return Err(dir_err(format!(
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    frame.width(),
                    frame.height(),
                    first.width(),
                    first.height()
                )));
            }
        }
        frames.push(frame);
    }
    let id = super::default_video_id(dir);
    FrameSequence::new(id, fps, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, frame: &Frame) {
        let mut f = std::fs::File::create(dir.join(name)).unwrap();
        write_pgm(frame, &mut f).unwrap();
    }

    #[test]
    fn loads_in_numeric_order() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "000002.pgm", &Frame::filled(2, 2, 2));
        write(tmp.path(), "000001.pgm", &Frame::filled(2, 2, 1));
        write(tmp.path(), "000003.pgm", &Frame::filled(2, 2, 3));
        let seq = load_image_dir(tmp.path(), Fps::integer(24).unwrap()).unwrap();
        let firsts: Vec<u8> = seq.frames().iter().map(|f| f.pixels()[0]).collect();
        assert_eq!(firsts, vec![1, 2, 3]);
    }

    #[test]
    fn gaps_are_allowed() {
        let tmp = tempfile::tempdir().unwrap();
        for i in [1, 2, 4] {
            write(
                tmp.path(),
                &format!("{i:06}.pgm"),
                &Frame::filled(2, 2, i as u8),
            );
        }
        // numeric order, not lexicographic
        write(tmp.path(), "10.pgm", &Frame::filled(2, 2, 10));
        let seq = load_image_dir(tmp.path(), Fps::integer(1).unwrap()).unwrap();
        let firsts: Vec<u8> = seq.frames().iter().map(|f| f.pixels()[0]).collect();
        assert_eq!(firsts, vec![1, 2, 4, 10]);
    }

    #[test]
    fn mixed_dimensions_name_the_file() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "000001.pgm", &Frame::filled(2, 2, 0));
        write(tmp.path(), "000002.pgm", &Frame::filled(4, 4, 0));
        let err = load_image_dir(tmp.path(), Fps::integer(1).unwrap()).unwrap_err();
        assert!(err.to_string().contains("000002.pgm"), "{err}");
    }

    #[test]
    fn empty_dir_and_non_p5() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(load_image_dir(tmp.path(), Fps::integer(1).unwrap()).is_err());
        std::fs::write(tmp.path().join("000001.pgm"), b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
        let err = load_image_dir(tmp.path(), Fps::integer(1).unwrap()).unwrap_err();
        assert!(err.to_string().contains("P5"), "{err}");
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x07\x08";
        let f = parse_pgm(bytes, Path::new("x.pgm")).unwrap();
        assert_eq!(f.pixels(), &[7, 8]);
        assert!(parse_pgm(b"P5 2 1 65535\n\0\0\0\0", Path::new("x.pgm")).is_err());
    }
}
