//! Binary PGM (P5, maxval 255).

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::representation::GrayFrame;

pub fn write_pgm<W: Write>(mut sink: W, frame: &GrayFrame) -> Result<()> {
    let wrap = |e| Error::io("writing PGM", e);
    write!(sink, "P5\n{} {}\n255\n", frame.width(), frame.height()).map_err(wrap)?;
    sink.write_all(frame.pixels.as_slice()).map_err(wrap)?;
    sink.flush().map_err(wrap)
}

pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let mut buf = Vec::with_capacity(frame.width() * frame.height() + 16);
    write_pgm(&mut buf, frame).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_pgm<R: Read>(mut source: R) -> Result<GrayFrame> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(|e| Error::io("reading PGM", e))?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayFrame> {
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Result<String> {
        loop {
            match bytes.get(*pos) {
                Some(b'#') => {
                    while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                        *pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => *pos += 1,
                Some(_) => break,
                None => return Err(Error::Parse { offset: *pos as u64, message: "truncated PGM header".into() }),
            }
        }
        let start = *pos;
        while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            *pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let bad = |offset: usize, message: &str| Error::Parse { offset: offset as u64, message: message.into() };
    if token(&mut pos)? != "P5" {
        return Err(bad(0, "not a binary PGM (P5)"));
    }
    let num = |pos: &mut usize| -> Result<usize> {
        let at = *pos;
        token(pos)?.parse::<usize>().map_err(|_| bad(at, "bad PGM header number"))
    };
    let width = num(&mut pos)?;
    let height = num(&mut pos)?;
    let maxval = num(&mut pos)?;
    if maxval != 255 {
        return Err(bad(pos, "only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    let raster = bytes.get(pos..pos + n).ok_or_else(|| bad(pos, "truncated PGM raster"))?;
    Ok(GrayFrame::new(Grid::from_vec(width, height, raster.to_vec())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let frame = GrayFrame::new(Grid::from_vec(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap());
        let bytes = encode_pgm(&frame);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(bytes.len(), 11 + 6);
        assert_eq!(decode_pgm(&bytes).unwrap(), frame);
    }

    #[test]
    fn tolerates_comments_and_rejects_garbage() {
        let bytes = b"P5\n# made by hand\n2 1\n255\n\x07\x08";
        assert_eq!(decode_pgm(bytes).unwrap().pixels.as_slice(), &[7, 8]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }
}
