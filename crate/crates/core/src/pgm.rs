//! 8-bit binary PGM (`P5`) encoding.

use std::path::Path;

use crate::error::{Error, Result};

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel count does not match dimensions");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Returns `(width, height, pixels)`; pixels are rescaled to 0..=255 when the
/// file's maximum value is below 255.
pub fn decode(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let err = |pos: usize, message: &str| {
        let line = 1 + bytes[..pos.min(bytes.len())].iter().filter(|&&b| b == b'\n').count();
        let column = 1 + bytes[..pos.min(bytes.len())]
            .iter()
            .rev()
            .take_while(|&&b| b != b'\n')
            .count();
        Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: message.to_string(),
        }
    };
    if !bytes.starts_with(b"P5") {
        return Err(err(0, "missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(err(pos, "expected a number in header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(start, "header number out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(err(pos, "only 8-bit PGM is supported"));
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(err(pos, "expected whitespace after header"));
    }
    pos += 1;
    let data = &bytes[pos..];
    if data.len() != width * height {
        return Err(err(
            pos,
            &format!("expected {} pixel bytes, found {}", width * height, data.len()),
        ));
    }
    let pixels = if maxval == 255 {
        data.to_vec()
    } else {
        data.iter().map(|&p| ((p as usize * 255) / maxval) as u8).collect()
    };
    Ok((width, height, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_exact() {
        let bytes = encode(2, 1, &[0, 255]);
        assert_eq!(bytes, b"P5\n2 1\n255\n\x00\xff");
    }

    #[test]
    fn decode_with_comment() {
        let bytes = b"P5\n# made by hand\n3 1\n255\n\x00\x80\xff";
        let (w, h, px) = decode(bytes, Path::new("x.pgm")).unwrap();
        assert_eq!((w, h), (3, 1));
        assert_eq!(px, vec![0, 128, 255]);
    }

    #[test]
    fn decode_errors() {
        assert!(decode(b"P2\n1 1\n255\n0", Path::new("a")).is_err());
        assert!(decode(b"P5\n2 2\n255\n\x00", Path::new("a")).is_err());
        assert!(decode(b"P5\n2 2\n65535\n", Path::new("a")).is_err());
    }
}
