//! `PMAP` binary format for probability maps and label masks.
//!
//! Layout: magic `PMAP`, then `u32` LE height, width and channel count, then
//! `c × h × w` `f32` LE values, channel-planar and row-major.

use std::io::{Read, Write};
use std::path::Path;

use super::{LabelMasks, ProbabilityMaps};
use crate::error::{Error, Result};
use crate::imaging::ImageF;

pub const MAGIC: &[u8; 4] = b"PMAP";

pub fn write(img: &ImageF, mut out: impl Write) -> Result<()> {
    out.write_all(MAGIC)?;
    for v in [img.height(), img.width(), img.channels()] {
        out.write_all(&(v as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(img.data().len() * 4);
    for v in img.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read(mut input: impl Read) -> Result<ImageF> {
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::BadMagic { expected: "PMAP" })?;
    if &magic != MAGIC {
        return Err(Error::BadMagic { expected: "PMAP" });
    }
    let mut header = [0u8; 12];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated PMAP header: {e}")))?;
    let field = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (h, w, c) = (field(0), field(1), field(2));
    let n = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(c))
        .ok_or_else(|| Error::Format("PMAP dimensions overflow".into()))?;
    let mut bytes = vec![0u8; n * 4];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated PMAP payload: {e}")))?;
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ImageF::from_vec(w, h, c, data)
}

pub fn write_file(img: &ImageF, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write(img, std::io::BufWriter::new(f))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<ImageF> {
    let f = std::fs::File::open(path)?;
    read(std::io::BufReader::new(f))
}

pub fn read_maps(path: impl AsRef<Path>) -> Result<ProbabilityMaps> {
    ProbabilityMaps::new(read_file(path)?)
}

pub fn read_masks(path: impl AsRef<Path>) -> Result<LabelMasks> {
    LabelMasks::new(read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let img = ImageF::from_fn(3, 2, 6, |x, y, c| (x + 10 * y + 100 * c) as f32);
        let mut buf = Vec::new();
        write(&img, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"PMAP");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 6);
        assert_eq!(buf.len(), 16 + 36 * 4);
        // Second value is pixel (1, 0) of channel 0.
        assert_eq!(f32::from_le_bytes(buf[20..24].try_into().unwrap()), 1.0);
    }

    #[test]
    fn bad_magic_and_truncation() {
        assert!(matches!(read(&b"PMAQ\0\0\0\0"[..]), Err(Error::BadMagic { .. })));
        let mut buf = Vec::new();
        write(&ImageF::new(2, 2, 6), &mut buf).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(matches!(read(&buf[..]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn roundtrip(w in 1usize..8, h in 1usize..8, seed in any::<u32>()) {
            let img = ImageF::from_fn(w, h, 6, |x, y, c| ((x * 31 + y * 7 + c + seed as usize) % 97) as f32 / 96.0);
            let mut buf = Vec::new();
            write(&img, &mut buf).unwrap();
            prop_assert_eq!(read(&buf[..]).unwrap(), img);
        }
    }
}
