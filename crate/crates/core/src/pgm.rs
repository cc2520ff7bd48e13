//! Binary PGM (P5, 8-bit) export for attacked images.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::idx::pixel_to_byte;
use crate::image::Image;

/// Write `image` as an 8-bit binary PGM file. Pixels are quantized here;
/// the in-memory pipeline stays continuous.
pub fn write_pgm(image: &Image, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(32 + image.len());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", image.width(), image.height()).as_bytes());
    out.extend(image.pixels().iter().map(|&v| pixel_to_byte(v)));
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_payload_are_exact() {
        let img = Image::new(2, 3, vec![0.0, 0.5, 1.0, 0.25, 0.75, 1.5]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        write_pgm(&img, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 128, 255, 64, 191, 255]);
    }
}
