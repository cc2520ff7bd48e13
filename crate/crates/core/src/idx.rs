//! IDX (MNIST container) ingestion and emission.
//!
//! Image files start with big-endian magic 2051 followed by count, rows, and
//! cols; label files start with magic 2049 followed by count. Pixels are
//! unsigned bytes scaled by 1/255 on load and quantized back on save.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Dataset, Image, LabeledExample};

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;

/// Classes in an MNIST-style label file.
pub const IDX_CLASS_COUNT: usize = 10;

fn read_u32_be(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Format(format!("truncated header while reading {what}")));
    }
    Ok(u32::from_be_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]]))
}

/// Load a dataset from an IDX image/label file pair.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img_bytes = fs::read(images_path)?;
    let lbl_bytes = fs::read(labels_path)?;

    let magic = read_u32_be(&img_bytes, 0, "image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic {magic} in {} (expected {IMAGE_MAGIC})",
            images_path.display()
        )));
    }
    let count = read_u32_be(&img_bytes, 4, "image count")? as usize;
    let rows = read_u32_be(&img_bytes, 8, "rows")? as usize;
    let cols = read_u32_be(&img_bytes, 12, "cols")? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("degenerate image dimensions {rows}x{cols}")));
    }
    let pixel_bytes = &img_bytes[16..];
    if pixel_bytes.len() != count * rows * cols {
        return Err(Error::Format(format!(
            "image payload holds {} bytes, header promises {}",
            pixel_bytes.len(),
            count * rows * cols
        )));
    }

    let magic = read_u32_be(&lbl_bytes, 0, "label magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic {magic} in {} (expected {LABEL_MAGIC})",
            labels_path.display()
        )));
    }
    let label_count = read_u32_be(&lbl_bytes, 4, "label count")? as usize;
    let labels = &lbl_bytes[8..];
    if labels.len() != label_count {
        return Err(Error::Format(format!(
            "label payload holds {} bytes, header promises {label_count}",
            labels.len()
        )));
    }
    if label_count != count {
        return Err(Error::Format(format!(
            "count mismatch: {count} images vs {label_count} labels"
        )));
    }

    let mut examples = Vec::with_capacity(count);
    for i in 0..count {
        let start = i * rows * cols;
        let pixels: Vec<f64> =
            pixel_bytes[start..start + rows * cols].iter().map(|&b| b as f64 / 255.0).collect();
        let label = labels[i] as usize;
        if label >= IDX_CLASS_COUNT {
            return Err(Error::Format(format!("label {label} of example {i} exceeds 9")));
        }
        examples.push(LabeledExample { image: Image::new(rows, cols, pixels)?, label });
    }
    Dataset::new(examples, IDX_CLASS_COUNT)
}

/// Quantize a unit-interval pixel to its byte value.
pub fn pixel_to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Save a dataset as an IDX image/label file pair.
pub fn save_idx(dataset: &Dataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let (rows, cols) = match dataset.examples().first() {
        Some(ex) => (ex.image.height(), ex.image.width()),
        None => return Err(Error::Parameter("cannot save an empty dataset".into())),
    };
    let mut img = Vec::with_capacity(16 + dataset.len() * rows * cols);
    img.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    img.extend_from_slice(&(dataset.len() as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    let mut lbl = Vec::with_capacity(8 + dataset.len());
    lbl.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lbl.extend_from_slice(&(dataset.len() as u32).to_be_bytes());
    for ex in dataset.examples() {
        img.extend(ex.image.pixels().iter().map(|&v| pixel_to_byte(v)));
        lbl.push(ex.label as u8);
    }
    fs::File::create(images_path)?.write_all(&img)?;
    fs::File::create(labels_path)?.write_all(&lbl)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_fixture(dir: &Path, count: usize, rows: usize, cols: usize) -> (Vec<u8>, std::path::PathBuf, std::path::PathBuf) {
        let mut bytes = Vec::new();
        for i in 0..count * rows * cols {
            bytes.push((i * 37 % 256) as u8);
        }
        let mut img = Vec::new();
        img.extend_from_slice(&2051u32.to_be_bytes());
        img.extend_from_slice(&(count as u32).to_be_bytes());
        img.extend_from_slice(&(rows as u32).to_be_bytes());
        img.extend_from_slice(&(cols as u32).to_be_bytes());
        img.extend_from_slice(&bytes);
        let mut lbl = Vec::new();
        lbl.extend_from_slice(&2049u32.to_be_bytes());
        lbl.extend_from_slice(&(count as u32).to_be_bytes());
        lbl.extend((0..count).map(|i| (i % 10) as u8));
        let ip = dir.join("images.idx");
        let lp = dir.join("labels.idx");
        fs::write(&ip, &img).unwrap();
        fs::write(&lp, &lbl).unwrap();
        (bytes, ip, lp)
    }

    #[test]
    fn loads_hand_built_fixture_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let (bytes, ip, lp) = write_fixture(dir.path(), 10, 4, 3);
        let d = load_idx(&ip, &lp).unwrap();
        assert_eq!(d.len(), 10);
        assert_eq!(d.class_count(), 10);
        for (i, ex) in d.examples().iter().enumerate() {
            assert_eq!(ex.label, i % 10);
            for (j, &p) in ex.image.pixels().iter().enumerate() {
                let expect = bytes[i * 12 + j] as f64 / 255.0;
                assert_eq!(p, expect);
            }
        }
    }

    #[test]
    fn rejects_swapped_magic() {
        let dir = tempfile::tempdir().unwrap();
        let (_, ip, lp) = write_fixture(dir.path(), 3, 2, 2);
        // label file passed where images are expected
        let err = load_idx(&lp, &ip).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn rejects_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (_, ip, _) = write_fixture(dir.path(), 3, 2, 2);
        let mut lbl = Vec::new();
        lbl.extend_from_slice(&2049u32.to_be_bytes());
        lbl.extend_from_slice(&2u32.to_be_bytes());
        lbl.extend_from_slice(&[0, 1]);
        let lp = dir.path().join("short.idx");
        fs::write(&lp, &lbl).unwrap();
        let err = load_idx(&ip, &lp).unwrap_err();
        assert!(err.to_string().contains("count mismatch"), "{err}");
    }

    #[test]
    fn save_then_load_round_trips_byte_values() {
        let dir = tempfile::tempdir().unwrap();
        let (_, ip, lp) = write_fixture(dir.path(), 6, 5, 5);
        let d = load_idx(&ip, &lp).unwrap();
        let ip2 = dir.path().join("resaved.images.idx");
        let lp2 = dir.path().join("resaved.labels.idx");
        save_idx(&d, &ip2, &lp2).unwrap();
        assert_eq!(fs::read(&ip).unwrap(), fs::read(&ip2).unwrap());
        assert_eq!(fs::read(&lp).unwrap(), fs::read(&lp2).unwrap());
    }
}
