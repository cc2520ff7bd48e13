//! Input-transformation defenses: bit depth reduction and a JPEG-style
//! quantization round-trip.
//!
//! The JPEG defense runs the lossy part of baseline JPEG — 8x8 block DCT,
//! division by the scaled luminance quantization table, rounding, and the
//! inverse transform — without entropy coding, since only the quantization
//! affects the pixels a defended classifier sees.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::image::{validate_image, Image};

/// Which defense transform to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defense {
    /// Quantize intensities to `bits` bits (1..=8).
    BitDepth(u32),
    /// JPEG-style quantization round-trip at `quality` (1..=100).
    Jpeg(u32),
}

impl Defense {
    pub fn apply(&self, x: &Image) -> Result<Image> {
        match *self {
            Defense::BitDepth(bits) => bit_depth_reduce(x, bits),
            Defense::Jpeg(quality) => jpeg_like_compress(x, quality),
        }
    }

    /// The sweep parameter (bits or quality).
    pub fn parameter(&self) -> u32 {
        match *self {
            Defense::BitDepth(b) => b,
            Defense::Jpeg(q) => q,
        }
    }
}

/// Map each pixel onto the `2^bits`-level grid.
pub fn bit_depth_reduce(x: &Image, bits: u32) -> Result<Image> {
    if !(1..=8).contains(&bits) {
        return Err(Error::Parameter(format!("bit depth {bits} outside [1, 8]")));
    }
    let levels = ((1u32 << bits) - 1) as f64;
    let mut out = x.clone();
    for v in out.pixels_mut() {
        *v = (*v * levels).round() / levels;
    }
    Ok(out)
}

/// Standard JPEG luminance quantization table (row-major).
const LUMA_QUANT: [f64; 64] = [
    16.0, 11.0, 10.0, 16.0, 24.0, 40.0, 51.0, 61.0, //
    12.0, 12.0, 14.0, 19.0, 26.0, 58.0, 60.0, 55.0, //
    14.0, 13.0, 16.0, 24.0, 40.0, 57.0, 69.0, 56.0, //
    14.0, 17.0, 22.0, 29.0, 51.0, 87.0, 80.0, 62.0, //
    18.0, 22.0, 37.0, 56.0, 68.0, 109.0, 103.0, 77.0, //
    24.0, 35.0, 55.0, 64.0, 81.0, 104.0, 113.0, 92.0, //
    49.0, 64.0, 78.0, 87.0, 103.0, 121.0, 120.0, 101.0, //
    72.0, 92.0, 95.0, 98.0, 112.0, 100.0, 103.0, 99.0,
];

/// Orthonormal 8-point DCT-II basis, `basis[u][j]`.
fn dct_basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; 8]; 8];
        for (u, row) in b.iter_mut().enumerate() {
            let alpha = if u == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
            for (j, v) in row.iter_mut().enumerate() {
                *v = alpha
                    * ((2.0 * j as f64 + 1.0) * u as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        b
    })
}

/// Forward 2-D orthonormal DCT-II of one 8x8 block.
pub(crate) fn dct2_8x8(block: &[f64; 64]) -> [f64; 64] {
    let basis = dct_basis();
    let mut tmp = [0.0; 64];
    // rows
    for r in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for j in 0..8 {
                acc += basis[u][j] * block[r * 8 + j];
            }
            tmp[r * 8 + u] = acc;
        }
    }
    // columns
    let mut out = [0.0; 64];
    for c in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for j in 0..8 {
                acc += basis[u][j] * tmp[j * 8 + c];
            }
            out[u * 8 + c] = acc;
        }
    }
    out
}

/// Inverse of [`dct2_8x8`].
pub(crate) fn idct2_8x8(coeffs: &[f64; 64]) -> [f64; 64] {
    let basis = dct_basis();
    let mut tmp = [0.0; 64];
    for c in 0..8 {
        for j in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += basis[u][j] * coeffs[u * 8 + c];
            }
            tmp[j * 8 + c] = acc;
        }
    }
    let mut out = [0.0; 64];
    for r in 0..8 {
        for j in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += basis[u][j] * tmp[r * 8 + u];
            }
            out[r * 8 + j] = acc;
        }
    }
    out
}

/// Effective quantization steps for `quality`, in unit-interval pixel units.
fn quant_steps(quality: u32) -> [f64; 64] {
    let q = quality as f64;
    let scale = if quality < 50 { 50.0 / q } else { 2.0 - q / 50.0 };
    let mut steps = [0.0; 64];
    for (s, &base) in steps.iter_mut().zip(LUMA_QUANT.iter()) {
        // table entries live in byte units; pixels here live in [0, 1]
        *s = (base * scale).max(1.0) / 255.0;
    }
    steps
}

/// Grayscale JPEG-style quantization round-trip at the given quality.
pub fn jpeg_like_compress(x: &Image, quality: u32) -> Result<Image> {
    if !(1..=100).contains(&quality) {
        return Err(Error::Parameter(format!("quality {quality} outside [1, 100]")));
    }
    let steps = quant_steps(quality);
    let (h, w) = (x.height(), x.width());
    let ph = h.div_ceil(8) * 8;
    let pw = w.div_ceil(8) * 8;

    // pad by edge replication
    let mut padded = vec![0.0; ph * pw];
    for r in 0..ph {
        let sr = r.min(h - 1);
        for c in 0..pw {
            padded[r * pw + c] = x.get(sr, c.min(w - 1));
        }
    }

    for br in (0..ph).step_by(8) {
        for bc in (0..pw).step_by(8) {
            let mut block = [0.0; 64];
            for r in 0..8 {
                for c in 0..8 {
                    block[r * 8 + c] = padded[(br + r) * pw + bc + c] - 0.5;
                }
            }
            let mut coeffs = dct2_8x8(&block);
            for (v, s) in coeffs.iter_mut().zip(steps.iter()) {
                *v = (*v / s).round() * s;
            }
            let rec = idct2_8x8(&coeffs);
            for r in 0..8 {
                for c in 0..8 {
                    padded[(br + r) * pw + bc + c] = rec[r * 8 + c] + 0.5;
                }
            }
        }
    }

    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        out.extend_from_slice(&padded[r * pw..r * pw + w]);
    }
    validate_image(&Image::new(h, w, out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = crate::rng::root(seed);
        Image::new(h, w, (0..h * w).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    #[test]
    fn one_bit_thresholds_at_half() {
        let x = Image::new(1, 2, vec![0.6, 0.4]).unwrap();
        let y = bit_depth_reduce(&x, 1).unwrap();
        assert_eq!(y.pixels(), &[1.0, 0.0]);
    }

    #[test]
    fn eight_bits_fix_byte_multiples() {
        let pixels: Vec<f64> = (0..=255).map(|b| b as f64 / 255.0).collect();
        let x = Image::new(16, 16, pixels.clone()).unwrap();
        let y = bit_depth_reduce(&x, 8).unwrap();
        for (a, b) in y.pixels().iter().zip(pixels.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn four_bits_lands_on_the_16_level_grid() {
        let x = random_image(10, 10, 5);
        let y = bit_depth_reduce(&x, 4).unwrap();
        for &v in y.pixels() {
            let scaled = v * 15.0;
            assert!((scaled - scaled.round()).abs() < 1e-9, "off-grid value {v}");
        }
    }

    #[test]
    fn bit_depth_output_has_at_most_2_to_b_levels() {
        for bits in 1..=8u32 {
            let x = random_image(16, 16, 60 + bits as u64);
            let y = bit_depth_reduce(&x, bits).unwrap();
            let mut seen: Vec<u64> = y.pixels().iter().map(|v| v.to_bits()).collect();
            seen.sort_unstable();
            seen.dedup();
            assert!(seen.len() <= 1 << bits);
        }
    }

    #[test]
    fn bit_depth_rejects_out_of_range() {
        let x = Image::zeros(2, 2);
        assert!(bit_depth_reduce(&x, 0).is_err());
        assert!(bit_depth_reduce(&x, 9).is_err());
    }

    #[test]
    fn dct_round_trip_is_orthonormal() {
        let mut rng = crate::rng::root(17);
        let mut block = [0.0; 64];
        for v in block.iter_mut() {
            *v = rng.gen::<f64>() - 0.5;
        }
        let rec = idct2_8x8(&dct2_8x8(&block));
        for (a, b) in rec.iter().zip(block.iter()) {
            assert!((a - b).abs() <= 1e-9);
        }
        // Parseval: energy preserved
        let e1: f64 = block.iter().map(|v| v * v).sum();
        let e2: f64 = dct2_8x8(&block).iter().map(|v| v * v).sum();
        assert!((e1 - e2).abs() < 1e-9);
    }

    #[test]
    fn quality_100_is_nearly_lossless() {
        let x = random_image(28, 28, 9);
        let y = jpeg_like_compress(&x, 100).unwrap();
        let max_change = x
            .pixels()
            .iter()
            .zip(y.pixels())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_change <= 0.02, "max change {max_change}");
    }

    #[test]
    fn lower_quality_changes_pixels_more() {
        let x = random_image(28, 28, 10);
        let mean_change = |q: u32| {
            let y = jpeg_like_compress(&x, q).unwrap();
            x.pixels().iter().zip(y.pixels()).map(|(a, b)| (a - b).abs()).sum::<f64>()
                / x.len() as f64
        };
        assert!(mean_change(10) > mean_change(90));
    }

    #[test]
    fn jpeg_is_deterministic() {
        let x = random_image(28, 28, 11);
        let a = jpeg_like_compress(&x, 35).unwrap();
        let b = jpeg_like_compress(&x, 35).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn jpeg_handles_non_multiple_of_8() {
        let x = random_image(13, 22, 12);
        let y = jpeg_like_compress(&x, 50).unwrap();
        assert_eq!(y.height(), 13);
        assert_eq!(y.width(), 22);
        assert!(y.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn jpeg_rejects_bad_quality() {
        let x = Image::zeros(8, 8);
        assert!(jpeg_like_compress(&x, 0).is_err());
        assert!(jpeg_like_compress(&x, 101).is_err());
    }
}
