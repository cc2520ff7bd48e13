//! Deterministic synthetic 28x28 digit images for desk-scale fixtures: glyph
//! bitmaps scaled up, jittered, optionally thickened, blurred, and noised.
//! Classes cycle 0..9 so every prefix of the dataset is balanced.

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{Dataset, Image, LabeledExample};
use crate::rng::{self, gauss};

const SIDE: usize = 28;
const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;
const SCALE: usize = 3;

/// 5x7 digit glyphs, one row per scanline, low bit on the right.
const GLYPHS: [[u8; GLYPH_H]; 10] = [
    [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110], // 0
    [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110], // 1
    [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111], // 2
    [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110], // 3
    [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010], // 4
    [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110], // 5
    [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110], // 6
    [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000], // 7
    [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110], // 8
    [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100], // 9
];

fn blur3(pixels: &[f64]) -> Vec<f64> {
    // separable binomial [1 2 1]/4, zero padding
    let mut tmp = vec![0.0; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            let left = if c > 0 { pixels[r * SIDE + c - 1] } else { 0.0 };
            let right = if c + 1 < SIDE { pixels[r * SIDE + c + 1] } else { 0.0 };
            tmp[r * SIDE + c] = 0.25 * left + 0.5 * pixels[r * SIDE + c] + 0.25 * right;
        }
    }
    let mut out = vec![0.0; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            let up = if r > 0 { tmp[(r - 1) * SIDE + c] } else { 0.0 };
            let down = if r + 1 < SIDE { tmp[(r + 1) * SIDE + c] } else { 0.0 };
            out[r * SIDE + c] = 0.25 * up + 0.5 * tmp[r * SIDE + c] + 0.25 * down;
        }
    }
    out
}

/// Generate `count` labeled digits. Labels cycle through 0..9; `noise_sd` is
/// the additive Gaussian pixel noise after rendering.
pub fn synthetic_digits(count: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if noise_sd < 0.0 {
        return Err(Error::Parameter("noise must be nonnegative".into()));
    }
    let mut rng = rng::stream(seed, 0);
    let mut examples = Vec::with_capacity(count);
    for i in 0..count {
        let label = i % 10;
        let dx = 3 + rng.gen_range(0..8usize);
        let dy = rng.gen_range(0..8usize);
        // wide intensity range: faint digits keep the classifier honest
        let intensity = 0.35 + 0.65 * rng.gen::<f64>();
        let bold = rng.gen_bool(0.3);

        let mut pixels = vec![0.0; SIDE * SIDE];
        for (gr, row_bits) in GLYPHS[label].iter().enumerate() {
            for gc in 0..GLYPH_W {
                if row_bits >> (GLYPH_W - 1 - gc) & 1 == 1 {
                    for rr in 0..SCALE {
                        for cc in 0..SCALE {
                            pixels[(dy + gr * SCALE + rr) * SIDE + dx + gc * SCALE + cc] =
                                intensity;
                        }
                    }
                }
            }
        }
        if bold {
            for r in 0..SIDE {
                for c in (1..SIDE).rev() {
                    pixels[r * SIDE + c] = pixels[r * SIDE + c].max(pixels[r * SIDE + c - 1]);
                }
            }
        }
        let mut pixels = blur3(&pixels);
        if noise_sd > 0.0 {
            for p in pixels.iter_mut() {
                *p = (*p + noise_sd * gauss(&mut rng)).clamp(0.0, 1.0);
            }
        }
        examples.push(LabeledExample { image: Image::new(SIDE, SIDE, pixels)?, label });
    }
    Dataset::new(examples, 10)
}
