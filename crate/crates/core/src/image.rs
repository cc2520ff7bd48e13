//! Grayscale images, labeled datasets, pixel validation, and Lp distances.
//!
//! Pixels are `f64` intensities stored row-major. Images that cross a module
//! boundary (loaded, attacked, exported) hold values in `[0, 1]`; intermediate
//! buffers inside optimizers may leave that range until re-validated.

use crate::error::{Error, Result};

/// A single-channel image with pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!("empty image {height}x{width}")));
        }
        if pixels.len() != height * width {
            return Err(Error::Dimension(format!(
                "pixel count {} does not match {height}x{width}",
                pixels.len()
            )));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self { height, width, pixels: vec![0.0; height * width] }
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        Self { height, width, pixels: vec![value; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Pixel count.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Rebuild an image of this shape from a raw pixel buffer.
    pub fn with_pixels(&self, pixels: Vec<f64>) -> Result<Image> {
        Image::new(self.height, self.width, pixels)
    }
}

/// An image paired with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub image: Image,
    pub label: usize,
}

/// An ordered collection of labeled examples, optionally grouped.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    class_count: usize,
    group_ids: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>, class_count: usize) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::Parameter("class_count must be positive".into()));
        }
        if let Some(first) = examples.first() {
            let (h, w) = (first.image.height(), first.image.width());
            for (i, ex) in examples.iter().enumerate() {
                if ex.image.height() != h || ex.image.width() != w {
                    return Err(Error::Dimension(format!(
                        "example {i} is {}x{}, expected {h}x{w}",
                        ex.image.height(),
                        ex.image.width()
                    )));
                }
                if ex.label >= class_count {
                    return Err(Error::Parameter(format!(
                        "label {} of example {i} is out of range (C={class_count})",
                        ex.label
                    )));
                }
            }
        }
        Ok(Self { examples, class_count, group_ids: None })
    }

    /// Attach one group id per example.
    pub fn with_group_ids(mut self, group_ids: Vec<usize>) -> Result<Self> {
        if group_ids.len() != self.examples.len() {
            return Err(Error::Dimension(format!(
                "{} group ids for {} examples",
                group_ids.len(),
                self.examples.len()
            )));
        }
        self.group_ids = Some(group_ids);
        Ok(self)
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn group_ids(&self) -> Option<&[usize]> {
        self.group_ids.as_deref()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// New dataset holding the examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut examples = Vec::with_capacity(indices.len());
        let mut groups = self.group_ids.as_ref().map(|_| Vec::with_capacity(indices.len()));
        for &i in indices {
            let ex = self
                .examples
                .get(i)
                .ok_or_else(|| Error::Parameter(format!("subset index {i} out of range")))?;
            examples.push(ex.clone());
            if let (Some(gs), Some(all)) = (groups.as_mut(), self.group_ids.as_ref()) {
                gs.push(all[i]);
            }
        }
        let mut d = Dataset::new(examples, self.class_count)?;
        if let Some(gs) = groups {
            d = d.with_group_ids(gs)?;
        }
        Ok(d)
    }
}

/// Clamp every pixel to `[0, 1]`. Rejects non-finite pixels. Idempotent.
pub fn validate_image(x: &Image) -> Result<Image> {
    let mut out = x.clone();
    for v in out.pixels_mut() {
        if !v.is_finite() {
            return Err(Error::Numeric("non-finite pixel value".into()));
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Norm order for pixel-difference distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpNorm {
    L1,
    L2,
    LInf,
}

/// Lp norm of the pixel difference between two images of equal shape.
pub fn lp_distance(x: &Image, y: &Image, p: LpNorm) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            x.height(),
            x.width(),
            y.height(),
            y.width()
        )));
    }
    let diff = x.pixels().iter().zip(y.pixels()).map(|(a, b)| a - b);
    Ok(match p {
        LpNorm::L1 => diff.map(f64::abs).sum(),
        LpNorm::L2 => diff.map(|d| d * d).sum::<f64>().sqrt(),
        LpNorm::LInf => diff.map(f64::abs).fold(0.0, f64::max),
    })
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
    fn validate_clamps_and_is_idempotent() {
        let x = Image::new(1, 2, vec![1.3, -0.2]).unwrap();
        let v = validate_image(&x).unwrap();
        assert_eq!(v.pixels(), &[1.0, 0.0]);

        let in_range = random_image(5, 4, 3);
        assert_eq!(validate_image(&in_range).unwrap(), in_range);

        let mut perturbed = random_image(6, 6, 4);
        for (i, p) in perturbed.pixels_mut().iter_mut().enumerate() {
            *p += if i % 2 == 0 { 0.4 } else { -0.4 };
        }
        let once = validate_image(&perturbed).unwrap();
        let twice = validate_image(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn validate_rejects_non_finite() {
        let x = Image::new(1, 2, vec![0.5, f64::NAN]).unwrap();
        assert!(matches!(validate_image(&x), Err(Error::Numeric(_))));
    }

    #[test]
    fn lp_distance_trivial_cases() {
        let x = random_image(4, 4, 8);
        for p in [LpNorm::L1, LpNorm::L2, LpNorm::LInf] {
            assert_eq!(lp_distance(&x, &x, p).unwrap(), 0.0);
        }
        let mut y = x.clone();
        y.set(2, 1, x.get(2, 1) + 0.5);
        for p in [LpNorm::L1, LpNorm::L2, LpNorm::LInf] {
            assert!((lp_distance(&x, &y, p).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn lp_distance_matches_loop_oracle() {
        let x = random_image(9, 7, 21);
        let y = random_image(9, 7, 22);
        let mut l1 = 0.0;
        let mut l2sq = 0.0;
        let mut linf: f64 = 0.0;
        for i in 0..x.len() {
            let d = (x.pixels()[i] - y.pixels()[i]).abs();
            l1 += d;
            l2sq += d * d;
            linf = linf.max(d);
        }
        assert!((lp_distance(&x, &y, LpNorm::L1).unwrap() - l1).abs() < 1e-12);
        assert!((lp_distance(&x, &y, LpNorm::L2).unwrap() - l2sq.sqrt()).abs() < 1e-12);
        assert!((lp_distance(&x, &y, LpNorm::LInf).unwrap() - linf).abs() < 1e-12);
    }

    #[test]
    fn lp_distance_symmetry_and_triangle_inequality() {
        for seed in 0..20u64 {
            let x = random_image(5, 5, 100 + seed);
            let y = random_image(5, 5, 200 + seed);
            let z = random_image(5, 5, 300 + seed);
            for p in [LpNorm::L1, LpNorm::L2, LpNorm::LInf] {
                let xy = lp_distance(&x, &y, p).unwrap();
                let yx = lp_distance(&y, &x, p).unwrap();
                assert_eq!(xy, yx);
                let xz = lp_distance(&x, &z, p).unwrap();
                let zy = lp_distance(&z, &y, p).unwrap();
                assert!(xy <= xz + zy + 1e-9);
            }
        }
    }

    #[test]
    fn lp_distance_rejects_shape_mismatch() {
        let x = random_image(4, 4, 1);
        let y = random_image(4, 5, 2);
        assert!(matches!(lp_distance(&x, &y, LpNorm::L2), Err(Error::Dimension(_))));
    }

    #[test]
    fn dataset_validates_labels_and_shapes() {
        let img = Image::zeros(2, 2);
        let ok = Dataset::new(
            vec![LabeledExample { image: img.clone(), label: 1 }],
            2,
        );
        assert!(ok.is_ok());
        let bad_label = Dataset::new(vec![LabeledExample { image: img.clone(), label: 2 }], 2);
        assert!(matches!(bad_label, Err(Error::Parameter(_))));
        let bad_shape = Dataset::new(
            vec![
                LabeledExample { image: img, label: 0 },
                LabeledExample { image: Image::zeros(2, 3), label: 0 },
            ],
            2,
        );
        assert!(matches!(bad_shape, Err(Error::Dimension(_))));
    }
}
