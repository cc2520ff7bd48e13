//! Perceptual ground costs: `1 - SSIM` with analytic gradients and a dense
//! Hessian at the base point, plus a squared-L2 cost.
//!
//! SSIM comes in two modes. Global mode computes one set of image-wide
//! statistics (biased, 1/n) and is cheap enough to carry a dense Hessian for
//! the one-step attack. Windowed mode averages per-window SSIM over all valid
//! centers of a Gaussian-weighted window, which is the perceptually standard
//! form and the default cost inside the iterative attack.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::image::Image;

/// Largest pixel count for which a dense Hessian is built.
pub const HESSIAN_BUDGET: usize = 4096;

/// Finite-difference step for the Hessian of the analytic gradient.
const HESSIAN_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsimMode {
    /// One set of statistics over the whole image.
    Global,
    /// Mean over Gaussian-weighted windows at every valid center.
    Windowed,
}

/// SSIM stabilizers and window geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimConfig {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub mode: SsimMode,
    pub window_size: usize,
    pub window_sigma: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self::windowed()
    }
}

impl SsimConfig {
    pub fn windowed() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
            mode: SsimMode::Windowed,
            window_size: 11,
            window_sigma: 1.5,
        }
    }

    pub fn global() -> Self {
        Self { mode: SsimMode::Global, ..Self::windowed() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 <= 0.0 || self.k2 <= 0.0 || self.dynamic_range <= 0.0 {
            return Err(Error::Parameter("SSIM constants must be positive".into()));
        }
        if self.mode == SsimMode::Windowed {
            if self.window_size % 2 == 0 || self.window_size == 0 {
                return Err(Error::Parameter(format!(
                    "window size {} must be odd",
                    self.window_size
                )));
            }
            if self.window_sigma <= 0.0 {
                return Err(Error::Parameter("window sigma must be positive".into()));
            }
        }
        Ok(())
    }

    fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range) * (self.k1 * self.dynamic_range)
    }

    fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range) * (self.k2 * self.dynamic_range)
    }
}

/// Which ground cost to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    OneMinusSsim,
    L2,
}

impl CostKind {
    pub fn name(&self) -> &'static str {
        match self {
            CostKind::OneMinusSsim => "one_minus_ssim",
            CostKind::L2 => "l2",
        }
    }
}

/// A perceptual ground cost: kind tag plus SSIM configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    pub kind: CostKind,
    pub ssim: SsimConfig,
}

impl CostFunction {
    pub fn one_minus_ssim(ssim: SsimConfig) -> Self {
        Self { kind: CostKind::OneMinusSsim, ssim }
    }

    pub fn l2() -> Self {
        Self { kind: CostKind::L2, ssim: SsimConfig::default() }
    }
}

fn check_shapes(x: &Image, y: &Image) -> Result<()> {
    if !x.same_shape(y) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            x.height(),
            x.width(),
            y.height(),
            y.width()
        )));
    }
    Ok(())
}

/// Weighted first and second moments of a pixel set.
struct Moments {
    mu_x: f64,
    mu_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

/// One SSIM term and, optionally, its gradient in the second argument.
///
/// `pixels` yields (index, weight) pairs whose weights sum to one.
fn ssim_term(
    x: &[f64],
    y: &[f64],
    pixels: &[(usize, f64)],
    c1: f64,
    c2: f64,
    mut grad: Option<&mut [f64]>,
    grad_scale: f64,
) -> f64 {
    let mut mu_x = 0.0;
    let mut mu_y = 0.0;
    for &(i, w) in pixels {
        mu_x += w * x[i];
        mu_y += w * y[i];
    }
    let mut m = Moments { mu_x, mu_y, var_x: 0.0, var_y: 0.0, cov: 0.0 };
    for &(i, w) in pixels {
        let dx = x[i] - m.mu_x;
        let dy = y[i] - m.mu_y;
        m.var_x += w * dx * dx;
        m.var_y += w * dy * dy;
        m.cov += w * dx * dy;
    }
    let a1 = 2.0 * m.mu_x * m.mu_y + c1;
    let a2 = 2.0 * m.cov + c2;
    let b1 = m.mu_x * m.mu_x + m.mu_y * m.mu_y + c1;
    let b2 = m.var_x + m.var_y + c2;
    let s = (a1 * a2) / (b1 * b2);

    if let Some(g) = grad.as_deref_mut() {
        let inv_b1b2 = 1.0 / (b1 * b2);
        for &(i, w) in pixels {
            let d_num = 2.0 * m.mu_x * a2 + 2.0 * a1 * (x[i] - m.mu_x);
            let d_log_den = 2.0 * m.mu_y / b1 + 2.0 * (y[i] - m.mu_y) / b2;
            g[i] += grad_scale * w * (d_num * inv_b1b2 - s * d_log_den);
        }
    }
    s
}

/// Uniform weights over every pixel (global statistics).
fn global_pixel_weights(n: usize) -> Vec<(usize, f64)> {
    let w = 1.0 / n as f64;
    (0..n).map(|i| (i, w)).collect()
}

/// Normalized Gaussian window weights as (row, col, weight) offsets.
fn gaussian_window(size: usize, sigma: f64) -> Vec<(usize, usize, f64)> {
    let center = (size / 2) as f64;
    let mut weights = Vec::with_capacity(size * size);
    let mut total = 0.0;
    for r in 0..size {
        for c in 0..size {
            let d2 = (r as f64 - center).powi(2) + (c as f64 - center).powi(2);
            let w = (-d2 / (2.0 * sigma * sigma)).exp();
            weights.push((r, c, w));
            total += w;
        }
    }
    for (_, _, w) in weights.iter_mut() {
        *w /= total;
    }
    weights
}

/// SSIM value with an optional gradient accumulator (with respect to `y`).
fn ssim_impl(x: &Image, y: &Image, cfg: &SsimConfig, grad: Option<&mut [f64]>) -> Result<f64> {
    check_shapes(x, y)?;
    cfg.validate()?;
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let xs = x.pixels();
    let ys = y.pixels();
    match cfg.mode {
        SsimMode::Global => {
            let pixels = global_pixel_weights(xs.len());
            Ok(ssim_term(xs, ys, &pixels, c1, c2, grad, 1.0))
        }
        SsimMode::Windowed => {
            let k = cfg.window_size;
            if x.height() < k || x.width() < k {
                return Err(Error::Dimension(format!(
                    "image {}x{} smaller than {k}x{k} window",
                    x.height(),
                    x.width()
                )));
            }
            let window = gaussian_window(k, cfg.window_sigma);
            let centers = (x.height() - k + 1) * (x.width() - k + 1);
            let scale = 1.0 / centers as f64;
            let mut grad = grad;
            let mut total = 0.0;
            let mut pixels = vec![(0usize, 0.0f64); k * k];
            for top in 0..=(x.height() - k) {
                for left in 0..=(x.width() - k) {
                    for (slot, &(r, c, w)) in pixels.iter_mut().zip(window.iter()) {
                        *slot = ((top + r) * x.width() + left + c, w);
                    }
                    total += ssim_term(xs, ys, &pixels, c1, c2, grad.as_deref_mut(), scale);
                }
            }
            Ok(total * scale)
        }
    }
}

/// Structural similarity between two images under `cfg`.
pub fn ssim(x: &Image, y: &Image, cfg: &SsimConfig) -> Result<f64> {
    ssim_impl(x, y, cfg, None)
}

/// Cost value: `1 - ssim` or the squared Euclidean pixel distance.
pub fn cost_value(cost: &CostFunction, x: &Image, y: &Image) -> Result<f64> {
    check_shapes(x, y)?;
    match cost.kind {
        CostKind::OneMinusSsim => Ok(1.0 - ssim(x, y, &cost.ssim)?),
        CostKind::L2 => {
            Ok(x.pixels().iter().zip(y.pixels()).map(|(a, b)| (a - b) * (a - b)).sum())
        }
    }
}

/// Gradient of [`cost_value`] with respect to the second argument.
pub fn cost_gradient(cost: &CostFunction, x: &Image, y: &Image) -> Result<Vec<f64>> {
    check_shapes(x, y)?;
    match cost.kind {
        CostKind::OneMinusSsim => {
            let mut grad = vec![0.0; x.len()];
            ssim_impl(x, y, &cost.ssim, Some(&mut grad))?;
            // d(1 - S)/dy = -dS/dy
            for g in grad.iter_mut() {
                *g = -*g;
            }
            Ok(grad)
        }
        CostKind::L2 => {
            Ok(x.pixels().iter().zip(y.pixels()).map(|(a, b)| 2.0 * (b - a)).collect())
        }
    }
}

/// Dense symmetric Hessian of `y -> cost(x0, y)` at `y = x0`.
#[derive(Debug, Clone)]
pub struct CostHessian {
    matrix: DMatrix<f64>,
    base: Image,
}

impl CostHessian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn base_point(&self) -> &Image {
        &self.base
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(v);
        (&self.matrix * v).as_slice().to_vec()
    }

    /// Solve `(H + mu I) d = rhs` with `mu = ridge_scale * trace(H) / n`.
    pub fn solve_regularized(&self, rhs: &[f64], ridge_scale: f64) -> Result<Vec<f64>> {
        let n = self.n();
        if rhs.len() != n {
            return Err(Error::Dimension(format!("rhs length {} vs n {n}", rhs.len())));
        }
        let mu = ridge_scale * self.trace() / n as f64;
        let mut a = self.matrix.clone();
        for i in 0..n {
            a[(i, i)] += mu;
        }
        let chol = a.cholesky().ok_or_else(|| {
            Error::Numeric(format!("Hessian factorization failed even with ridge {mu:.3e}"))
        })?;
        let sol = chol.solve(&nalgebra::DVector::from_column_slice(rhs));
        Ok(sol.as_slice().to_vec())
    }

    /// Smallest and largest eigenvalue (dense symmetric eigensolve).
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in eig.eigenvalues.iter() {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    /// Dump the matrix as CSV for debugging.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut f = std::fs::File::create(path)?;
        for r in 0..self.n() {
            let row: Vec<String> =
                (0..self.n()).map(|c| crate::fmt::sig9(self.matrix[(r, c)])).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Hessian of the cost in its second argument, evaluated at the base point.
///
/// Supported for the global `1 - SSIM` cost (central differences of the
/// analytic gradient, then symmetrized) and for the L2 cost (exactly `2 I`,
/// kept for identity-direction checks). Windowed SSIM is rejected.
pub fn cost_hessian_at_base(cost: &CostFunction, x0: &Image) -> Result<CostHessian> {
    let n = x0.len();
    if n > HESSIAN_BUDGET {
        return Err(Error::Size(format!("pixel count {n} exceeds Hessian budget {HESSIAN_BUDGET}")));
    }
    match cost.kind {
        CostKind::L2 => {
            let matrix = DMatrix::from_diagonal_element(n, n, 2.0);
            Ok(CostHessian { matrix, base: x0.clone() })
        }
        CostKind::OneMinusSsim => {
            if cost.ssim.mode != SsimMode::Global {
                return Err(Error::Capability(
                    "Hessian is only available for the global SSIM cost".into(),
                ));
            }
            let h = HESSIAN_FD_STEP;
            let mut raw = DMatrix::zeros(n, n);
            let mut probe = x0.clone();
            for j in 0..n {
                let orig = probe.pixels()[j];
                probe.pixels_mut()[j] = orig + h;
                let plus = cost_gradient(cost, x0, &probe)?;
                probe.pixels_mut()[j] = orig - h;
                let minus = cost_gradient(cost, x0, &probe)?;
                probe.pixels_mut()[j] = orig;
                for i in 0..n {
                    raw[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
                }
            }
            let matrix = (&raw + raw.transpose()) * 0.5;
            Ok(CostHessian { matrix, base: x0.clone() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> Image {
        let mut rng = crate::rng::root(seed);
        Image::new(h, w, (0..h * w).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    fn fd_gradient(cost: &CostFunction, x: &Image, y: &Image, h: f64) -> Vec<f64> {
        let mut g = vec![0.0; y.len()];
        let mut probe = y.clone();
        for j in 0..y.len() {
            let orig = probe.pixels()[j];
            probe.pixels_mut()[j] = orig + h;
            let plus = cost_value(cost, x, &probe).unwrap();
            probe.pixels_mut()[j] = orig - h;
            let minus = cost_value(cost, x, &probe).unwrap();
            probe.pixels_mut()[j] = orig;
            g[j] = (plus - minus) / (2.0 * h);
        }
        g
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        diff / norm.max(1e-12)
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        for cfg in [SsimConfig::global(), SsimConfig::windowed()] {
            let x = random_image(12, 12, 1);
            assert!((ssim(&x, &x, &cfg).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ssim_constant_images_closed_form() {
        // x = 0, y = 1, global mode: value is C1 / (1 + C1) with C1 = 1e-4.
        let x = Image::constant(6, 6, 0.0);
        let y = Image::constant(6, 6, 1.0);
        let got = ssim(&x, &y, &SsimConfig::global()).unwrap();
        assert!((got - 9.999000099990001e-5).abs() < 1e-15, "{got}");
        let cost = CostFunction::one_minus_ssim(SsimConfig::global());
        let cv = cost_value(&cost, &x, &y).unwrap();
        assert!((cv - (1.0 - 9.999000099990001e-5)).abs() < 1e-15);
    }

    #[test]
    fn windowed_ssim_matches_per_window_oracle() {
        let cfg = SsimConfig { window_size: 5, ..SsimConfig::windowed() };
        let x = random_image(9, 8, 31);
        let y = random_image(9, 8, 32);
        // Brute-force oracle: extract each window, compute weighted stats in a
        // second, independently written pass.
        let k = cfg.window_size;
        let center = (k / 2) as f64;
        let mut weights = Vec::new();
        let mut wsum = 0.0;
        for r in 0..k {
            for c in 0..k {
                let w = (-((r as f64 - center).powi(2) + (c as f64 - center).powi(2))
                    / (2.0 * cfg.window_sigma * cfg.window_sigma))
                    .exp();
                weights.push(w);
                wsum += w;
            }
        }
        let mut total = 0.0;
        let mut count = 0;
        for top in 0..=(x.height() - k) {
            for left in 0..=(x.width() - k) {
                let mut mx = 0.0;
                let mut my = 0.0;
                let mut vx = 0.0;
                let mut vy = 0.0;
                let mut cov = 0.0;
                for r in 0..k {
                    for c in 0..k {
                        let w = weights[r * k + c] / wsum;
                        mx += w * x.get(top + r, left + c);
                        my += w * y.get(top + r, left + c);
                    }
                }
                for r in 0..k {
                    for c in 0..k {
                        let w = weights[r * k + c] / wsum;
                        let a = x.get(top + r, left + c) - mx;
                        let b = y.get(top + r, left + c) - my;
                        vx += w * a * a;
                        vy += w * b * b;
                        cov += w * a * b;
                    }
                }
                let c1 = 1e-4;
                let c2 = 9e-4;
                total += (2.0 * mx * my + c1) * (2.0 * cov + c2)
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        let oracle = total / count as f64;
        let got = ssim(&x, &y, &cfg).unwrap();
        assert!((got - oracle).abs() <= 1e-10, "{got} vs {oracle}");
    }

    #[test]
    fn cost_value_trivial_cases() {
        let x = random_image(7, 7, 40);
        for cost in [
            CostFunction::one_minus_ssim(SsimConfig::global()),
            CostFunction::l2(),
        ] {
            assert!(cost_value(&cost, &x, &x).unwrap().abs() < 1e-12);
        }
        let mut y = x.clone();
        y.set(3, 3, x.get(3, 3) + 0.5);
        assert!((cost_value(&CostFunction::l2(), &x, &y).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_the_minimum() {
        let x = random_image(10, 10, 50);
        for cfg in [SsimConfig::global(), SsimConfig { window_size: 5, ..SsimConfig::windowed() }] {
            let cost = CostFunction::one_minus_ssim(cfg);
            let g = cost_gradient(&cost, &x, &x).unwrap();
            let norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 1e-10, "norm {norm}");
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for (seed, cfg) in [
            (60u64, SsimConfig::global()),
            (61, SsimConfig { window_size: 5, ..SsimConfig::windowed() }),
        ] {
            let cost = CostFunction::one_minus_ssim(cfg);
            for trial in 0..20 {
                let x = random_image(7, 7, seed * 100 + trial);
                let y = random_image(7, 7, seed * 100 + 50 + trial);
                let analytic = cost_gradient(&cost, &x, &y).unwrap();
                let fd = fd_gradient(&cost, &x, &y, 1e-5);
                let err = rel_err(&analytic, &fd);
                assert!(err <= 1e-4, "trial {trial}: rel err {err}");
            }
        }
    }

    #[test]
    fn l2_gradient_is_exact() {
        let x = random_image(6, 6, 70);
        let y = random_image(6, 6, 71);
        let g = cost_gradient(&CostFunction::l2(), &x, &y).unwrap();
        for i in 0..x.len() {
            let expect = 2.0 * (y.pixels()[i] - x.pixels()[i]);
            assert!((g[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn cost_is_symmetric_and_bounded() {
        let mut rng = crate::rng::root(77);
        for seed in 0..30u64 {
            let x = random_image(16, 16, 500 + seed);
            let y = random_image(16, 16, 600 + seed);
            // nonadversarial pair: a noisy version of x, as produced by
            // perturbation rather than independent sampling
            let noisy = x
                .with_pixels(
                    x.pixels().iter().map(|p| (p + 0.3 * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0)).collect(),
                )
                .unwrap();
            for cost in [
                CostFunction::one_minus_ssim(SsimConfig::global()),
                CostFunction::one_minus_ssim(SsimConfig::windowed()),
                CostFunction::l2(),
            ] {
                let xy = cost_value(&cost, &x, &y).unwrap();
                let yx = cost_value(&cost, &y, &x).unwrap();
                assert!((xy - yx).abs() <= 1e-10);
                if cost.kind == CostKind::OneMinusSsim {
                    // hard bound for any pair
                    assert!((0.0..=2.0).contains(&xy));
                    // perturbation pairs stay in the [0, 1] band
                    let near = cost_value(&cost, &x, &noisy).unwrap();
                    assert!((0.0..=1.0).contains(&near), "{near}");
                }
            }
        }
    }

    #[test]
    fn cost_has_a_unique_minimum() {
        let mut rng = crate::rng::root(80);
        let cost = CostFunction::one_minus_ssim(SsimConfig::global());
        for _ in 0..1000 {
            let x = Image::new(4, 4, (0..16).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let mut y = x.clone();
            let j = rng.gen_range(0..16);
            let delta: f64 = if rng.gen::<bool>() { 1e-3 } else { -1e-3 };
            y.pixels_mut()[j] = (y.pixels()[j] + delta * (1.0 + rng.gen::<f64>())).clamp(-0.5, 1.5);
            if (y.pixels()[j] - x.pixels()[j]).abs() < 1e-3 {
                continue;
            }
            assert!(cost_value(&cost, &x, &y).unwrap() > 0.0);
        }
    }

    #[test]
    fn hessian_is_psd_at_the_base_point() {
        let x0 = random_image(6, 6, 90);
        let cost = CostFunction::one_minus_ssim(SsimConfig::global());
        let hess = cost_hessian_at_base(&cost, &x0).unwrap();
        let (min, max) = hess.eigenvalue_range();
        assert!(max > 0.0);
        assert!(min >= -1e-6 * max, "min {min} max {max}");
        // symmetry after symmetrization is exact
        for i in 0..hess.n() {
            for j in 0..i {
                assert_eq!(hess.entry(i, j), hess.entry(j, i));
            }
        }
    }

    #[test]
    fn hessian_vector_product_matches_second_differences() {
        let x0 = random_image(6, 6, 91);
        let cost = CostFunction::one_minus_ssim(SsimConfig::global());
        let hess = cost_hessian_at_base(&cost, &x0).unwrap();
        let mut rng = crate::rng::root(92);
        for _ in 0..5 {
            let mut v: Vec<f64> = (0..x0.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for a in v.iter_mut() {
                *a /= norm;
            }
            let hv = hess.matvec(&v);
            let vthv: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
            let h = 1e-3;
            let shift = |scale: f64| {
                let pixels: Vec<f64> =
                    x0.pixels().iter().zip(&v).map(|(p, d)| p + scale * d).collect();
                x0.with_pixels(pixels).unwrap()
            };
            let c0 = cost_value(&cost, &x0, &x0).unwrap();
            let cp = cost_value(&cost, &x0, &shift(h)).unwrap();
            let cm = cost_value(&cost, &x0, &shift(-h)).unwrap();
            let second = (cp - 2.0 * c0 + cm) / (h * h);
            let err = (vthv - second).abs() / second.abs().max(1e-12);
            assert!(err <= 1e-3, "vthv {vthv} second {second} err {err}");
        }
    }

    #[test]
    fn l2_hessian_is_twice_identity() {
        let x0 = random_image(4, 4, 93);
        let hess = cost_hessian_at_base(&CostFunction::l2(), &x0).unwrap();
        for i in 0..hess.n() {
            for j in 0..hess.n() {
                let expect = if i == j { 2.0 } else { 0.0 };
                assert_eq!(hess.entry(i, j), expect);
            }
        }
    }

    #[test]
    fn hessian_rejects_windowed_mode_and_oversize_inputs() {
        let x0 = random_image(12, 12, 94);
        let windowed = CostFunction::one_minus_ssim(SsimConfig::windowed());
        assert!(matches!(cost_hessian_at_base(&windowed, &x0), Err(Error::Capability(_))));
        let big = Image::zeros(65, 64);
        let global = CostFunction::one_minus_ssim(SsimConfig::global());
        assert!(matches!(cost_hessian_at_base(&global, &big), Err(Error::Size(_))));
    }

    #[test]
    fn solve_regularized_inverts_the_ridge_system() {
        let x0 = random_image(5, 5, 95);
        let cost = CostFunction::one_minus_ssim(SsimConfig::global());
        let hess = cost_hessian_at_base(&cost, &x0).unwrap();
        let mut rng = crate::rng::root(96);
        let rhs: Vec<f64> = (0..x0.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let ridge = 1e-6;
        let sol = hess.solve_regularized(&rhs, ridge).unwrap();
        let mu = ridge * hess.trace() / hess.n() as f64;
        let back: Vec<f64> = hess
            .matvec(&sol)
            .iter()
            .zip(&sol)
            .map(|(hv, s)| hv + mu * s)
            .collect();
        let err = rel_err(&back, &rhs);
        assert!(err <= 1e-8, "round-trip err {err}");
    }
}
