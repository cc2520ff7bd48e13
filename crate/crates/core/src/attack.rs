//! Attack procedures: the Hessian-based one-step SSIM attack, one-step and
//! iterative PGD baselines, the penalized iterative perceptual attack, the
//! robust surrogate loss built on it, and success-rate evaluation with and
//! without input-transformation defenses.
//!
//! All attacks are deterministic; batch evaluation parallelizes across images
//! and collects results in index order, so reports do not depend on the
//! worker count.

use rayon::prelude::*;

use crate::cost::{cost_gradient, cost_hessian_at_base, cost_value, ssim, CostFunction, CostKind, SsimConfig, SsimMode};
use crate::defense::Defense;
use crate::error::{Error, Result};
use crate::image::{lp_distance, validate_image, Dataset, Image, LabeledExample, LpNorm};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackMethod {
    SsimOneStep,
    PgdOneStep,
    PgdIterative,
    Perceptual,
}

impl AttackMethod {
    pub fn name(&self) -> &'static str {
        match self {
            AttackMethod::SsimOneStep => "ssim_one_step",
            AttackMethod::PgdOneStep => "pgd_one_step",
            AttackMethod::PgdIterative => "pgd_iterative",
            AttackMethod::Perceptual => "perceptual",
        }
    }
}

/// Attack parameters: step size ε, penalty λ, confidence a, iteration cap N,
/// the ground cost, and the Hessian ridge scale for the one-step method.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    pub method: AttackMethod,
    pub step_size: f64,
    pub penalty: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    pub cost: CostFunction,
    pub hessian_ridge: f64,
}

impl AttackConfig {
    pub fn new(method: AttackMethod) -> Self {
        AttackConfig {
            method,
            step_size: 0.1,
            penalty: 1.0,
            confidence: 0.0,
            max_iterations: 100,
            cost: CostFunction::one_minus_ssim(SsimConfig::windowed()),
            hessian_ridge: 1e-6,
        }
    }

    /// Strict parameter validation, applied at the CLI boundary. Engine entry
    /// points tolerate zero ε or N so limit behavior stays testable.
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::Parameter("step size must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter("iteration count must be at least 1".into()));
        }
        if self.penalty < 0.0 {
            return Err(Error::Parameter("penalty must be nonnegative".into()));
        }
        if self.confidence < 0.0 {
            return Err(Error::Parameter("confidence must be nonnegative".into()));
        }
        if self.method == AttackMethod::SsimOneStep {
            match (self.cost.kind, self.cost.ssim.mode) {
                (CostKind::OneMinusSsim, SsimMode::Global) => {}
                _ => {
                    return Err(Error::Capability(format!(
                        "method {} requires the global one_minus_ssim cost, got {} ({})",
                        self.method.name(),
                        self.cost.kind.name(),
                        match self.cost.ssim.mode {
                            SsimMode::Global => "global",
                            SsimMode::Windowed => "windowed",
                        },
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Distance columns of the attack report. `one_minus_ssim` uses the standard
/// windowed SSIM when the image fits an 11x11 window, global SSIM otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub one_minus_ssim: f64,
}

impl Distances {
    fn zero() -> Self {
        Distances { l1: 0.0, l2: 0.0, linf: 0.0, one_minus_ssim: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct AttackResult {
    pub adversarial: Image,
    pub success: bool,
    pub iterations_used: usize,
    /// `max_{i != y} logits_i - logits_y` at termination.
    pub margin: f64,
    pub distances: Distances,
    /// Set when an iterative attack stopped on a zero gradient.
    pub gradient_vanished: bool,
}

/// Value of the penalized inner maximization at its attack point.
#[derive(Debug, Clone)]
pub struct RobustLossValue {
    pub value: f64,
    pub attack_point: Image,
}

fn margin_of(logits: &[f64], y: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        if i != y && l > best {
            best = l;
        }
    }
    best - logits[y]
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn reporting_ssim(x0: &Image, adv: &Image) -> Result<f64> {
    let cfg = SsimConfig::windowed();
    if x0.height() >= cfg.window_size && x0.width() >= cfg.window_size {
        ssim(x0, adv, &cfg)
    } else {
        ssim(x0, adv, &SsimConfig::global())
    }
}

fn finish(
    model: &Model,
    ex: &LabeledExample,
    adversarial: Image,
    iterations_used: usize,
    gradient_vanished: bool,
) -> Result<AttackResult> {
    let logits = model.forward_logits(&adversarial)?;
    finish_with_logits(ex, adversarial, &logits, iterations_used, gradient_vanished)
}

fn finish_with_logits(
    ex: &LabeledExample,
    adversarial: Image,
    logits: &[f64],
    iterations_used: usize,
    gradient_vanished: bool,
) -> Result<AttackResult> {
    let margin = margin_of(logits, ex.label);
    let mut argmax = 0;
    for (i, &l) in logits.iter().enumerate() {
        if l > logits[argmax] {
            argmax = i;
        }
    }
    let distances = Distances {
        l1: lp_distance(&ex.image, &adversarial, LpNorm::L1)?,
        l2: lp_distance(&ex.image, &adversarial, LpNorm::L2)?,
        linf: lp_distance(&ex.image, &adversarial, LpNorm::LInf)?,
        one_minus_ssim: 1.0 - reporting_ssim(&ex.image, &adversarial)?,
    };
    Ok(AttackResult {
        adversarial,
        success: argmax != ex.label,
        iterations_used,
        margin,
        distances,
        gradient_vanished,
    })
}

/// One normalized-gradient step: `x0 + ε g / ||g||`, clamped.
pub fn pgd_one_step_attack(
    model: &Model,
    ex: &LabeledExample,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    let g = model.input_gradient(&ex.image, ex.label)?;
    let norm = l2_norm(&g);
    if norm == 0.0 {
        return Err(Error::DegenerateGradient("zero loss gradient at the base point".into()));
    }
    let scale = cfg.step_size / norm;
    let pixels: Vec<f64> =
        ex.image.pixels().iter().zip(&g).map(|(x, gi)| x + scale * gi).collect();
    let adv = validate_image(&ex.image.with_pixels(pixels)?)?;
    finish(model, ex, adv, 1, false)
}

/// Hessian-preconditioned one-step attack: solve `(H + μI) Δ = ∇ℓ` at the
/// base point, step ε along `Δ / ||Δ||`, clamp.
pub fn ssim_one_step_attack(
    model: &Model,
    ex: &LabeledExample,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    match (cfg.cost.kind, cfg.cost.ssim.mode) {
        (CostKind::OneMinusSsim, SsimMode::Global) => {}
        // identity-Hessian debug route: H = 2I reduces to the PGD direction
        (CostKind::L2, _) => {}
        _ => {
            return Err(Error::Capability(
                "one-step attack needs the global one_minus_ssim cost (or l2 for debugging)"
                    .into(),
            ))
        }
    }
    let g = model.input_gradient(&ex.image, ex.label)?;
    if l2_norm(&g) == 0.0 {
        return Err(Error::DegenerateGradient("zero loss gradient at the base point".into()));
    }
    let hessian = cost_hessian_at_base(&cfg.cost, &ex.image)?;
    let mut direction = hessian.solve_regularized(&g, cfg.hessian_ridge)?;
    let norm = l2_norm(&direction);
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::Numeric(format!("degenerate Hessian solve (|Δ| = {norm})")));
    }
    for d in direction.iter_mut() {
        *d *= cfg.step_size / norm;
    }
    let pixels: Vec<f64> =
        ex.image.pixels().iter().zip(&direction).map(|(x, d)| x + d).collect();
    let adv = validate_image(&ex.image.with_pixels(pixels)?)?;
    finish(model, ex, adv, 1, false)
}

/// Iterated normalized-gradient ascent with the confidence early stop.
pub fn pgd_iterative_attack(
    model: &Model,
    ex: &LabeledExample,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    let mut x = ex.image.clone();
    for k in 1..=cfg.max_iterations {
        let logits = model.forward_logits(&x)?;
        if margin_of(&logits, ex.label) > cfg.confidence {
            return finish_with_logits(ex, x, &logits, k - 1, false);
        }
        let g = model.input_gradient(&x, ex.label)?;
        let norm = l2_norm(&g);
        if norm == 0.0 {
            return finish(model, ex, x, k - 1, true);
        }
        let scale = cfg.step_size / norm;
        let pixels: Vec<f64> = x.pixels().iter().zip(&g).map(|(xi, gi)| xi + scale * gi).collect();
        x = validate_image(&x.with_pixels(pixels)?)?;
    }
    finish(model, ex, x, cfg.max_iterations, false)
}

/// The iterative perceptual attack: ascend `ℓ - λ c0` with fixed step ε,
/// validating each iterate, stopping once the logit margin exceeds `a`.
pub fn perceptual_attack(
    model: &Model,
    ex: &LabeledExample,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    let mut x_adv = ex.image.clone();
    for k in 1..=cfg.max_iterations {
        let logits = model.forward_logits(&x_adv)?;
        if margin_of(&logits, ex.label) > cfg.confidence {
            return finish_with_logits(ex, x_adv, &logits, k - 1, false);
        }
        let loss_grad = model.input_gradient(&x_adv, ex.label)?;
        let cost_grad = cost_gradient(&cfg.cost, &ex.image, &x_adv)?;
        let mut pixels = x_adv.into_pixels();
        for ((p, gl), gc) in pixels.iter_mut().zip(&loss_grad).zip(&cost_grad) {
            let delta = gl - cfg.penalty * gc;
            if !delta.is_finite() {
                return Err(Error::Numeric(format!("non-finite ascent direction at iteration {k}")));
            }
            *p += cfg.step_size * delta;
        }
        x_adv = validate_image(&ex.image.with_pixels(pixels)?)?;
    }
    finish(model, ex, x_adv, cfg.max_iterations, false)
}

/// Dispatch an attack by the configured method.
pub fn run_attack(model: &Model, ex: &LabeledExample, cfg: &AttackConfig) -> Result<AttackResult> {
    match cfg.method {
        AttackMethod::SsimOneStep => ssim_one_step_attack(model, ex, cfg),
        AttackMethod::PgdOneStep => pgd_one_step_attack(model, ex, cfg),
        AttackMethod::PgdIterative => pgd_iterative_attack(model, ex, cfg),
        AttackMethod::Perceptual => perceptual_attack(model, ex, cfg),
    }
}

/// Robust surrogate loss φ_λ: run the inner maximizer (the perceptual attack)
/// and evaluate `ℓ(θ; x_adv, y) - λ c0(x0, x_adv)`. A lower bound on the
/// true supremum by construction.
pub fn robust_surrogate(
    model: &Model,
    ex: &LabeledExample,
    cfg: &AttackConfig,
) -> Result<RobustLossValue> {
    let result = perceptual_attack(model, ex, cfg)?;
    let loss = model.cross_entropy_loss(&result.adversarial, ex.label)?;
    let penalty = cfg.penalty * cost_value(&cfg.cost, &ex.image, &result.adversarial)?;
    Ok(RobustLossValue { value: loss - penalty, attack_point: result.adversarial })
}

/// Success-rate report over the correctly classified part of a dataset.
#[derive(Debug, Clone)]
pub struct SuccessReport {
    /// Flipped / eligible.
    pub rate: f64,
    /// Number of successful flips.
    pub attacked: usize,
    /// Number of correctly classified examples.
    pub eligible: usize,
    /// Mean distances over the flipped examples.
    pub mean_distances: Distances,
}

/// Indices of examples the model classifies correctly.
pub fn eligible_indices(model: &Model, d: &Dataset) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, ex) in d.examples().iter().enumerate() {
        if model.predict(&ex.image)? == ex.label {
            out.push(i);
        }
    }
    Ok(out)
}

/// Attack every eligible example; results come back as (dataset index,
/// result) pairs in dataset order.
pub fn attack_dataset(
    model: &Model,
    d: &Dataset,
    cfg: &AttackConfig,
) -> Result<Vec<(usize, AttackResult)>> {
    let eligible = eligible_indices(model, d)?;
    if eligible.is_empty() {
        return Err(Error::UndefinedRate("no correctly classified examples to attack".into()));
    }
    eligible
        .par_iter()
        .map(|&i| run_attack(model, &d.examples()[i], cfg).map(|r| (i, r)))
        .collect()
}

fn summarize(results: &[(usize, AttackResult)], eligible: usize) -> SuccessReport {
    let flipped: Vec<&AttackResult> =
        results.iter().filter(|(_, r)| r.success).map(|(_, r)| r).collect();
    let attacked = flipped.len();
    let mean = if flipped.is_empty() {
        Distances::zero()
    } else {
        let k = attacked as f64;
        Distances {
            l1: flipped.iter().map(|r| r.distances.l1).sum::<f64>() / k,
            l2: flipped.iter().map(|r| r.distances.l2).sum::<f64>() / k,
            linf: flipped.iter().map(|r| r.distances.linf).sum::<f64>() / k,
            one_minus_ssim: flipped.iter().map(|r| r.distances.one_minus_ssim).sum::<f64>() / k,
        }
    };
    SuccessReport { rate: attacked as f64 / eligible as f64, attacked, eligible, mean_distances: mean }
}

/// Attack success rate per the report definition: flips over the correctly
/// classified examples, with distance means over the flipped set.
pub fn success_rate(model: &Model, d: &Dataset, cfg: &AttackConfig) -> Result<SuccessReport> {
    let results = attack_dataset(model, d, cfg)?;
    Ok(summarize(&results, results.len()))
}

/// Success rate when each adversarial image passes through `defense` before
/// re-classification.
pub fn defense_success_rate(
    model: &Model,
    d: &Dataset,
    cfg: &AttackConfig,
    defense: Defense,
) -> Result<f64> {
    let results = attack_dataset(model, d, cfg)?;
    defended_rate(model, d, &results, defense)
}

/// Rate under one defense for precomputed attack results.
pub fn defended_rate(
    model: &Model,
    d: &Dataset,
    results: &[(usize, AttackResult)],
    defense: Defense,
) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::UndefinedRate("no attack results to defend".into()));
    }
    let flips: Result<Vec<bool>> = results
        .par_iter()
        .map(|(i, r)| {
            let defended = defense.apply(&r.adversarial)?;
            Ok(model.predict(&defended)? != d.examples()[*i].label)
        })
        .collect();
    let flips = flips?;
    let flipped = flips.iter().filter(|&&f| f).count();
    Ok(flipped as f64 / results.len() as f64)
}

/// Sweep several defenses over one set of attacks (computed once).
pub fn defense_sweep(
    model: &Model,
    d: &Dataset,
    cfg: &AttackConfig,
    defenses: &[Defense],
) -> Result<Vec<(Defense, f64)>> {
    let results = attack_dataset(model, d, cfg)?;
    defenses
        .iter()
        .map(|&def| defended_rate(model, d, &results, def).map(|r| (def, r)))
        .collect()
}
