//! Perceptually constrained adversarial attacks on small image classifiers,
//! distributionally robust training on the resulting adversarial datasets,
//! and statistical auditing of group fairness across model populations.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`image`], [`idx`], [`pgm`], [`defense`] — image values, dataset files,
//!   and the two input-transformation defenses;
//! * [`cost`] — perceptual ground costs (`1 - SSIM`, squared L2) with
//!   analytic gradients and a dense base-point Hessian;
//! * [`model`] — tiny differentiable classifiers and SGD training;
//! * [`attack`] — one-step and iterative attacks, the robust surrogate loss,
//!   and success-rate evaluation with and without defenses;
//! * [`dro`] — adversarial-dataset generation and weighted robust training;
//! * [`fairness`], [`stats`] — grouped accuracy, GLS slope tests, Welch
//!   t-tests, and their special-function kernels;
//! * [`synth`] — a deterministic synthetic digit generator for desk-scale
//!   fixtures.

pub mod attack;
pub mod cost;
pub mod defense;
pub mod dro;
pub mod error;
pub mod fairness;
pub mod fmt;
pub mod idx;
pub mod image;
pub mod model;
pub mod pgm;
pub mod rng;
pub mod stats;
pub mod synth;

pub use attack::{
    defense_success_rate, defense_sweep, perceptual_attack, pgd_iterative_attack, pgd_one_step_attack,
    robust_surrogate, run_attack, ssim_one_step_attack, success_rate, AttackConfig, AttackMethod,
    AttackResult, Distances, RobustLossValue, SuccessReport,
};
pub use cost::{
    cost_gradient, cost_hessian_at_base, cost_value, ssim, CostFunction, CostHessian, CostKind,
    SsimConfig, SsimMode,
};
pub use defense::{bit_depth_reduce, jpeg_like_compress, Defense};
pub use dro::{
    dro_train, generate_robust_dataset, load_robust_dataset, sample_model_population,
    save_robust_dataset, DroConfig, GenOutcome, Provenance, RobustDataset, WeightMode,
    WeightedExample,
};
pub use error::{Error, Result};
pub use fairness::{
    audit_population, beta_quartiles, gls_fit, group_accuracy, make_grouped_dataset,
    two_sample_t_test, Alternative, CovarianceKind, GlsResult, GroupRecord, GroupedDataset,
    TTestResult,
};
pub use idx::{load_idx, save_idx};
pub use image::{lp_distance, validate_image, Dataset, Image, LabeledExample, LpNorm};
pub use model::{sgd_train, Architecture, Model, TrainConfig};
pub use pgm::write_pgm;
pub use stats::{f_survival, ln_gamma, reg_inc_beta, t_survival};
pub use synth::synthetic_digits;
