//! Group-fairness auditing: per-group accuracy, generalized least squares of
//! accuracy on log income with a slope F-test, a one-sided Welch t-test for
//! comparing slope populations across training methods, and a synthetic
//! grouped-dataset generator that plants an accuracy-vs-income relationship
//! of tunable strength.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::image::Dataset;
use crate::model::Model;
use crate::rng::{self, gauss};
use crate::stats::{f_survival, t_survival};

/// Per-group audit row: regressor g (log per-capita GDP), image count, and
/// correct-classification count.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRecord {
    pub group_id: usize,
    pub g: f64,
    pub n: usize,
    pub correct: usize,
}

impl GroupRecord {
    /// Group accuracy p = correct / n.
    pub fn p(&self) -> f64 {
        self.correct as f64 / self.n as f64
    }
}

/// GLS slope fit with the slope F-test.
#[derive(Debug, Clone, PartialEq)]
pub struct GlsResult {
    pub beta: f64,
    pub intercept: f64,
    pub f0: f64,
    pub nu1: usize,
    pub nu2: usize,
    pub p_value: f64,
    /// Set when the full model fits exactly (no residual variance to test).
    pub perfect_fit: bool,
}

/// Reading of the per-group error covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// Σ_ii = 1/sqrt(n_i): GLS weights sqrt(n_i) (the reported audit form).
    InvSqrtN,
    /// Σ_ii = 1/n_i: weights n_i (conventional binomial-style weighting,
    /// kept behind a flag for sensitivity analysis).
    InvN,
}

impl CovarianceKind {
    fn weight(&self, n: usize) -> f64 {
        match self {
            CovarianceKind::InvSqrtN => (n as f64).sqrt(),
            CovarianceKind::InvN => n as f64,
        }
    }
}

/// One-sided two-sample comparison result.
#[derive(Debug, Clone, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

/// Alternative hypothesis of [`two_sample_t_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// H1: mean(a) < mean(b).
    ALessThanB,
    /// H1: mean(b) < mean(a).
    BLessThanA,
}

/// A dataset with group assignments plus the group_id -> g regressor map.
#[derive(Debug, Clone)]
pub struct GroupedDataset {
    pub dataset: Dataset,
    pub meta: BTreeMap<usize, f64>,
}

/// Count per-group accuracy. Every example must carry a group id present in
/// `meta`; groups in `meta` with no examples are omitted and counted.
pub fn group_accuracy(
    model: &Model,
    d: &Dataset,
    meta: &BTreeMap<usize, f64>,
) -> Result<(Vec<GroupRecord>, usize)> {
    let group_ids = d
        .group_ids()
        .ok_or_else(|| Error::Parameter("dataset carries no group ids".into()))?;
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (ex, &gid) in d.examples().iter().zip(group_ids) {
        if !meta.contains_key(&gid) {
            return Err(Error::Parameter(format!("group {gid} missing from group metadata")));
        }
        let slot = counts.entry(gid).or_insert((0, 0));
        slot.0 += 1;
        if model.predict(&ex.image)? == ex.label {
            slot.1 += 1;
        }
    }
    let mut records = Vec::with_capacity(counts.len());
    let mut omitted = 0usize;
    for (&gid, &g) in meta {
        match counts.get(&gid) {
            Some(&(n, correct)) => records.push(GroupRecord { group_id: gid, g, n, correct }),
            None => omitted += 1,
        }
    }
    Ok((records, omitted))
}

/// GLS of p on (1, g) with Σ_ii = 1/sqrt(n_i).
pub fn gls_fit(records: &[GroupRecord]) -> Result<GlsResult> {
    gls_fit_weighted(records, CovarianceKind::InvSqrtN)
}

/// GLS with an explicit covariance reading.
pub fn gls_fit_weighted(records: &[GroupRecord], kind: CovarianceKind) -> Result<GlsResult> {
    let m = records.len();
    if m < 2 {
        return Err(Error::Parameter(format!("GLS needs at least 2 groups, got {m}")));
    }
    let mut sw = 0.0;
    let mut sg = 0.0;
    let mut sgg = 0.0;
    let mut sp = 0.0;
    let mut sgp = 0.0;
    for r in records {
        if r.n == 0 {
            return Err(Error::Parameter(format!("group {} has no images", r.group_id)));
        }
        let w = kind.weight(r.n);
        let p = r.p();
        sw += w;
        sg += w * r.g;
        sgg += w * r.g * r.g;
        sp += w * p;
        sgp += w * r.g * p;
    }
    let denom = sw * sgg - sg * sg;
    let g_scale = records.iter().map(|r| r.g.abs()).fold(0.0, f64::max).max(1.0);
    if denom.abs() <= 1e-12 * sw * g_scale * g_scale {
        return Err(Error::Rank("all group regressors are (numerically) equal".into()));
    }
    let beta = (sw * sgp - sg * sp) / denom;
    let intercept = (sgg * sp - sg * sgp) / denom;

    let mut rss_full = 0.0;
    let mut rss_restricted = 0.0;
    let p_bar = sp / sw;
    for r in records {
        let w = kind.weight(r.n);
        let p = r.p();
        let fitted = intercept + beta * r.g;
        rss_full += w * (p - fitted) * (p - fitted);
        rss_restricted += w * (p - p_bar) * (p - p_bar);
    }

    let nu1 = 1usize;
    let nu2 = m.saturating_sub(2);
    let tol = 1e-14 * rss_restricted.max(1.0);
    if rss_full <= tol || nu2 == 0 {
        // exact interpolation: no residual variance, nothing to divide by
        let constant = rss_restricted <= tol;
        return Ok(GlsResult {
            beta,
            intercept,
            f0: if constant { 0.0 } else { f64::INFINITY },
            nu1,
            nu2,
            p_value: if constant { 1.0 } else { 0.0 },
            perfect_fit: true,
        });
    }
    let f0 = ((rss_restricted - rss_full) / (rss_full / nu2 as f64)).max(0.0);
    let p_value = f_survival(f0, nu1, nu2)?;
    Ok(GlsResult { beta, intercept, f0, nu1, nu2, p_value, perfect_fit: false })
}

/// One-sided Welch two-sample t-test on slope populations.
pub fn two_sample_t_test(
    betas_a: &[f64],
    betas_b: &[f64],
    alternative: Alternative,
) -> Result<TTestResult> {
    let (ra, rb) = (betas_a.len(), betas_b.len());
    if ra < 2 || rb < 2 {
        return Err(Error::Parameter(format!(
            "both samples need at least 2 values, got {ra} and {rb}"
        )));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], mu: f64| {
        v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64
    };
    let mean_a = mean(betas_a);
    let mean_b = mean(betas_b);
    let va = var(betas_a, mean_a);
    let vb = var(betas_b, mean_b);
    let sa = va / ra as f64;
    let sb = vb / rb as f64;
    let se2 = sa + sb;
    if se2 == 0.0 {
        if mean_a == mean_b {
            return Err(Error::Numeric(
                "undefined t statistic: zero variance and equal means".into(),
            ));
        }
        // degenerate but directional: report an infinite statistic
        let t = if mean_b > mean_a { f64::INFINITY } else { f64::NEG_INFINITY };
        let t = match alternative {
            Alternative::ALessThanB => t,
            Alternative::BLessThanA => -t,
        };
        let df = (ra + rb - 2) as f64;
        return Ok(TTestResult { t, df, p_value: t_survival(t, df)?, mean_a, mean_b });
    }
    let df = se2 * se2
        / (sa * sa / (ra as f64 - 1.0) + sb * sb / (rb as f64 - 1.0));
    let t = match alternative {
        Alternative::ALessThanB => (mean_b - mean_a) / se2.sqrt(),
        Alternative::BLessThanA => (mean_a - mean_b) / se2.sqrt(),
    };
    Ok(TTestResult { t, df, p_value: t_survival(t, df)?, mean_a, mean_b })
}

/// Partition a dataset into `group_count` groups with log-income values on a
/// grid and power-law-unequal sizes, then corrupt each group with additive
/// Gaussian pixel noise of standard deviation
/// `noise_scale * bias * (g_max - g) / (g_max - g_min)` (clamped), planting
/// lower accuracy in lower-income groups.
pub fn make_grouped_dataset(
    base: &Dataset,
    group_count: usize,
    bias: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<GroupedDataset> {
    if group_count < 3 {
        return Err(Error::Parameter(format!("need at least 3 groups, got {group_count}")));
    }
    if group_count > base.len() {
        return Err(Error::Parameter(format!(
            "{group_count} groups exceed the {} available examples",
            base.len()
        )));
    }
    if noise_scale < 0.0 || bias < 0.0 {
        return Err(Error::Parameter("noise scale and bias must be nonnegative".into()));
    }

    let n = base.len();
    let g_min = 7.0;
    let g_max = 11.5;
    let g_of = |i: usize| g_min + (g_max - g_min) * i as f64 / (group_count - 1) as f64;

    // group sizes grow linearly with income rank (richer groups hold more
    // images, mirroring the imbalance the audit is meant to expose)
    let total_rank: usize = (1..=group_count).sum();
    let mut sizes: Vec<usize> = (0..group_count)
        .map(|i| ((n * (i + 1)) as f64 / total_rank as f64).floor() as usize)
        .collect();
    let mut assigned: usize = sizes.iter().sum();
    let mut i = 0;
    while assigned < n {
        sizes[group_count - 1 - (i % group_count)] += 1;
        assigned += 1;
        i += 1;
    }
    for idx in 0..group_count {
        while sizes[idx] == 0 {
            let largest = (0..group_count).max_by_key(|&j| sizes[j]).expect("non-empty");
            sizes[largest] -= 1;
            sizes[idx] += 1;
        }
    }

    let mut rng = rng::stream(seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);

    let mut group_of = vec![0usize; n];
    let mut cursor = 0;
    for (gid, &size) in sizes.iter().enumerate() {
        for &example_idx in &order[cursor..cursor + size] {
            group_of[example_idx] = gid;
        }
        cursor += size;
    }

    let span = g_max - g_min;
    let mut examples = Vec::with_capacity(n);
    for (idx, ex) in base.examples().iter().enumerate() {
        let g = g_of(group_of[idx]);
        let factor = (bias * (g_max - g) / span).clamp(0.0, 1.0);
        let sd = noise_scale * factor;
        let mut image = ex.image.clone();
        if sd > 0.0 {
            for p in image.pixels_mut() {
                *p = (*p + sd * gauss(&mut rng)).clamp(0.0, 1.0);
            }
        }
        examples.push(crate::image::LabeledExample { image, label: ex.label });
    }

    let dataset = Dataset::new(examples, base.class_count())?.with_group_ids(group_of)?;
    let meta: BTreeMap<usize, f64> = (0..group_count).map(|i| (i, g_of(i))).collect();
    Ok(GroupedDataset { dataset, meta })
}

/// Run the GLS audit for every model in a population.
pub fn audit_population(
    models: &[Model],
    d: &Dataset,
    meta: &BTreeMap<usize, f64>,
) -> Result<Vec<GlsResult>> {
    if models.is_empty() {
        return Err(Error::Parameter("no models to audit".into()));
    }
    models
        .par_iter()
        .map(|m| {
            let (records, _) = group_accuracy(m, d, meta)?;
            gls_fit(&records)
        })
        .collect()
}

/// (q1, median, q3) of a slope sample, linear interpolation between order
/// statistics.
pub fn beta_quartiles(betas: &[f64]) -> (f64, f64, f64) {
    assert!(!betas.is_empty(), "quartiles of an empty sample");
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    (q(0.25), q(0.5), q(0.75))
}

/// Write group records as `group_id,g,n,correct` CSV.
pub fn write_group_records(records: &[GroupRecord], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "group_id,g,n,correct")?;
    for r in records {
        writeln!(f, "{},{},{},{}", r.group_id, sig9(r.g), r.n, r.correct)?;
    }
    Ok(())
}

/// Read group records written by [`write_group_records`].
pub fn read_group_records(path: &Path) -> Result<Vec<GroupRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("group_id,g,n,correct") => {}
        other => return Err(Error::Format(format!("unexpected group header {other:?}"))),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Format(format!("group row {i} has {} fields", parts.len())));
        }
        let parse_err = |what: &str| Error::Format(format!("bad {what} in group row {i}"));
        let record = GroupRecord {
            group_id: parts[0].parse().map_err(|_| parse_err("group_id"))?,
            g: parts[1].parse().map_err(|_| parse_err("g"))?,
            n: parts[2].parse().map_err(|_| parse_err("n"))?,
            correct: parts[3].parse().map_err(|_| parse_err("correct"))?,
        };
        if record.correct > record.n {
            return Err(Error::Format(format!(
                "group row {i}: correct {} exceeds n {}",
                record.correct, record.n
            )));
        }
        records.push(record);
    }
    Ok(records)
}
