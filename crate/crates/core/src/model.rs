//! Small differentiable classifiers with cross-entropy loss, exposing
//! input-gradients (for attacks) and parameter-gradients (for training).
//!
//! Two architectures, both with tanh hidden activations so gradient checks
//! stay clean:
//!   * `Mlp`: n -> 128 -> C
//!   * `Convnet`: one 5x5 convolution with 8 channels, tanh, 2x2 max-pool,
//!     dense -> C
//!
//! Parameters live in one flat vector with a fixed layout; everything here is
//! deterministic given the seed, independent of thread count.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{Dataset, Image};
use crate::rng::{self, Stream};

const MLP_HIDDEN: usize = 128;
const CONV_CHANNELS: usize = 8;
const CONV_KERNEL: usize = 5;
const POOL: usize = 2;

const CHECKPOINT_MAGIC: &[u8; 8] = b"PADVMDL1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Mlp,
    Convnet,
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Mlp => "mlp",
            Architecture::Convnet => "convnet",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Architecture::Mlp => 0,
            Architecture::Convnet => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Architecture::Mlp),
            1 => Ok(Architecture::Convnet),
            other => Err(Error::Format(format!("unknown architecture tag {other}"))),
        }
    }
}

/// Shapes derived from the input size, fixed per architecture.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    class_count: usize,
    // convnet only
    conv_h: usize,
    conv_w: usize,
    pool_h: usize,
    pool_w: usize,
    flat: usize,
}

impl Layout {
    fn for_model(arch: Architecture, h: usize, w: usize, class_count: usize) -> Result<Layout> {
        let n = h * w;
        match arch {
            Architecture::Mlp => Ok(Layout { n, class_count, conv_h: 0, conv_w: 0, pool_h: 0, pool_w: 0, flat: 0 }),
            Architecture::Convnet => {
                if h < CONV_KERNEL + 1 || w < CONV_KERNEL + 1 {
                    return Err(Error::Dimension(format!(
                        "convnet needs at least {0}x{0} inputs, got {h}x{w}",
                        CONV_KERNEL + 1
                    )));
                }
                let conv_h = h - CONV_KERNEL + 1;
                let conv_w = w - CONV_KERNEL + 1;
                let pool_h = conv_h / POOL;
                let pool_w = conv_w / POOL;
                let flat = CONV_CHANNELS * pool_h * pool_w;
                Ok(Layout { n, class_count, conv_h, conv_w, pool_h, pool_w, flat })
            }
        }
    }

    fn param_count(&self, arch: Architecture) -> usize {
        match arch {
            Architecture::Mlp => {
                MLP_HIDDEN * self.n + MLP_HIDDEN + self.class_count * MLP_HIDDEN + self.class_count
            }
            Architecture::Convnet => {
                CONV_CHANNELS * CONV_KERNEL * CONV_KERNEL
                    + CONV_CHANNELS
                    + self.class_count * self.flat
                    + self.class_count
            }
        }
    }
}

/// A classifier: architecture, input shape, and flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: Architecture,
    input_height: usize,
    input_width: usize,
    class_count: usize,
    params: Vec<f64>,
}

/// Settings for [`sgd_train`]. The seed controls both initialization and
/// minibatch shuffling.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Parameter("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be positive".into()));
        }
        Ok(())
    }
}

impl Model {
    /// A model with every weight and bias zero.
    pub fn zeroed(arch: Architecture, height: usize, width: usize, class_count: usize) -> Result<Model> {
        if class_count == 0 {
            return Err(Error::Parameter("class_count must be positive".into()));
        }
        let layout = Layout::for_model(arch, height, width, class_count)?;
        Ok(Model {
            arch,
            input_height: height,
            input_width: width,
            class_count,
            params: vec![0.0; layout.param_count(arch)],
        })
    }

    /// Fresh parameters drawn uniformly from ±1/sqrt(fan_in), layer by layer.
    pub fn seeded(
        arch: Architecture,
        height: usize,
        width: usize,
        class_count: usize,
        seed: u64,
    ) -> Result<Model> {
        let mut rng = rng::stream(seed, 0);
        Model::init_random(arch, height, width, class_count, &mut rng)
    }

    fn init_random(
        arch: Architecture,
        height: usize,
        width: usize,
        class_count: usize,
        rng: &mut Stream,
    ) -> Result<Model> {
        let mut model = Model::zeroed(arch, height, width, class_count)?;
        let layout = model.layout();
        let mut draw = |params: &mut [f64], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in params {
                *p = rng.gen_range(-bound..bound);
            }
        };
        match arch {
            Architecture::Mlp => {
                let n = layout.n;
                let (l1, rest) = model.params.split_at_mut(MLP_HIDDEN * n + MLP_HIDDEN);
                draw(l1, n);
                draw(rest, MLP_HIDDEN);
            }
            Architecture::Convnet => {
                let conv_len = CONV_CHANNELS * CONV_KERNEL * CONV_KERNEL + CONV_CHANNELS;
                let (l1, rest) = model.params.split_at_mut(conv_len);
                draw(l1, CONV_KERNEL * CONV_KERNEL);
                draw(rest, layout.flat);
            }
        }
        Ok(model)
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn input_height(&self) -> usize {
        self.input_height
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn layout(&self) -> Layout {
        Layout::for_model(self.arch, self.input_height, self.input_width, self.class_count)
            .expect("layout validated at construction")
    }

    fn check_input(&self, x: &Image) -> Result<()> {
        if x.height() != self.input_height || x.width() != self.input_width {
            return Err(Error::Dimension(format!(
                "input {}x{} does not match model {}x{}",
                x.height(),
                x.width(),
                self.input_height,
                self.input_width
            )));
        }
        Ok(())
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.class_count {
            return Err(Error::Parameter(format!(
                "label {y} out of range (C={})",
                self.class_count
            )));
        }
        Ok(())
    }

    /// Pre-softmax class scores.
    pub fn forward_logits(&self, x: &Image) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x.pixels()).logits)
    }

    fn forward(&self, x: &[f64]) -> Activations {
        let layout = self.layout();
        match self.arch {
            Architecture::Mlp => {
                let n = layout.n;
                let w1 = &self.params[..MLP_HIDDEN * n];
                let b1 = &self.params[MLP_HIDDEN * n..MLP_HIDDEN * n + MLP_HIDDEN];
                let off = MLP_HIDDEN * n + MLP_HIDDEN;
                let w2 = &self.params[off..off + self.class_count * MLP_HIDDEN];
                let b2 = &self.params[off + self.class_count * MLP_HIDDEN..];

                let mut hidden = vec![0.0; MLP_HIDDEN];
                for (j, h) in hidden.iter_mut().enumerate() {
                    let row = &w1[j * n..(j + 1) * n];
                    let mut acc = b1[j];
                    for (wi, xi) in row.iter().zip(x) {
                        acc += wi * xi;
                    }
                    *h = acc.tanh();
                }
                let mut logits = vec![0.0; self.class_count];
                for (c, l) in logits.iter_mut().enumerate() {
                    let row = &w2[c * MLP_HIDDEN..(c + 1) * MLP_HIDDEN];
                    let mut acc = b2[c];
                    for (wi, hi) in row.iter().zip(&hidden) {
                        acc += wi * hi;
                    }
                    *l = acc;
                }
                Activations { hidden, pool: Vec::new(), pool_argmax: Vec::new(), logits }
            }
            Architecture::Convnet => {
                let (ch, kk) = (CONV_CHANNELS, CONV_KERNEL);
                let wc = &self.params[..ch * kk * kk];
                let bc = &self.params[ch * kk * kk..ch * kk * kk + ch];
                let off = ch * kk * kk + ch;
                let wd = &self.params[off..off + self.class_count * layout.flat];
                let bd = &self.params[off + self.class_count * layout.flat..];

                let (oh, ow) = (layout.conv_h, layout.conv_w);
                let mut act = vec![0.0; ch * oh * ow];
                for c in 0..ch {
                    let filter = &wc[c * kk * kk..(c + 1) * kk * kk];
                    for r in 0..oh {
                        for col in 0..ow {
                            let mut acc = bc[c];
                            for kr in 0..kk {
                                let in_row = &x[(r + kr) * self.input_width + col..];
                                let f_row = &filter[kr * kk..(kr + 1) * kk];
                                for (f, v) in f_row.iter().zip(in_row) {
                                    acc += f * v;
                                }
                            }
                            act[(c * oh + r) * ow + col] = acc.tanh();
                        }
                    }
                }

                let (ph, pw) = (layout.pool_h, layout.pool_w);
                let mut pool = vec![0.0; layout.flat];
                let mut pool_argmax = vec![0usize; layout.flat];
                for c in 0..ch {
                    for pr in 0..ph {
                        for pc in 0..pw {
                            let mut best = f64::NEG_INFINITY;
                            let mut best_idx = 0;
                            for dr in 0..POOL {
                                for dc in 0..POOL {
                                    let idx = (c * oh + pr * POOL + dr) * ow + pc * POOL + dc;
                                    // ties keep the first maximal position
                                    if act[idx] > best {
                                        best = act[idx];
                                        best_idx = idx;
                                    }
                                }
                            }
                            let f = (c * ph + pr) * pw + pc;
                            pool[f] = best;
                            pool_argmax[f] = best_idx;
                        }
                    }
                }

                let mut logits = vec![0.0; self.class_count];
                for (cls, l) in logits.iter_mut().enumerate() {
                    let row = &wd[cls * layout.flat..(cls + 1) * layout.flat];
                    let mut acc = bd[cls];
                    for (wi, pi) in row.iter().zip(&pool) {
                        acc += wi * pi;
                    }
                    *l = acc;
                }
                Activations { hidden: act, pool, pool_argmax, logits }
            }
        }
    }

    /// `-log softmax(logits)[y]`, stabilized by log-sum-exp.
    pub fn cross_entropy_loss(&self, x: &Image, y: usize) -> Result<f64> {
        self.check_input(x)?;
        self.check_label(y)?;
        let logits = self.forward(x.pixels()).logits;
        Ok(log_sum_exp(&logits) - logits[y])
    }

    /// Gradient of the loss with respect to the input pixels.
    pub fn input_gradient(&self, x: &Image, y: usize) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.check_label(y)?;
        let acts = self.forward(x.pixels());
        Ok(self.backward(x.pixels(), y, &acts, GradTarget::Input).1)
    }

    /// Gradient of the loss with respect to the parameter vector.
    pub fn param_gradient(&self, x: &Image, y: usize) -> Result<Vec<f64>> {
        Ok(self.loss_and_param_gradient(x, y)?.1)
    }

    /// Loss and parameter gradient in one pass.
    pub fn loss_and_param_gradient(&self, x: &Image, y: usize) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        self.check_label(y)?;
        let acts = self.forward(x.pixels());
        let loss = log_sum_exp(&acts.logits) - acts.logits[y];
        let (grad, _) = self.backward(x.pixels(), y, &acts, GradTarget::Params);
        Ok((loss, grad))
    }

    fn backward(
        &self,
        x: &[f64],
        y: usize,
        acts: &Activations,
        target: GradTarget,
    ) -> (Vec<f64>, Vec<f64>) {
        let layout = self.layout();
        // d loss / d logits = softmax - onehot(y)
        let lse = log_sum_exp(&acts.logits);
        let mut d_logits: Vec<f64> = acts.logits.iter().map(|l| (l - lse).exp()).collect();
        d_logits[y] -= 1.0;

        let want_params = matches!(target, GradTarget::Params);
        let mut d_params = if want_params { vec![0.0; self.params.len()] } else { Vec::new() };
        let mut d_input = if want_params { Vec::new() } else { vec![0.0; layout.n] };

        match self.arch {
            Architecture::Mlp => {
                let n = layout.n;
                let off2 = MLP_HIDDEN * n + MLP_HIDDEN;
                let w1 = &self.params[..MLP_HIDDEN * n];
                let w2 = &self.params[off2..off2 + self.class_count * MLP_HIDDEN];

                let mut d_hidden = vec![0.0; MLP_HIDDEN];
                for (c, &dl) in d_logits.iter().enumerate() {
                    let row = &w2[c * MLP_HIDDEN..(c + 1) * MLP_HIDDEN];
                    for (dh, wi) in d_hidden.iter_mut().zip(row) {
                        *dh += wi * dl;
                    }
                    if want_params {
                        let d_w2 = &mut d_params[off2 + c * MLP_HIDDEN..off2 + (c + 1) * MLP_HIDDEN];
                        for (dw, hi) in d_w2.iter_mut().zip(&acts.hidden) {
                            *dw += dl * hi;
                        }
                        d_params[off2 + self.class_count * MLP_HIDDEN + c] += dl;
                    }
                }
                for (j, dh) in d_hidden.iter_mut().enumerate() {
                    let a = acts.hidden[j];
                    *dh *= 1.0 - a * a; // tanh'
                    if want_params {
                        d_params[MLP_HIDDEN * n + j] += *dh;
                        let d_w1 = &mut d_params[j * n..(j + 1) * n];
                        for (dw, xi) in d_w1.iter_mut().zip(x) {
                            *dw += *dh * xi;
                        }
                    } else {
                        let row = &w1[j * n..(j + 1) * n];
                        for (di, wi) in d_input.iter_mut().zip(row) {
                            *di += *dh * wi;
                        }
                    }
                }
            }
            Architecture::Convnet => {
                let (ch, kk) = (CONV_CHANNELS, CONV_KERNEL);
                let off2 = ch * kk * kk + ch;
                let wc = &self.params[..ch * kk * kk];
                let wd = &self.params[off2..off2 + self.class_count * layout.flat];
                let (oh, ow) = (layout.conv_h, layout.conv_w);

                let mut d_pool = vec![0.0; layout.flat];
                for (cls, &dl) in d_logits.iter().enumerate() {
                    let row = &wd[cls * layout.flat..(cls + 1) * layout.flat];
                    for (dp, wi) in d_pool.iter_mut().zip(row) {
                        *dp += wi * dl;
                    }
                    if want_params {
                        let d_wd =
                            &mut d_params[off2 + cls * layout.flat..off2 + (cls + 1) * layout.flat];
                        for (dw, pi) in d_wd.iter_mut().zip(&acts.pool) {
                            *dw += dl * pi;
                        }
                        d_params[off2 + self.class_count * layout.flat + cls] += dl;
                    }
                }

                // route through the pooling argmax, then through tanh
                let mut d_act = vec![0.0; ch * oh * ow];
                for (f, &dp) in d_pool.iter().enumerate() {
                    d_act[acts.pool_argmax[f]] += dp;
                }
                for (da, a) in d_act.iter_mut().zip(&acts.hidden) {
                    *da *= 1.0 - a * a;
                }

                for c in 0..ch {
                    let filter = &wc[c * kk * kk..(c + 1) * kk * kk];
                    for r in 0..oh {
                        for col in 0..ow {
                            let da = d_act[(c * oh + r) * ow + col];
                            if da == 0.0 {
                                continue;
                            }
                            for kr in 0..kk {
                                for kc in 0..kk {
                                    let xi = x[(r + kr) * self.input_width + col + kc];
                                    if want_params {
                                        d_params[c * kk * kk + kr * kk + kc] += da * xi;
                                    } else {
                                        d_input[(r + kr) * self.input_width + col + kc] +=
                                            da * filter[kr * kk + kc];
                                    }
                                }
                            }
                            if want_params {
                                d_params[ch * kk * kk + c] += da;
                            }
                        }
                    }
                }
            }
        }
        (d_params, d_input)
    }

    /// Class with the highest logit; ties go to the smallest index.
    pub fn predict(&self, x: &Image) -> Result<usize> {
        let logits = self.forward_logits(x)?;
        let mut best = 0;
        for (i, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Fraction of examples classified correctly.
    pub fn accuracy(&self, d: &Dataset) -> Result<f64> {
        if d.is_empty() {
            return Err(Error::Parameter("accuracy of an empty dataset".into()));
        }
        let mut correct = 0usize;
        for ex in d.examples() {
            if self.predict(&ex.image)? == ex.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / d.len() as f64)
    }

    /// Mean cross-entropy loss over a dataset.
    pub fn mean_loss(&self, d: &Dataset) -> Result<f64> {
        if d.is_empty() {
            return Err(Error::Parameter("mean loss of an empty dataset".into()));
        }
        let mut total = 0.0;
        for ex in d.examples() {
            total += self.cross_entropy_loss(&ex.image, ex.label)?;
        }
        Ok(total / d.len() as f64)
    }

    /// Versioned binary checkpoint: magic, architecture tag, input shape,
    /// class count, parameter count, then little-endian f64 parameters.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(8 + 1 + 12 + 8 + self.params.len() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.push(self.arch.tag());
        out.extend_from_slice(&(self.input_height as u32).to_le_bytes());
        out.extend_from_slice(&(self.input_width as u32).to_le_bytes());
        out.extend_from_slice(&(self.class_count as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Model> {
        let bytes = fs::read(path)?;
        if bytes.len() < 29 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Format(format!("{} is not a model checkpoint", path.display())));
        }
        let arch = Architecture::from_tag(bytes[8])?;
        let rd_u32 = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let height = rd_u32(9);
        let width = rd_u32(13);
        let class_count = rd_u32(17);
        let count = u64::from_le_bytes(bytes[21..29].try_into().unwrap()) as usize;
        let layout = Layout::for_model(arch, height, width, class_count)?;
        if count != layout.param_count(arch) {
            return Err(Error::Format(format!(
                "checkpoint holds {count} parameters, layout expects {}",
                layout.param_count(arch)
            )));
        }
        if bytes.len() != 29 + 8 * count {
            return Err(Error::Format("checkpoint payload truncated".into()));
        }
        let mut params = Vec::with_capacity(count);
        for i in 0..count {
            let o = 29 + 8 * i;
            let v = f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Format(format!("non-finite parameter at index {i}")));
            }
            params.push(v);
        }
        let mut model = Model::zeroed(arch, height, width, class_count)?;
        model.params = params;
        Ok(model)
    }
}

enum GradTarget {
    Input,
    Params,
}

struct Activations {
    /// MLP hidden activations, or convnet post-tanh feature maps.
    hidden: Vec<f64>,
    pool: Vec<f64>,
    pool_argmax: Vec<usize>,
    logits: Vec<f64>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Minibatch SGD from a seeded initialization. The input model only supplies
/// the architecture and shapes; its parameters are re-drawn from `cfg.seed`.
pub fn sgd_train(template: &Model, d: &Dataset, cfg: &TrainConfig) -> Result<Model> {
    cfg.validate()?;
    if d.is_empty() {
        return Err(Error::Parameter("cannot train on an empty dataset".into()));
    }
    let mut rng = rng::stream(cfg.seed, 0);
    let mut model = Model::init_random(
        template.arch,
        template.input_height,
        template.input_width,
        template.class_count,
        &mut rng,
    )?;
    let mut indices: Vec<usize> = (0..d.len()).collect();
    let mut grad_sum = vec![0.0; model.param_count()];
    for _ in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(cfg.batch_size) {
            grad_sum.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let ex = &d.examples()[i];
                let (_, g) = model.loss_and_param_gradient(&ex.image, ex.label)?;
                for (acc, gi) in grad_sum.iter_mut().zip(&g) {
                    *acc += gi;
                }
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for (p, g) in model.params.iter_mut().zip(&grad_sum) {
                *p -= scale * g;
            }
        }
    }
    Ok(model)
}
