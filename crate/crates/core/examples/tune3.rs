// Scratch: characterize perceptual-attack failures on the fixture.

use percadv_core::*;

fn softmax_py(model: &Model, x: &Image, y: usize) -> f64 {
    let logits = model.forward_logits(x).unwrap();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    (logits[y] - m).exp() / z
}

fn main() {
    let train = synthetic_digits(3000, 0.2, 101).unwrap();
    let test = synthetic_digits(1200, 0.2, 202).unwrap();
    let template = Model::zeroed(Architecture::Convnet, 28, 28, 10).unwrap();
    let tcfg = TrainConfig { learning_rate: 0.08, epochs: 2, batch_size: 32, seed: 7 };
    let model = sgd_train(&template, &train, &tcfg).unwrap();
    let eligible = attack::eligible_indices(&model, &test).unwrap();
    let fixture = test.subset(&eligible[..200]).unwrap();
    let cfg = AttackConfig::new(AttackMethod::Perceptual);

    let mut failures = 0;
    for (i, ex) in fixture.examples().iter().enumerate() {
        let res = perceptual_attack(&model, ex, &cfg).unwrap();
        if !res.success {
            failures += 1;
            let py = softmax_py(&model, &ex.image, ex.label);
            let g = model.input_gradient(&ex.image, ex.label).unwrap();
            let gnorm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gc = cost_gradient(&cfg.cost, &ex.image, &res.adversarial).unwrap();
            let gcnorm: f64 = gc.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gl = model.input_gradient(&res.adversarial, ex.label).unwrap();
            let glnorm: f64 = gl.iter().map(|v| v * v).sum::<f64>().sqrt();
            let moved = lp_distance(&ex.image, &res.adversarial, LpNorm::L2).unwrap();
            println!(
                "fail {i}: label {} p_y {py:.5} |g0| {gnorm:.4} final margin {:.3} 1-ssim {:.4} moved {moved:.3} |gl_end| {glnorm:.4} |gc_end| {gcnorm:.4}",
                ex.label, res.margin, res.distances.one_minus_ssim
            );
        }
    }
    println!("failures: {failures}/200");
}
