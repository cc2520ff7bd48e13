// Scratch: sweep dataset noise / training length for the attack fixture, and
// epsilon for the one-step comparison margin.

use percadv_core::*;

fn main() {
    for (noise, epochs, lr) in [(0.18, 2, 0.08), (0.20, 2, 0.08), (0.22, 3, 0.1), (0.25, 3, 0.1)] {
        let train = synthetic_digits(3000, noise, 101).unwrap();
        let test = synthetic_digits(1200, noise, 202).unwrap();
        let template = Model::zeroed(Architecture::Convnet, 28, 28, 10).unwrap();
        let cfg = TrainConfig { learning_rate: lr, epochs, batch_size: 32, seed: 7 };
        let model = sgd_train(&template, &train, &cfg).unwrap();
        let test_acc = model.accuracy(&test).unwrap();
        let mut conf = 0.0;
        for ex in test.examples().iter().take(300) {
            let logits = model.forward_logits(&ex.image).unwrap();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
            conf += (logits[ex.label] - m).exp() / z;
        }
        let eligible = attack::eligible_indices(&model, &test).unwrap();
        let fixture = test.subset(&eligible[..200]).unwrap();
        let rep = success_rate(&model, &fixture, &AttackConfig::new(AttackMethod::Perceptual)).unwrap();
        println!(
            "noise {noise} epochs {epochs} lr {lr}: acc {test_acc:.3} p_y {:.3} perceptual rate {:.3}",
            conf / 300.0,
            rep.rate
        );

        // one-step margin across epsilon
        for eps in [2.0, 3.0, 5.0, 10.0] {
            let cfg_ss = AttackConfig {
                step_size: eps,
                cost: CostFunction::one_minus_ssim(SsimConfig::global()),
                ..AttackConfig::new(AttackMethod::SsimOneStep)
            };
            let cfg_pgd = AttackConfig { step_size: eps, ..AttackConfig::new(AttackMethod::PgdOneStep) };
            let small = test.subset(&eligible[..120]).unwrap();
            let mut both = 0;
            let (mut sh, mut sp) = (0.0, 0.0);
            for ex in small.examples() {
                let rh = ssim_one_step_attack(&model, ex, &cfg_ss).unwrap();
                let rp = pgd_one_step_attack(&model, ex, &cfg_pgd).unwrap();
                if rh.success && rp.success {
                    both += 1;
                    let sg = SsimConfig::global();
                    sh += ssim(&ex.image, &rh.adversarial, &sg).unwrap();
                    sp += ssim(&ex.image, &rp.adversarial, &sg).unwrap();
                }
            }
            if both > 0 {
                println!(
                    "  eps {eps}: both {both}/120 gSSIM hess {:.4} pgd {:.4} gap {:+.4}",
                    sh / both as f64,
                    sp / both as f64,
                    (sh - sp) / both as f64
                );
            } else {
                println!("  eps {eps}: no joint flips");
            }
        }
    }
}
