// Scratch measurement harness used while pinning fixture constants; not part
// of the shipped surface.

use percadv_core::*;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let train = synthetic_digits(3000, 0.12, 101).unwrap();
    let test = synthetic_digits(1200, 0.12, 202).unwrap();
    println!("datagen: {:?}", t0.elapsed());

    for (arch, epochs, lr) in [
        (Architecture::Mlp, 3, 0.1),
        (Architecture::Convnet, 3, 0.1),
    ] {
        let t = Instant::now();
        let template = Model::zeroed(arch, 28, 28, 10).unwrap();
        let cfg = TrainConfig { learning_rate: lr, epochs, batch_size: 32, seed: 7 };
        let model = sgd_train(&template, &train, &cfg).unwrap();
        let train_acc = model.accuracy(&train).unwrap();
        let test_acc = model.accuracy(&test).unwrap();
        // confidence: mean top softmax prob on correct test examples
        let mut conf = 0.0;
        let mut k = 0;
        for ex in test.examples().iter().take(300) {
            let logits = model.forward_logits(&ex.image).unwrap();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
            let p = (logits[ex.label] - m).exp() / z;
            conf += p;
            k += 1;
        }
        println!(
            "{}: train {train_acc:.3} test {test_acc:.3} mean p_y {:.3} ({:?})",
            arch.name(),
            conf / k as f64,
            t.elapsed()
        );

        // attack fixture: first 200 correctly classified test images
        let eligible = attack::eligible_indices(&model, &test).unwrap();
        let fixture = test.subset(&eligible[..200.min(eligible.len())]).unwrap();

        let t = Instant::now();
        let cfg_a = AttackConfig::new(AttackMethod::Perceptual);
        let rep = success_rate(&model, &fixture, &cfg_a).unwrap();
        println!(
            "  perceptual a=0: rate {:.3} ({}/{}) mean 1-ssim {:.4} l2 {:.3} ({:?})",
            rep.rate, rep.attacked, rep.eligible, rep.mean_distances.one_minus_ssim,
            rep.mean_distances.l2, t.elapsed()
        );
        for a in [1.0, 5.0] {
            let cfg_a = AttackConfig { confidence: a, ..AttackConfig::new(AttackMethod::Perceptual) };
            let rep = success_rate(&model, &fixture, &cfg_a).unwrap();
            println!(
                "  perceptual a={a}: rate {:.3} mean 1-ssim {:.4} iterations-capped?",
                rep.rate, rep.mean_distances.one_minus_ssim
            );
        }

        let t = Instant::now();
        let cfg_p = AttackConfig { step_size: 0.1, ..AttackConfig::new(AttackMethod::PgdIterative) };
        let rep = success_rate(&model, &fixture, &cfg_p).unwrap();
        println!("  pgd iter: rate {:.3} ({:?})", rep.rate, t.elapsed());

        // one-step comparison at epsilon = 10 on a 100-image fixture
        let small = test.subset(&eligible[..100.min(eligible.len())]).unwrap();
        let t = Instant::now();
        let cfg_ss = AttackConfig {
            step_size: 10.0,
            cost: CostFunction::one_minus_ssim(SsimConfig::global()),
            ..AttackConfig::new(AttackMethod::SsimOneStep)
        };
        let cfg_pgd1 = AttackConfig { step_size: 10.0, ..AttackConfig::new(AttackMethod::PgdOneStep) };
        let mut both = 0;
        let mut ssim_hess_sum = 0.0;
        let mut ssim_pgd_sum = 0.0;
        let (mut flips_h, mut flips_p) = (0, 0);
        for ex in small.examples() {
            let rh = ssim_one_step_attack(&model, ex, &cfg_ss).unwrap();
            let rp = pgd_one_step_attack(&model, ex, &cfg_pgd1).unwrap();
            if rh.success { flips_h += 1; }
            if rp.success { flips_p += 1; }
            if rh.success && rp.success {
                both += 1;
                let sg = SsimConfig::global();
                ssim_hess_sum += ssim(&ex.image, &rh.adversarial, &sg).unwrap();
                ssim_pgd_sum += ssim(&ex.image, &rp.adversarial, &sg).unwrap();
            }
        }
        println!(
            "  one-step eps=10: hess flips {flips_h}/100 pgd flips {flips_p}/100 both {both} mean gSSIM hess {:.4} pgd {:.4} ({:?})",
            ssim_hess_sum / both.max(1) as f64,
            ssim_pgd_sum / both.max(1) as f64,
            t.elapsed()
        );

        // defenses at a = {0,1,5}
        let t = Instant::now();
        for a in [0.0, 1.0, 5.0] {
            let cfg_a = AttackConfig { confidence: a, ..AttackConfig::new(AttackMethod::Perceptual) };
            let mut line = format!("  defense rates a={a}:");
            for q in [90u32, 50, 10] {
                let r = defense_success_rate(&model, &fixture, &cfg_a, Defense::Jpeg(q)).unwrap();
                line += &format!(" jpeg{q}={r:.3}");
            }
            for b in [6u32, 4, 2] {
                let r = defense_success_rate(&model, &fixture, &cfg_a, Defense::BitDepth(b)).unwrap();
                line += &format!(" bits{b}={r:.3}");
            }
            println!("{line} ({:?})", t.elapsed());
        }
    }
}
