// Scratch: does robust-dataset coverage fix the clean-accuracy collapse?

use percadv_core::*;
use std::time::Instant;

fn main() {
    let train = synthetic_digits(3000, 0.18, 101).unwrap();
    let test = synthetic_digits(1200, 0.18, 202).unwrap();
    let template = Model::zeroed(Architecture::Convnet, 28, 28, 10).unwrap();
    let tcfg = TrainConfig { learning_rate: 0.06, epochs: 2, batch_size: 32, seed: 7 };
    let baseline = sgd_train(&template, &train, &tcfg).unwrap();
    let base_acc = baseline.accuracy(&test).unwrap();
    let eligible = attack::eligible_indices(&baseline, &test).unwrap();
    let fixture = test.subset(&eligible[..200]).unwrap();
    let atk = AttackConfig::new(AttackMethod::Perceptual);
    let base_rate = success_rate(&baseline, &fixture, &atk).unwrap().rate;
    println!("baseline: acc {base_acc:.3} rate {base_rate:.3}");

    for (n_orig, lr) in [
        (1000usize, 0.004),
        (1000, 0.008),
        (1500, 0.008),
        (1500, 0.012),
        (3000, 0.008),
    ] {
        let t = Instant::now();
        let subset: Vec<usize> = (0..n_orig).collect();
        let gen_base = train.subset(&subset).unwrap();
        let dro_cfg = DroConfig { t1: 2, t2: 3, learning_rate: lr, ..DroConfig::new(atk.clone()) };
        let out = generate_robust_dataset(&baseline, &gen_base, &dro_cfg, 11).unwrap();
        let robust = dro_train(&baseline, &out.dataset, &dro_cfg, 12).unwrap();
        let acc = robust.accuracy(&test).unwrap();
        let subset_acc = robust.accuracy(&gen_base).unwrap();
        let rate = success_rate(&robust, &fixture, &atk).map(|r| r.rate).unwrap_or(f64::NAN);
        println!(
            "dro n={n_orig} lr={lr}: test acc {acc:.3} (drop {:+.3}) gen-base acc {subset_acc:.3} rate {rate:.3} (drop {:+.3}) ({:?})",
            acc - base_acc,
            rate - base_rate,
            t.elapsed()
        );
    }
}
