// Scratch: DRO lr/N grid + stronger planted-bias fairness fixture.

use percadv_core::*;

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

    for (n_orig, lr) in [(400usize, 0.004), (400, 0.008), (400, 0.015), (200, 0.008), (200, 0.015)] {
        let subset: Vec<usize> = (0..n_orig).collect();
        let gen_base = train.subset(&subset).unwrap();
        let dro_cfg = DroConfig { t1: 2, t2: 3, learning_rate: lr, ..DroConfig::new(atk.clone()) };
        let out = generate_robust_dataset(&baseline, &gen_base, &dro_cfg, 11).unwrap();
        let robust = dro_train(&baseline, &out.dataset, &dro_cfg, 12).unwrap();
        let acc = robust.accuracy(&test).unwrap();
        let rate = success_rate(&robust, &fixture, &atk).map(|r| r.rate).unwrap_or(f64::NAN);
        println!(
            "dro n={n_orig} lr={lr}: acc {acc:.3} (drop {:+.3}) rate {rate:.3} (drop {:+.3})",
            acc - base_acc,
            rate - base_rate
        );
    }

    // fairness fixture: stronger planted noise, more groups
    for (groups, noise, eval_n) in [(10usize, 0.6, 2400usize), (10, 0.5, 2400), (12, 0.6, 2400)] {
        let base_train = synthetic_digits(1600, 0.05, 301).unwrap();
        let base_eval = synthetic_digits(eval_n, 0.05, 302).unwrap();
        let gtrain = make_grouped_dataset(&base_train, groups, 1.0, noise, 55).unwrap();
        let geval = make_grouped_dataset(&base_eval, groups, 1.0, noise, 56).unwrap();
        let mlp_template = Model::zeroed(Architecture::Mlp, 28, 28, 10).unwrap();
        let mcfg = TrainConfig { learning_rate: 0.1, epochs: 3, batch_size: 32, seed: 9 };
        let fair_baseline = sgd_train(&mlp_template, &gtrain.dataset, &mcfg).unwrap();
        let (records, _) = group_accuracy(&fair_baseline, &geval.dataset, &geval.meta).unwrap();
        let ps: Vec<String> = records.iter().map(|r| format!("{:.2}", r.p())).collect();
        let gls = gls_fit(&records).unwrap();
        println!(
            "G={groups} noise={noise}: ps [{}] beta {:.4} F0 {:.2} p {:.5}",
            ps.join(" "),
            gls.beta,
            gls.f0,
            gls.p_value
        );
    }
}
