// Scratch: DRO robustness gain and fairness pipeline measurements.

use percadv_core::*;
use std::time::Instant;

fn main() {
    // ----- criterion-6 style: DRO robustness gain on the attack fixture -----
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
    println!("baseline: acc {base_acc:.3} attack rate {base_rate:.3}");

    for (n_orig, lr, t2) in [(400usize, 0.05, 3usize), (400, 0.02, 3), (600, 0.05, 3)] {
        let t = Instant::now();
        let subset: Vec<usize> = (0..n_orig).collect();
        let gen_base = train.subset(&subset).unwrap();
        let dro_cfg = DroConfig {
            t1: 2,
            t2,
            learning_rate: lr,
            ..DroConfig::new(atk.clone())
        };
        let out = generate_robust_dataset(&baseline, &gen_base, &dro_cfg, 11).unwrap();
        let robust = dro_train(&baseline, &out.dataset, &dro_cfg, 12).unwrap();
        let acc = robust.accuracy(&test).unwrap();
        let rate = match success_rate(&robust, &fixture, &atk) {
            Ok(r) => r.rate,
            Err(e) => {
                println!("  rate eval failed: {e}");
                continue;
            }
        };
        println!(
            "dro n={n_orig} lr={lr} t2={t2}: acc {acc:.3} (drop {:+.3}) rate {rate:.3} (drop {:+.3}) M={} fails={} ({:?})",
            acc - base_acc,
            rate - base_rate,
            out.dataset.len(),
            out.attack_failures,
            t.elapsed()
        );
    }

    // ----- criterion-7 style: fairness pipeline on grouped data, mlp -----
    let t = Instant::now();
    let base_train = synthetic_digits(1600, 0.05, 301).unwrap();
    let base_eval = synthetic_digits(1600, 0.05, 302).unwrap();
    let grouped_train = make_grouped_dataset(&base_train, 8, 1.0, 0.35, 55).unwrap();
    let grouped_eval = make_grouped_dataset(&base_eval, 8, 1.0, 0.35, 55).unwrap();
    let mlp_template = Model::zeroed(Architecture::Mlp, 28, 28, 10).unwrap();
    let mcfg = TrainConfig { learning_rate: 0.1, epochs: 3, batch_size: 32, seed: 9 };
    let fair_baseline = sgd_train(&mlp_template, &grouped_train.dataset, &mcfg).unwrap();
    let (records, _) = group_accuracy(&fair_baseline, &grouped_eval.dataset, &grouped_eval.meta).unwrap();
    for r in &records {
        println!("  group {} g={:.2} n={} p={:.3}", r.group_id, r.g, r.n, r.p());
    }
    let gls = gls_fit(&records).unwrap();
    println!(
        "baseline GLS: beta {:.4} F0 {:.3} nu2 {} p {:.5} ({:?})",
        gls.beta, gls.f0, gls.nu2, gls.p_value, t.elapsed()
    );

    // DRO populations with perceptual vs pgd attacks, R=4 (quick probe)
    let t = Instant::now();
    let sub: Vec<usize> = (0..400).collect();
    let gen_base = grouped_train.dataset.subset(&sub).unwrap();
    let pcfg = DroConfig { t1: 2, t2: 3, learning_rate: 0.05, run_count: 4, ..DroConfig::new(AttackConfig::new(AttackMethod::Perceptual)) };
    let gcfg = DroConfig { attack: AttackConfig::new(AttackMethod::PgdIterative), ..pcfg.clone() };
    let pout = generate_robust_dataset(&fair_baseline, &gen_base, &pcfg, 21).unwrap();
    let gout = generate_robust_dataset(&fair_baseline, &gen_base, &gcfg, 22).unwrap();
    let ppop = sample_model_population(&fair_baseline, &pout.dataset, &pcfg, 31).unwrap();
    let gpop = sample_model_population(&fair_baseline, &gout.dataset, &gcfg, 32).unwrap();
    let paudit = audit_population(&ppop, &grouped_eval.dataset, &grouped_eval.meta).unwrap();
    let gaudit = audit_population(&gpop, &grouped_eval.dataset, &grouped_eval.meta).unwrap();
    let pbetas: Vec<f64> = paudit.iter().map(|r| r.beta).collect();
    let gbetas: Vec<f64> = gaudit.iter().map(|r| r.beta).collect();
    println!("perceptual betas: {pbetas:?}");
    println!("pgd betas:        {gbetas:?}");
    let tt = two_sample_t_test(&pbetas, &gbetas, Alternative::ALessThanB).unwrap();
    println!("welch: t {:.3} df {:.1} p {:.5} ({:?})", tt.t, tt.df, tt.p_value, t.elapsed());
    let accs: Vec<f64> = ppop.iter().map(|m| m.accuracy(&grouped_eval.dataset).unwrap()).collect();
    println!("perceptual pop accs: {accs:?}");
}
