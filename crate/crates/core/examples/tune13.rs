// Scratch: final verification of the frozen fixture across criteria 3, 4, 5
// plus the fairness population pipeline at R=10.

use percadv_core::*;
use std::time::Instant;

fn main() {
    let t_all = Instant::now();
    let train = synthetic_digits(3000, 0.18, 101).unwrap();
    let test = synthetic_digits(1200, 0.18, 202).unwrap();
    let template = Model::zeroed(Architecture::Convnet, 28, 28, 10).unwrap();
    let tcfg = TrainConfig { learning_rate: 0.06, epochs: 2, batch_size: 32, seed: 7 };
    let baseline = sgd_train(&template, &train, &tcfg).unwrap();
    let eligible = attack::eligible_indices(&baseline, &test).unwrap();
    let fixture = test.subset(&eligible[..200]).unwrap();

    // criterion 3/4b: success and 1-ssim ordering across a
    let mut rates = Vec::new();
    let mut dssims = Vec::new();
    for a in [0.0, 1.0, 5.0] {
        let cfg = AttackConfig { confidence: a, ..AttackConfig::new(AttackMethod::Perceptual) };
        let rep = success_rate(&baseline, &fixture, &cfg).unwrap();
        rates.push(rep.rate);
        dssims.push(rep.mean_distances.one_minus_ssim);
    }
    println!("perceptual rates by a: {rates:?}");
    println!("mean 1-ssim by a: {dssims:?}");

    // criterion 4a: one-step comparison at eps=5
    let cfg_ss = AttackConfig {
        step_size: 5.0,
        cost: CostFunction::one_minus_ssim(SsimConfig::global()),
        ..AttackConfig::new(AttackMethod::SsimOneStep)
    };
    let cfg_pgd = AttackConfig { step_size: 5.0, ..AttackConfig::new(AttackMethod::PgdOneStep) };
    let small = test.subset(&eligible[..150]).unwrap();
    let (mut both, mut sh, mut sp) = (0, 0.0, 0.0);
    for ex in small.examples() {
        let rh = ssim_one_step_attack(&baseline, ex, &cfg_ss).unwrap();
        let rp = pgd_one_step_attack(&baseline, ex, &cfg_pgd).unwrap();
        if rh.success && rp.success {
            both += 1;
            let sg = SsimConfig::global();
            sh += ssim(&ex.image, &rh.adversarial, &sg).unwrap();
            sp += ssim(&ex.image, &rp.adversarial, &sg).unwrap();
        }
    }
    println!(
        "one-step eps=5: both {both}/150 hess {:.4} pgd {:.4} gap {:+.4}",
        sh / both as f64,
        sp / both as f64,
        (sh - sp) / both as f64
    );

    // criterion 5: defense orderings over shared fixture
    let defenses = [
        Defense::Jpeg(90),
        Defense::Jpeg(50),
        Defense::Jpeg(10),
        Defense::BitDepth(6),
        Defense::BitDepth(4),
        Defense::BitDepth(2),
    ];
    let t = Instant::now();
    let mut by_a = Vec::new();
    for a in [0.0, 1.0, 5.0] {
        let cfg = AttackConfig { confidence: a, ..AttackConfig::new(AttackMethod::Perceptual) };
        let rates = defense_sweep(&baseline, &fixture, &cfg, &defenses).unwrap();
        println!(
            "a={a}: {:?}",
            rates.iter().map(|(d, r)| format!("{:?}={r:.3}", d)).collect::<Vec<_>>()
        );
        by_a.push(rates);
    }
    println!("defense sweep time {:?}", t.elapsed());
    for j in 0..defenses.len() {
        let (r0, r1, r5) = (by_a[0][j].1, by_a[1][j].1, by_a[2][j].1);
        println!(
            "  {:?}: a5 {:.3} >= a1 {:.3} >= a0 {:.3} : {}",
            defenses[j],
            r5,
            r1,
            r0,
            r5 >= r1 && r1 >= r0
        );
    }

    // criterion 7 pipeline at R=10
    let t = Instant::now();
    let base_train = synthetic_digits(1600, 0.05, 301).unwrap();
    let base_eval = synthetic_digits(2400, 0.05, 302).unwrap();
    let gtrain = make_grouped_dataset(&base_train, 10, 1.0, 0.6, 55).unwrap();
    let geval = make_grouped_dataset(&base_eval, 10, 1.0, 0.6, 56).unwrap();
    let mlp_template = Model::zeroed(Architecture::Mlp, 28, 28, 10).unwrap();
    let mcfg = TrainConfig { learning_rate: 0.1, epochs: 3, batch_size: 32, seed: 9 };
    let fair_baseline = sgd_train(&mlp_template, &gtrain.dataset, &mcfg).unwrap();
    let (records, _) = group_accuracy(&fair_baseline, &geval.dataset, &geval.meta).unwrap();
    let gls = gls_fit(&records).unwrap();
    println!("fairness baseline: beta {:.4} F0 {:.2} p {:.2e}", gls.beta, gls.f0, gls.p_value);

    let sub: Vec<usize> = (0..800).collect();
    let gen_base = gtrain.dataset.subset(&sub).unwrap();
    let pcfg = DroConfig {
        t1: 2,
        t2: 3,
        learning_rate: 0.03,
        run_count: 10,
        ..DroConfig::new(AttackConfig::new(AttackMethod::Perceptual))
    };
    let gcfg = DroConfig {
        attack: AttackConfig::new(AttackMethod::PgdIterative),
        ..pcfg.clone()
    };
    let pout = generate_robust_dataset(&fair_baseline, &gen_base, &pcfg, 21).unwrap();
    let gout = generate_robust_dataset(&fair_baseline, &gen_base, &gcfg, 22).unwrap();
    let ppop = sample_model_population(&fair_baseline, &pout.dataset, &pcfg, 31).unwrap();
    let gpop = sample_model_population(&fair_baseline, &gout.dataset, &gcfg, 32).unwrap();
    let paudit = audit_population(&ppop, &geval.dataset, &geval.meta).unwrap();
    let gaudit = audit_population(&gpop, &geval.dataset, &geval.meta).unwrap();
    let pbetas: Vec<f64> = paudit.iter().map(|r| r.beta).collect();
    let gbetas: Vec<f64> = gaudit.iter().map(|r| r.beta).collect();
    let tt = two_sample_t_test(&pbetas, &gbetas, Alternative::ALessThanB).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "R=10 betas: ours mean {:.4} pgd mean {:.4}; baseline beta {:.4}; welch t {:.3} p {:.4} ({:?})",
        mean(&pbetas),
        mean(&gbetas),
        gls.beta,
        tt.t,
        tt.p_value,
        t.elapsed()
    );
    let paccs = mean(&ppop.iter().map(|m| m.accuracy(&geval.dataset).unwrap()).collect::<Vec<_>>());
    let gaccs = mean(&gpop.iter().map(|m| m.accuracy(&geval.dataset).unwrap()).collect::<Vec<_>>());
    println!("pop mean accs: ours {paccs:.3} pgd {gaccs:.3}");
    println!("total {:?}", t_all.elapsed());
}
