// Scratch: final fixture selection.

use percadv_core::*;

fn main() {
    for (noise, epochs, lr, batch) in [
        (0.20, 2, 0.08, 32),
        (0.20, 2, 0.06, 32),
        (0.22, 2, 0.08, 32),
        (0.20, 2, 0.08, 64),
        (0.18, 2, 0.06, 32),
        (0.22, 2, 0.1, 64),
    ] {
        let train = synthetic_digits(3000, noise, 101).unwrap();
        let test = synthetic_digits(1200, noise, 202).unwrap();
        let template = Model::zeroed(Architecture::Convnet, 28, 28, 10).unwrap();
        let tcfg = TrainConfig { learning_rate: lr, epochs, batch_size: batch, seed: 7 };
        let model = sgd_train(&template, &train, &tcfg).unwrap();
        let acc = model.accuracy(&test).unwrap();
        let eligible = attack::eligible_indices(&model, &test).unwrap();
        let fixture = test.subset(&eligible[..200]).unwrap();
        let rep =
            success_rate(&model, &fixture, &AttackConfig::new(AttackMethod::Perceptual)).unwrap();
        println!(
            "noise {noise} epochs {epochs} lr {lr} batch {batch}: conv acc {acc:.3} rate {:.3} fails {}",
            rep.rate,
            rep.eligible - rep.attacked
        );
    }
    // big-mlp reference band
    let train10k = synthetic_digits(10_000, 0.2, 77).unwrap();
    let test10k = synthetic_digits(2_000, 0.2, 78).unwrap();
    let mlp_template = Model::zeroed(Architecture::Mlp, 28, 28, 10).unwrap();
    let mcfg = TrainConfig { learning_rate: 0.1, epochs: 3, batch_size: 32, seed: 7 };
    let mlp = sgd_train(&mlp_template, &train10k, &mcfg).unwrap();
    println!("mlp 10k: test acc {:.4}", mlp.accuracy(&test10k).unwrap());
}
